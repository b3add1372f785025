//! Existence checks: the definition's two convergence requirements and the
//! two sufficient conditions with their explicit bounds as certificates.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{adaptive_sum, TailReport, Trend, TruncationPolicy};
use crate::spectral::{
    second_order_coefficient, delta_derivative, Dimension, PerturbationCoefficients,
    PerturbedModel, Scalar, SeriesVector,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateKind {
    DefinitionCheck,
    Prop1,
    Prop2,
}

/// Satisfied / Violated are decided by block behavior: a series whose blocks
/// keep growing is Violated; one that merely failed to stabilize within
/// `max_terms` is Inconclusive (an algorithm cannot prove divergence).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CertificateStatus {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub status: CertificateStatus,
    pub gap_sum: Option<f64>,
    pub coeff_sup: Option<f64>,
    pub operator_norm_bound: Option<f64>,
    pub second_order_bound: Option<f64>,
    pub notes: String,
}

fn trend_status(trend: Trend) -> CertificateStatus {
    match trend {
        Trend::Stabilized | Trend::Decaying => CertificateStatus::Satisfied,
        Trend::Growing => CertificateStatus::Violated,
        Trend::Unclear => CertificateStatus::Inconclusive,
    }
}

/// `sum_{j != i} 1 / |lambda_i - lambda_j|`, the denominator series of
/// Proposition 1.
pub fn gap_sum(
    model: &PerturbedModel,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<(f64, TailReport)> {
    model.check_index(i)?;
    let li = model.lambda_unchecked(i);
    let gap_term = |j: usize| -> Result<f64> {
        let lj = model.lambda_unchecked(j);
        let gap = (li - lj).norm();
        let threshold = model.gap_threshold(li, lj);
        if gap < threshold {
            return Err(Error::DegenerateGap {
                i,
                j,
                gap,
                threshold,
            });
        }
        Ok(1.0 / gap)
    };
    match model.dimension() {
        Dimension::Finite(n) => {
            let mut acc = crate::series::Neumaier::default();
            for j in 1..=n {
                if j == i {
                    continue;
                }
                acc.add(gap_term(j)?);
            }
            Ok((acc.value(), TailReport::exact(n)))
        }
        Dimension::Infinite => {
            let first_err: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
            let (sum, tail) = adaptive_sum(
                |j| match gap_term(j) {
                    Ok(v) => Complex64::new(v, 0.0),
                    Err(e) => {
                        first_err.borrow_mut().get_or_insert(e);
                        Complex64::new(0.0, 0.0)
                    }
                },
                Some(i),
                policy,
            );
            match first_err.into_inner() {
                Some(e) => Err(e),
                None => Ok((sum.re, tail)),
            }
        }
    }
}

/// Running maximum of `|j[i][j]|` over the policy window. The report says
/// converged only when the dimension is finite or the model declares its
/// coefficients eventually non-increasing; otherwise the supremum is only a
/// lower witness.
pub fn coefficient_sup(
    model: &PerturbedModel,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<(f64, TailReport)> {
    model.check_index(i)?;
    match model.dimension() {
        Dimension::Finite(n) => {
            let mut sup: f64 = 0.0;
            for j in 1..=n {
                sup = sup.max(model.coeff_unchecked(i, j).norm());
            }
            Ok((sup, TailReport::exact(n)))
        }
        Dimension::Infinite => {
            let mut sup: f64 = 0.0;
            let mut window = policy.initial_terms.max(1).min(policy.max_terms);
            let mut next = 1usize;
            loop {
                let mut changed = false;
                for j in next..=window {
                    let v = model.coeff_unchecked(i, j).norm();
                    if v > sup {
                        sup = v;
                        changed = true;
                    }
                }
                next = window + 1;
                if (!changed && model.coeff_monotone()) || window >= policy.max_terms {
                    break;
                }
                window = window
                    .saturating_mul(policy.growth_factor.max(2))
                    .min(policy.max_terms);
            }
            Ok((
                sup,
                TailReport {
                    terms_used: next - 1,
                    last_block_delta: 0.0,
                    converged: model.coeff_monotone(),
                    monotone_tail_bound: None,
                    block_ratio: None,
                },
            ))
        }
    }
}

/// Checks the two convergence requirements of the definition directly:
/// (a) the `Delta_i` series norm-converges in coordinates, and
/// (b) every probed coordinate series of `S_i` stabilizes (each summand
/// vector may have infinite norm; only the per-coordinate regrouped sums
/// are testable). Also records the stronger absolute-convergence signal
/// `sum |c[i][j]|` for diagnostics.
pub fn definition_check(
    model: &PerturbedModel,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<Certificate> {
    model.check_index(i)?;
    let li = model.lambda_unchecked(i);

    let deriv = delta_derivative(model, i, policy)?;
    let delta_trend = deriv.delta.tail().trend();

    // Absolute-convergence diagnostic on sum |c[i][j]|.
    let abs_trend = match model.dimension() {
        Dimension::Finite(_) => Trend::Stabilized,
        Dimension::Infinite => {
            let (_, tail) = adaptive_sum(
                |j| {
                    let lj = model.lambda_unchecked(j);
                    let gap = li - lj;
                    Complex64::new(model.coeff_unchecked(i, j).norm() / gap.norm(), 0.0)
                },
                Some(i),
                policy,
            );
            tail.trend()
        }
    };

    // Probe the per-coordinate S series on a prefix of the window.
    let probe_end = match model.dimension() {
        Dimension::Finite(n) => n,
        Dimension::Infinite => deriv.delta.tail().terms_used.min(32),
    };
    let mut worst = Trend::Stabilized;
    for m in 1..=probe_end {
        let (_, tail) = second_order_coefficient(model, i, m, policy)?;
        let t = tail.trend();
        worst = worse_trend(worst, t);
        if worst == Trend::Growing {
            break;
        }
    }

    let status = match (trend_status(delta_trend), trend_status(worst)) {
        (CertificateStatus::Violated, _) | (_, CertificateStatus::Violated) => {
            CertificateStatus::Violated
        }
        (CertificateStatus::Satisfied, CertificateStatus::Satisfied) => {
            CertificateStatus::Satisfied
        }
        _ => CertificateStatus::Inconclusive,
    };

    Ok(Certificate {
        kind: CertificateKind::DefinitionCheck,
        status,
        gap_sum: None,
        coeff_sup: None,
        operator_norm_bound: None,
        second_order_bound: None,
        notes: format!(
            "delta series {:?}; S coordinate series {:?}; absolute convergence of sum|c| {:?}",
            delta_trend, worst, abs_trend
        ),
    })
}

fn worse_trend(a: Trend, b: Trend) -> Trend {
    use Trend::*;
    match (a, b) {
        (Growing, _) | (_, Growing) => Growing,
        (Unclear, _) | (_, Unclear) => Unclear,
        (Decaying, _) | (_, Decaying) => Decaying,
        _ => Stabilized,
    }
}

/// Proposition 1 as a certificate: satisfied when the gap sum converges and
/// the coefficient supremum is finite, with the proof's final majorant
/// `(||J|| + sup|j[i][j]|) * sup|j[i][j]| * gap_sum` recorded.
pub fn prop1_certificate(
    model: &PerturbedModel,
    i: usize,
    operator_norm_bound: f64,
    policy: &TruncationPolicy,
) -> Result<Certificate> {
    let (gaps, gap_tail) = gap_sum(model, i, policy)?;
    let (sup, sup_tail) = coefficient_sup(model, i, policy)?;
    let gap_status = trend_status(gap_tail.trend());
    let sup_ok = sup_tail.converged;
    let status = match gap_status {
        CertificateStatus::Violated => CertificateStatus::Violated,
        CertificateStatus::Satisfied if sup_ok => CertificateStatus::Satisfied,
        _ => CertificateStatus::Inconclusive,
    };
    let second_order_bound = if status == CertificateStatus::Satisfied {
        Some((operator_norm_bound + sup) * sup * gaps)
    } else {
        None
    };
    Ok(Certificate {
        kind: CertificateKind::Prop1,
        status,
        gap_sum: Some(gaps),
        coeff_sup: Some(sup),
        operator_norm_bound: Some(operator_norm_bound),
        second_order_bound,
        notes: format!(
            "gap series {:?}; coefficient supremum {}",
            gap_tail.trend(),
            if sup_ok { "certified" } else { "witness only" }
        ),
    })
}

/// Hilbert-space construction of Proposition 2: reads off `j[i][j]` as
/// coordinate `j` of `J e_i` (the inner product `<J e_i, e_j>` under
/// orthonormal coordinates, linear in the first argument).
pub fn coefficients_from_application<F>(
    apply: F,
    dimension: Dimension,
) -> Result<PerturbationCoefficients>
where
    F: Fn(usize) -> SeriesVector + Send + Sync + 'static,
{
    if let Dimension::Finite(n) = dimension {
        // Validate every column fits, and freeze the finite matrix.
        let mut rows = Vec::with_capacity(n);
        for i in 1..=n {
            let v = apply(i);
            if v.support_max() > n {
                return Err(Error::DimensionMismatch(format!(
                    "J e_{} has a component at coordinate {} beyond dimension {}",
                    i,
                    v.support_max(),
                    n
                )));
            }
            rows.push((1..=n).map(|j| v.coefficient(j)).collect::<Vec<Scalar>>());
        }
        return PerturbationCoefficients::from_matrix(rows);
    }
    Ok(PerturbationCoefficients::from_fn(dimension, move |i, j| {
        apply(i).coefficient(j)
    }))
}

/// Proposition 2 as a certificate: for a bounded `J` on a Hilbert space the
/// coefficient supremum is automatically at most `||J||`, so only the gap
/// sum is at stake.
pub fn prop2_certificate(
    model: &PerturbedModel,
    i: usize,
    operator_norm_bound: f64,
    policy: &TruncationPolicy,
) -> Result<Certificate> {
    let (gaps, gap_tail) = gap_sum(model, i, policy)?;
    let status = trend_status(gap_tail.trend());
    let second_order_bound = if status == CertificateStatus::Satisfied {
        Some((operator_norm_bound + operator_norm_bound) * operator_norm_bound * gaps)
    } else {
        None
    };
    Ok(Certificate {
        kind: CertificateKind::Prop2,
        status,
        gap_sum: Some(gaps),
        coeff_sup: Some(operator_norm_bound),
        operator_norm_bound: Some(operator_norm_bound),
        second_order_bound,
        notes: format!(
            "gap series {:?}; Lambda_i = <J e_i, e_i> = j[i][i]; sup_j |<J e_i, e_j>| <= ||J||",
            gap_tail.trend()
        ),
    })
}
