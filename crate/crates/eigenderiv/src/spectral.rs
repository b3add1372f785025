//! Model types and the first-order perturbation formulas.
//!
//! An operator pair `(K, J)` is given in the eigenbasis of `K`: the basis
//! vector `e_i` is the coordinate vector with 1 at position `i`, `K` is the
//! diagonal eigenvalue sequence, and `J` is described by coefficients
//! `j[i][j]` expanding `J e_i = sum_j j[i][j] e_j`. All vectors live in
//! coordinates and norms are the coordinate l2 norm.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::series::{
    adaptive_sum, adaptive_sum_squares, tail_from_contributions, Neumaier, TailReport,
    TruncationPolicy,
};

pub type Scalar = Complex64;

pub const DEFAULT_GAP_MIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldTag {
    Real,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dimension {
    Finite(usize),
    Infinite,
}

impl Dimension {
    pub fn contains(&self, i: usize) -> bool {
        i >= 1
            && match self {
                Dimension::Finite(n) => i <= *n,
                Dimension::Infinite => true,
            }
    }

    pub fn as_finite(&self) -> Option<usize> {
        match self {
            Dimension::Finite(n) => Some(*n),
            Dimension::Infinite => None,
        }
    }
}

pub type LambdaFn = dyn Fn(usize) -> Scalar + Send + Sync;
pub type CoeffFn = dyn Fn(usize, usize) -> Scalar + Send + Sync;

/// The eigenvalue sequence of `K`; eigenvectors are implicit (coordinate basis).
#[derive(Clone)]
pub struct Eigensystem {
    dimension: Dimension,
    lambda: Arc<LambdaFn>,
}

impl Eigensystem {
    pub fn from_values(values: Vec<Scalar>) -> Self {
        let n = values.len();
        let values = Arc::new(values);
        Eigensystem {
            dimension: Dimension::Finite(n),
            lambda: Arc::new(move |i| values[i - 1]),
        }
    }

    pub fn from_fn<F>(dimension: Dimension, f: F) -> Self
    where
        F: Fn(usize) -> Scalar + Send + Sync + 'static,
    {
        Eigensystem {
            dimension,
            lambda: Arc::new(f),
        }
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn lambda(&self, i: usize) -> Scalar {
        (self.lambda)(i)
    }
}

/// Expansion coefficients of `J` in the eigenbasis: `get(i, j)` is `j[i][j]`,
/// where row `i` expands `J e_i`.
#[derive(Clone)]
pub struct PerturbationCoefficients {
    dimension: Dimension,
    coeff: Arc<CoeffFn>,
}

impl PerturbationCoefficients {
    pub fn from_matrix(rows: Vec<Vec<Scalar>>) -> Result<Self> {
        let n = rows.len();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "row {} has {} entries, expected {}",
                    r + 1,
                    row.len(),
                    n
                )));
            }
        }
        let rows = Arc::new(rows);
        Ok(PerturbationCoefficients {
            dimension: Dimension::Finite(n),
            coeff: Arc::new(move |i, j| {
                if i <= rows.len() && j <= rows.len() {
                    rows[i - 1][j - 1]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        })
    }

    pub fn from_fn<F>(dimension: Dimension, f: F) -> Self
    where
        F: Fn(usize, usize) -> Scalar + Send + Sync + 'static,
    {
        PerturbationCoefficients {
            dimension,
            coeff: Arc::new(f),
        }
    }

    pub fn dimension(&self) -> Dimension {
        self.dimension
    }

    pub fn get(&self, i: usize, j: usize) -> Scalar {
        (self.coeff)(i, j)
    }
}

/// The pair `(K, J)` together with the field tag and the gap tolerance.
#[derive(Clone)]
pub struct PerturbedModel {
    field: FieldTag,
    eigensystem: Eigensystem,
    perturbation: PerturbationCoefficients,
    gap_min: f64,
    coeff_monotone: bool,
}

impl PerturbedModel {
    /// Finite model from explicit eigenvalues and a square coefficient matrix.
    /// Eigenvalues must be pairwise distinct relative to the gap tolerance.
    pub fn dense(
        field: FieldTag,
        eigenvalues: Vec<Scalar>,
        coefficients: Vec<Vec<Scalar>>,
    ) -> Result<Self> {
        Self::dense_with_gap_min(field, eigenvalues, coefficients, DEFAULT_GAP_MIN)
    }

    pub fn dense_with_gap_min(
        field: FieldTag,
        eigenvalues: Vec<Scalar>,
        coefficients: Vec<Vec<Scalar>>,
        gap_min: f64,
    ) -> Result<Self> {
        let n = eigenvalues.len();
        if coefficients.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} eigenvalues but {} coefficient rows",
                n,
                coefficients.len()
            )));
        }
        for (a, &la) in eigenvalues.iter().enumerate() {
            for (b, &lb) in eigenvalues.iter().enumerate().skip(a + 1) {
                let gap = (la - lb).norm();
                let threshold = gap_min * 1f64.max(la.norm()).max(lb.norm());
                if gap < threshold {
                    return Err(Error::DegenerateGap {
                        i: a + 1,
                        j: b + 1,
                        gap,
                        threshold,
                    });
                }
            }
        }
        Ok(PerturbedModel {
            field,
            eigensystem: Eigensystem::from_values(eigenvalues),
            perturbation: PerturbationCoefficients::from_matrix(coefficients)?,
            gap_min,
            coeff_monotone: false,
        })
    }

    /// Countably infinite model from eigenvalue and coefficient generators.
    /// Both functions must be pure and deterministic.
    pub fn generator<L, C>(field: FieldTag, lambda: L, coeff: C) -> Self
    where
        L: Fn(usize) -> Scalar + Send + Sync + 'static,
        C: Fn(usize, usize) -> Scalar + Send + Sync + 'static,
    {
        PerturbedModel {
            field,
            eigensystem: Eigensystem::from_fn(Dimension::Infinite, lambda),
            perturbation: PerturbationCoefficients::from_fn(Dimension::Infinite, coeff),
            gap_min: DEFAULT_GAP_MIN,
            coeff_monotone: false,
        }
    }

    pub fn from_parts(
        field: FieldTag,
        eigensystem: Eigensystem,
        perturbation: PerturbationCoefficients,
    ) -> Result<Self> {
        if eigensystem.dimension() != perturbation.dimension() {
            return Err(Error::DimensionMismatch(
                "eigensystem and perturbation disagree on dimension".into(),
            ));
        }
        Ok(PerturbedModel {
            field,
            eigensystem,
            perturbation,
            gap_min: DEFAULT_GAP_MIN,
            coeff_monotone: false,
        })
    }

    pub fn with_gap_min(mut self, gap_min: f64) -> Self {
        self.gap_min = gap_min;
        self
    }

    /// Declares that `|j[i][j]|` is eventually non-increasing in `j`; lets
    /// coefficient-supremum scans report convergence.
    pub fn with_monotone_coefficients(mut self, flag: bool) -> Self {
        self.coeff_monotone = flag;
        self
    }

    pub fn field(&self) -> FieldTag {
        self.field
    }

    pub fn dimension(&self) -> Dimension {
        self.eigensystem.dimension()
    }

    pub fn gap_min(&self) -> f64 {
        self.gap_min
    }

    pub fn coeff_monotone(&self) -> bool {
        self.coeff_monotone
    }

    pub fn eigensystem(&self) -> &Eigensystem {
        &self.eigensystem
    }

    pub fn perturbation(&self) -> &PerturbationCoefficients {
        &self.perturbation
    }

    pub fn lambda(&self, i: usize) -> Result<Scalar> {
        self.check_index(i)?;
        Ok(self.eigensystem.lambda(i))
    }

    pub(crate) fn lambda_unchecked(&self, i: usize) -> Scalar {
        self.eigensystem.lambda(i)
    }

    pub(crate) fn coeff_unchecked(&self, i: usize, j: usize) -> Scalar {
        self.perturbation.get(i, j)
    }

    pub fn gap_threshold(&self, la: Scalar, lb: Scalar) -> f64 {
        self.gap_min * 1f64.max(la.norm()).max(lb.norm())
    }

    pub fn check_index(&self, i: usize) -> Result<()> {
        if self.dimension().contains(i) {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                dimension: self.dimension().as_finite().unwrap_or(usize::MAX),
            })
        }
    }
}

/// A vector in eigenbasis coordinates with finite stored support.
/// Absent indices are coefficient zero; exact zeros are not stored.
#[derive(Clone, Debug)]
pub struct SeriesVector {
    coeffs: BTreeMap<usize, Scalar>,
    tail: TailReport,
}

impl SeriesVector {
    pub fn zero() -> Self {
        SeriesVector {
            coeffs: BTreeMap::new(),
            tail: TailReport::exact(0),
        }
    }

    pub fn unit(i: usize) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(i, Complex64::new(1.0, 0.0));
        SeriesVector {
            coeffs,
            tail: TailReport::exact(1),
        }
    }

    pub fn from_coefficients<I>(entries: I, tail: TailReport) -> Self
    where
        I: IntoIterator<Item = (usize, Scalar)>,
    {
        let coeffs = entries
            .into_iter()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .collect();
        SeriesVector { coeffs, tail }
    }

    pub fn coefficient(&self, j: usize) -> Scalar {
        self.coeffs
            .get(&j)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (usize, Scalar)> + '_ {
        self.coeffs.iter().map(|(&j, &c)| (j, c))
    }

    pub fn support_len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn support_max(&self) -> usize {
        self.coeffs.keys().next_back().copied().unwrap_or(0)
    }

    pub fn tail(&self) -> &TailReport {
        &self.tail
    }

    /// Coordinate l2 norm (the paper's L2 norm under an orthonormal basis).
    pub fn norm(&self) -> f64 {
        let mut acc = Neumaier::default();
        for c in self.coeffs.values() {
            acc.add(c.norm_sqr());
        }
        acc.value().sqrt()
    }

    pub fn scaled(&self, c: Scalar) -> SeriesVector {
        SeriesVector::from_coefficients(
            self.coeffs.iter().map(|(&j, &v)| (j, v * c)),
            self.tail.clone(),
        )
    }
}

pub fn vector_norm(v: &SeriesVector) -> f64 {
    v.norm()
}

/// `(Lambda_i, Delta_i)` for one index, with the policy that produced it.
#[derive(Clone, Debug)]
pub struct EigenderivativeResult {
    pub index: usize,
    pub lambda_derivative: Scalar,
    pub delta: SeriesVector,
    pub policy_used: TruncationPolicy,
}

/// Outcome of evaluating the residual identity at step `h`.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub index: usize,
    pub h: Scalar,
    pub defect: f64,
    pub second_order_norm: f64,
    pub exactness_scale: f64,
}

/// `j[i][j]`, range-checked.
pub fn coefficient(model: &PerturbedModel, i: usize, j: usize) -> Result<Scalar> {
    model.check_index(i)?;
    model.check_index(j)?;
    Ok(model.coeff_unchecked(i, j))
}

/// `Lambda_i = j[i][i]`, exactly; no series involved.
pub fn lambda_derivative(model: &PerturbedModel, i: usize) -> Result<Scalar> {
    model.check_index(i)?;
    Ok(model.coeff_unchecked(i, i))
}

/// `c[i][j] = j[i][j] / (lambda_i - lambda_j)`, with the gap checked against
/// the model threshold.
fn delta_coefficient(model: &PerturbedModel, i: usize, li: Scalar, j: usize) -> Result<Scalar> {
    let lj = model.lambda_unchecked(j);
    let gap = li - lj;
    let threshold = model.gap_threshold(li, lj);
    if gap.norm() < threshold {
        return Err(Error::DegenerateGap {
            i,
            j,
            gap: gap.norm(),
            threshold,
        });
    }
    Ok(model.coeff_unchecked(i, j) / gap)
}

/// Runs `f` inside an adaptive sum, capturing the first gap error raised by
/// any term. The closure sees zero in place of a failed term; the error is
/// surfaced afterwards.
fn with_gap_capture<T>(
    f: impl FnOnce(&dyn Fn(usize, Scalar) -> Scalar) -> T,
    eval: impl Fn(usize) -> Result<Scalar>,
) -> Result<T> {
    let captured: RefCell<Option<Error>> = RefCell::new(None);
    let guard = |j: usize, _zero: Scalar| -> Scalar {
        match eval(j) {
            Ok(v) => v,
            Err(e) => {
                captured.borrow_mut().get_or_insert(e);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let out = f(&guard);
    match captured.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// `Delta_i = sum_{j != i} c[i][j] e_j`. For finite dimension the sum is
/// exact over all `N - 1` terms; otherwise the window is chosen by
/// stabilization of the squared-coefficient series. Non-convergence is
/// flagged in the tail report, not an error.
pub fn delta_derivative(
    model: &PerturbedModel,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<EigenderivativeResult> {
    model.check_index(i)?;
    let li = model.lambda_unchecked(i);
    let (entries, tail) = match model.dimension() {
        Dimension::Finite(n) => {
            let mut entries = Vec::with_capacity(n.saturating_sub(1));
            for j in 1..=n {
                if j == i {
                    continue;
                }
                entries.push((j, delta_coefficient(model, i, li, j)?));
            }
            (entries, TailReport::exact(n))
        }
        Dimension::Infinite => {
            let tail = with_gap_capture(
                |guard| {
                    adaptive_sum_squares(
                        |j| guard(j, Complex64::new(0.0, 0.0)),
                        Some(i),
                        policy,
                    )
                    .1
                },
                |j| delta_coefficient(model, i, li, j),
            )?;
            let mut entries = Vec::new();
            for j in 1..=tail.terms_used {
                if j == i {
                    continue;
                }
                entries.push((j, delta_coefficient(model, i, li, j)?));
            }
            (entries, tail)
        }
    };
    Ok(EigenderivativeResult {
        index: i,
        lambda_derivative: model.coeff_unchecked(i, i),
        delta: SeriesVector::from_coefficients(entries, tail),
        policy_used: policy.clone(),
    })
}

/// Inner sum for one output coordinate of `J v`, exact over the stored
/// support of `v`.
fn apply_coordinate(model: &PerturbedModel, v: &SeriesVector, m: usize) -> Scalar {
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for (j, vj) in v.coefficients() {
        let t = vj * model.coeff_unchecked(j, m);
        re.add(t.re);
        im.add(t.im);
    }
    Complex64::new(re.value(), im.value())
}

/// `J v` computed coordinate-wise: output coefficient at `m` is
/// `sum_j v_j j[j][m]`, never a sum of whole vectors `J e_j`.
pub fn apply_operator(
    model: &PerturbedModel,
    v: &SeriesVector,
    policy: &TruncationPolicy,
) -> SeriesVector {
    if v.support_len() == 0 {
        return SeriesVector::zero();
    }
    match model.dimension() {
        Dimension::Finite(n) => {
            let entries: Vec<(usize, Scalar)> = (1..=n)
                .map(|m| (m, apply_coordinate(model, v, m)))
                .collect();
            SeriesVector::from_coefficients(entries, TailReport::exact(n))
        }
        Dimension::Infinite => {
            let (_, tail) =
                adaptive_sum_squares(|m| apply_coordinate(model, v, m), None, policy);
            let window: Vec<usize> = (1..=tail.terms_used).collect();
            let entries = par::map_collect(window, |m| (m, apply_coordinate(model, v, m)));
            SeriesVector::from_coefficients(entries, tail)
        }
    }
}

/// One coordinate of the second-order vector `S_i`:
/// `sum_{j != i} c[i][j] j[j][m]  -  [m != i] c[i][m] j[i][i]`,
/// with the inner sum truncated under `policy` for infinite models.
pub fn second_order_coefficient(
    model: &PerturbedModel,
    i: usize,
    m: usize,
    policy: &TruncationPolicy,
) -> Result<(Scalar, TailReport)> {
    model.check_index(i)?;
    model.check_index(m)?;
    let li = model.lambda_unchecked(i);
    let (sum, tail) = match model.dimension() {
        Dimension::Finite(n) => {
            let mut re = Neumaier::default();
            let mut im = Neumaier::default();
            for j in 1..=n {
                if j == i {
                    continue;
                }
                let t = delta_coefficient(model, i, li, j)? * model.coeff_unchecked(j, m);
                re.add(t.re);
                im.add(t.im);
            }
            (Complex64::new(re.value(), im.value()), TailReport::exact(n))
        }
        Dimension::Infinite => with_gap_capture(
            |guard| adaptive_sum(|j| guard(j, Complex64::new(0.0, 0.0)), Some(i), policy),
            |j| {
                delta_coefficient(model, i, li, j).map(|c| c * model.coeff_unchecked(j, m))
            },
        )?,
    };
    let value = if m != i {
        sum - delta_coefficient(model, i, li, m)? * model.coeff_unchecked(i, i)
    } else {
        sum
    };
    Ok((value, tail))
}

/// The full `S_i` vector (without the `h^2` factor): the double series is
/// evaluated coefficient-wise, outer over the output coordinate `m`, inner
/// over `j`. For infinite models the outer window matches the window the
/// `Delta_i` series settles on under the same policy; each summand vector
/// `(J - j[i][i]) e_j` may have infinite norm, so only this regrouped form
/// is computable.
pub fn second_order_term(
    model: &PerturbedModel,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<SeriesVector> {
    model.check_index(i)?;
    match model.dimension() {
        Dimension::Finite(n) => {
            let mut entries = Vec::with_capacity(n);
            for m in 1..=n {
                entries.push((m, second_order_coefficient(model, i, m, policy)?.0));
            }
            Ok(SeriesVector::from_coefficients(
                entries,
                TailReport::exact(n),
            ))
        }
        Dimension::Infinite => {
            let delta = delta_derivative(model, i, policy)?;
            let window: Vec<usize> = (1..=delta.delta.tail().terms_used).collect();
            let computed = par::map_collect(window, |m| {
                second_order_coefficient(model, i, m, policy).map(|(v, t)| (m, v, t))
            });
            let mut entries = Vec::with_capacity(computed.len());
            let mut inner_tail: Option<TailReport> = None;
            let mut contributions = Vec::with_capacity(computed.len());
            for item in computed {
                let (m, v, t) = item?;
                contributions.push(v.norm_sqr());
                entries.push((m, v));
                inner_tail = Some(match inner_tail {
                    Some(prev) => prev.combine(&t),
                    None => t,
                });
            }
            let outer = tail_from_contributions(&contributions, policy);
            let tail = match inner_tail {
                Some(inner) => TailReport {
                    terms_used: outer.terms_used,
                    last_block_delta: outer.last_block_delta,
                    converged: outer.converged && inner.converged,
                    monotone_tail_bound: None,
                    block_ratio: outer.block_ratio,
                },
                None => outer,
            };
            Ok(SeriesVector::from_coefficients(entries, tail))
        }
    }
}

/// Evaluates the residual identity at step `h` in coordinates:
/// `defect = ||(K + hJ)(e_i + h Delta_i) - (lambda_i + h Lambda_i)(e_i + h Delta_i) - h^2 S_i||`
/// over the truncation window. Exact algebra at finite dimension, so the
/// defect there is pure roundoff.
pub fn residual_check(
    model: &PerturbedModel,
    i: usize,
    h: Scalar,
    policy: &TruncationPolicy,
) -> Result<ResidualReport> {
    model.check_index(i)?;
    let li = model.lambda_unchecked(i);
    let big_lambda = model.coeff_unchecked(i, i);

    let deriv = delta_derivative(model, i, policy)?;
    let delta = &deriv.delta;

    // v = e_i + h * Delta_i
    let v = SeriesVector::from_coefficients(
        delta
            .coefficients()
            .map(|(j, c)| (j, c * h))
            .chain(std::iter::once((i, Complex64::new(1.0, 0.0)))),
        delta.tail().clone(),
    );
    // Force the unit coordinate even when h*Delta has no entry at i.
    debug_assert_eq!(v.coefficient(i), Complex64::new(1.0, 0.0));

    let window_end = match model.dimension() {
        Dimension::Finite(n) => n,
        Dimension::Infinite => delta.tail().terms_used,
    };
    let window: Vec<usize> = (1..=window_end).collect();

    let s_entries = par::map_collect(window.clone(), |m| {
        second_order_coefficient(model, i, m, policy).map(|(val, _)| (m, val))
    });
    let mut s_map: BTreeMap<usize, Scalar> = BTreeMap::new();
    for e in s_entries {
        let (m, val) = e?;
        s_map.insert(m, val);
    }
    let s_vec = SeriesVector::from_coefficients(
        s_map.iter().map(|(&m, &c)| (m, c)),
        delta.tail().clone(),
    );
    let second_order_norm = s_vec.norm();

    let h2 = h * h;
    let shifted = li + h * big_lambda;
    let v_ref = &v;
    let defect_sq: Vec<f64> = par::map_collect(window, |m| {
        let lm = model.lambda_unchecked(m);
        let vm = v_ref.coefficient(m);
        let jv = apply_coordinate(model, v_ref, m);
        let r = lm * vm + h * jv
            - shifted * vm
            - h2 * s_map.get(&m).copied().unwrap_or(Complex64::new(0.0, 0.0));
        r.norm_sqr()
    });
    let mut acc = Neumaier::default();
    for d in defect_sq {
        acc.add(d);
    }
    let defect = acc.value().sqrt();

    // Supremum proxy over the coefficients actually touched.
    let mut coeff_sup = big_lambda.norm();
    for (j, _) in delta.coefficients() {
        coeff_sup = coeff_sup.max(model.coeff_unchecked(i, j).norm());
    }
    let exactness_scale =
        (1.0 + h.norm()).powi(2) * (1.0 + delta.norm()) * (1.0 + li.norm() + coeff_sup);

    Ok(ResidualReport {
        index: i,
        h,
        defect,
        second_order_norm,
        exactness_scale,
    })
}
