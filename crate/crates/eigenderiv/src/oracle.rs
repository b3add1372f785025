//! Brute-force validation on finite dense truncations: follow the actual
//! perturbed eigenpair of `K + hJ` with a bordered Newton solve and confirm
//! `Lambda_i` and `Delta_i` are the h -> 0 derivatives via central
//! differences.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::par;
use crate::series::{TailReport, TruncationPolicy};
use crate::spectral::{
    delta_derivative, lambda_derivative, FieldTag, PerturbedModel, Scalar, SeriesVector,
};

/// Finite section of a model: the upper-left `M x M` restriction.
#[derive(Clone, Debug)]
pub struct DenseModel {
    pub lambda: Vec<Scalar>,
    pub jmat: Vec<Vec<Scalar>>,
    pub gap_min: f64,
}

impl DenseModel {
    pub fn size(&self) -> usize {
        self.lambda.len()
    }

    /// View as a `PerturbedModel` so the analytic formulas run on the same data.
    pub fn to_perturbed(&self, field: FieldTag) -> Result<PerturbedModel> {
        PerturbedModel::dense_with_gap_min(
            field,
            self.lambda.clone(),
            self.jmat.clone(),
            self.gap_min,
        )
    }

    /// Matrix of `K + hJ` acting on coordinate vectors. Row `i` of `jmat`
    /// expands `J e_i`, so the operator matrix is the transpose of `jmat`
    /// plus the eigenvalue diagonal.
    fn operator_matrix(&self, h: Scalar) -> DMatrix<Scalar> {
        let n = self.size();
        DMatrix::from_fn(n, n, |r, c| {
            let diag = if r == c {
                self.lambda[r]
            } else {
                Complex64::new(0.0, 0.0)
            };
            diag + h * self.jmat[c][r]
        })
    }
}

#[derive(Clone, Debug)]
pub struct PerturbedEigenpair {
    pub h: Scalar,
    pub eigenvalue: Scalar,
    /// Normalized so coordinate `i` equals exactly 1.
    pub eigenvector: Vec<Scalar>,
    pub iterations: usize,
    pub residual_norm: f64,
}

#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub rows: Vec<(f64, f64, f64)>,
    pub fitted_order_lambda: f64,
    pub fitted_order_delta: f64,
}

fn check_dense_index(dense: &DenseModel, i: usize) -> Result<()> {
    if i == 0 || i > dense.size() {
        return Err(Error::IndexOutOfRange {
            index: i,
            dimension: dense.size(),
        });
    }
    Ok(())
}

pub fn default_newton_tol(lambda_i: Scalar) -> f64 {
    1e-12 * (1.0 + lambda_i.norm())
}

/// Finite section of any model: `lambda[k] = lambda_k`, `jmat[i][j] = j[i][j]`
/// for indices up to `M`.
pub fn truncate_model(model: &PerturbedModel, m: usize) -> Result<DenseModel> {
    if m < 2 {
        return Err(Error::DimensionMismatch(format!(
            "truncation dimension must be at least 2, got {m}"
        )));
    }
    model.check_index(m)?;
    let lambda: Vec<Scalar> = (1..=m).map(|k| model.lambda_unchecked(k)).collect();
    for (a, &la) in lambda.iter().enumerate() {
        for (b, &lb) in lambda.iter().enumerate().skip(a + 1) {
            let gap = (la - lb).norm();
            let threshold = model.gap_threshold(la, lb);
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
    let jmat = (1..=m)
        .map(|i| (1..=m).map(|j| model.coeff_unchecked(i, j)).collect())
        .collect();
    Ok(DenseModel {
        lambda,
        jmat,
        gap_min: model.gap_min(),
    })
}

/// Newton iteration on the bordered system
/// `F(v, mu) = ((K + hJ)v - mu v, v_i - 1) = 0`, started at `(e_i, lambda_i)`.
/// Targets the eigenpair branch continuously connected to the unperturbed one.
pub fn perturbed_eigenpair(
    dense: &DenseModel,
    i: usize,
    h: Scalar,
    newton_tol: f64,
) -> Result<PerturbedEigenpair> {
    let n = dense.size();
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange {
            index: i,
            dimension: n,
        });
    }
    let a = dense.operator_matrix(h);
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);

    let mut v = DVector::from_fn(n, |r, _| if r == i - 1 { one } else { zero });
    let mut mu = dense.lambda[i - 1];

    let max_iters = 50;
    let mut residual = f64::INFINITY;
    for iter in 0..=max_iters {
        let resid = &a * &v - &v * mu;
        residual = resid.norm();
        if residual <= newton_tol * (1.0 + mu.norm()) {
            // Pin the normalization coordinate to exactly 1.
            let scale = v[i - 1];
            if scale == zero {
                return Err(Error::SingularBorderedSystem);
            }
            let eigenvector: Vec<Scalar> = v.iter().map(|&x| x / scale).collect();
            let mut eigenvector = eigenvector;
            eigenvector[i - 1] = one;
            return Ok(PerturbedEigenpair {
                h,
                eigenvalue: mu,
                eigenvector,
                iterations: iter,
                residual_norm: residual,
            });
        }
        if iter == max_iters {
            break;
        }

        // Bordered Jacobian: [[A - mu I, -v], [e_i^T, 0]].
        let mut jac = DMatrix::from_element(n + 1, n + 1, zero);
        for r in 0..n {
            for c in 0..n {
                jac[(r, c)] = a[(r, c)] - if r == c { mu } else { zero };
            }
            jac[(r, n)] = -v[r];
            jac[(n, r)] = zero;
        }
        jac[(n, i - 1)] = one;

        let mut rhs = DVector::from_element(n + 1, zero);
        for k in 0..n {
            rhs[k] = -resid[k];
        }
        rhs[n] = one - v[i - 1];

        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularBorderedSystem)?;
        for r in 0..n {
            v[r] += delta[r];
        }
        mu += delta[n];
        if !mu.is_finite() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NewtonDivergence {
                iterations: iter + 1,
                residual: f64::INFINITY,
            });
        }
    }
    Err(Error::NewtonDivergence {
        iterations: max_iters,
        residual,
    })
}

/// Central difference `(lambda_i(+h) - lambda_i(-h)) / (2h)`.
pub fn fd_lambda(dense: &DenseModel, i: usize, h: f64) -> Result<Scalar> {
    check_dense_index(dense, i)?;
    let tol = default_newton_tol(dense.lambda[i - 1]);
    let hp = Complex64::new(h, 0.0);
    let plus = perturbed_eigenpair(dense, i, hp, tol)?;
    let minus = perturbed_eigenpair(dense, i, -hp, tol)?;
    Ok((plus.eigenvalue - minus.eigenvalue) / (2.0 * h))
}

/// Central difference of the coordinate-i-normalized eigenvector; its i-th
/// coordinate is zero by construction of the normalization.
pub fn fd_delta(dense: &DenseModel, i: usize, h: f64) -> Result<SeriesVector> {
    check_dense_index(dense, i)?;
    let tol = default_newton_tol(dense.lambda[i - 1]);
    let hp = Complex64::new(h, 0.0);
    let plus = perturbed_eigenpair(dense, i, hp, tol)?;
    let minus = perturbed_eigenpair(dense, i, -hp, tol)?;
    let entries = plus
        .eigenvector
        .iter()
        .zip(minus.eigenvector.iter())
        .enumerate()
        .map(|(k, (&p, &m))| (k + 1, (p - m) / (2.0 * h)));
    Ok(SeriesVector::from_coefficients(
        entries,
        TailReport::exact(dense.size()),
    ))
}

fn fit_order(points: &[(f64, f64)]) -> f64 {
    // Least-squares slope of log(error) vs log(h), over rows above the
    // roundoff floor.
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, e)| *e > 1e-13)
        .map(|&(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Error table of the central differences against the analytic
/// `(Lambda_i, Delta_i)` over a decreasing list of steps, with fitted
/// log-log slopes. A smooth isolated eigenpair gives order close to 2.
pub fn convergence_study(
    dense: &DenseModel,
    i: usize,
    h_list: &[f64],
) -> Result<ConvergenceReport> {
    if h_list.len() < 3 || h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::DimensionMismatch(
            "h_list must be strictly decreasing with at least 3 entries".into(),
        ));
    }
    let model = dense.to_perturbed(FieldTag::Complex)?;
    let policy = TruncationPolicy::default();
    let analytic_lambda = lambda_derivative(&model, i)?;
    let analytic_delta = delta_derivative(&model, i, &policy)?.delta;

    let rows: Vec<Result<(f64, f64, f64)>> =
        par::map_collect(h_list.to_vec(), |h| -> Result<(f64, f64, f64)> {
            let fl = fd_lambda(dense, i, h)?;
            let fd = fd_delta(dense, i, h)?;
            let lambda_error = (fl - analytic_lambda).norm();
            let mut diff_sq = 0.0;
            for k in 1..=dense.size() {
                diff_sq += (fd.coefficient(k) - analytic_delta.coefficient(k)).norm_sqr();
            }
            Ok((h, lambda_error, diff_sq.sqrt()))
        });
    let rows: Result<Vec<_>> = rows.into_iter().collect();
    let rows = rows?;

    let lambda_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let delta_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.2)).collect();
    Ok(ConvergenceReport {
        fitted_order_lambda: fit_order(&lambda_pts),
        fitted_order_delta: fit_order(&delta_pts),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin::{example_model, ExampleId};
    use approx::assert_relative_eq;

    fn real(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    fn swap_model() -> DenseModel {
        DenseModel {
            lambda: vec![real(1.0), real(2.0)],
            jmat: vec![vec![real(0.0), real(1.0)], vec![real(1.0), real(0.0)]],
            gap_min: 1e-12,
        }
    }

    #[test]
    fn truncate_examples() {
        let ex2 = example_model(ExampleId::Example2);
        let d = truncate_model(&ex2, 3).unwrap();
        assert_eq!(d.lambda, vec![real(1.0), real(0.5), real(1.0 / 3.0)]);
        assert_eq!(d.jmat[1][2], real(1.0 / 5.0));

        let ex1 = example_model(ExampleId::Example1);
        let d1 = truncate_model(&ex1, 2).unwrap();
        assert_eq!(d1.lambda, vec![real(1.0), real(2.0)]);
        assert_eq!(d1.jmat[0][0], real(1.0 / 2f64.sqrt()));
        assert_eq!(d1.jmat[0][1], real(1.0 / 3f64.sqrt()));

        // Truncating a dense model at its own size is an identical copy.
        let p = d.to_perturbed(FieldTag::Real).unwrap();
        let again = truncate_model(&p, 3).unwrap();
        assert_eq!(again.lambda, d.lambda);
        assert_eq!(again.jmat, d.jmat);
    }

    #[test]
    fn eigenpair_at_zero_step() {
        let d = swap_model();
        let p = perturbed_eigenpair(&d, 1, real(0.0), 1e-12).unwrap();
        assert_eq!(p.eigenvalue, real(1.0));
        assert_eq!(p.eigenvector, vec![real(1.0), real(0.0)]);
        assert!(p.iterations <= 1);
    }

    #[test]
    fn eigenpair_two_by_two_closed_form() {
        // Eigenvalue branch from lambda_1 = 1: (3 - sqrt(1 + 4h^2)) / 2.
        let d = swap_model();
        let h = 0.1;
        let p = perturbed_eigenpair(&d, 1, real(h), 1e-13).unwrap();
        let expect = (3.0 - (1.0 + 4.0 * h * h).sqrt()) / 2.0;
        assert_relative_eq!(p.eigenvalue.re, expect, max_relative = 1e-12);
        // Second coordinate is close to -h for small h.
        assert!((p.eigenvector[1].re + h).abs() < 2.0 * h * h);
        // Residual bound holds as checked, not assumed.
        assert!(p.residual_norm <= 1e-13 * (1.0 + p.eigenvalue.norm()) * 2.0);
    }

    #[test]
    fn fd_lambda_diagonal_is_exact() {
        let d = DenseModel {
            lambda: vec![real(1.0), real(2.0), real(3.5)],
            jmat: vec![
                vec![real(0.7), real(0.0), real(0.0)],
                vec![real(0.0), real(-1.2), real(0.0)],
                vec![real(0.0), real(0.0), real(0.3)],
            ],
            gap_min: 1e-12,
        };
        for (i, expect) in [(1, 0.7), (2, -1.2), (3, 0.3)] {
            let g = fd_lambda(&d, i, 1e-3).unwrap();
            assert_relative_eq!(g.re, expect, max_relative = 1e-10);
        }
        let fd = fd_delta(&d, 2, 1e-3).unwrap();
        assert_eq!(fd.support_len(), 0);
    }

    #[test]
    fn fd_matches_closed_form_two_by_two() {
        let d = swap_model();
        // True Lambda_1 = j[1][1] = 0; central difference error O(h^2).
        let g = fd_lambda(&d, 1, 1e-3).unwrap();
        assert!(g.norm() < 1e-5);
        let fd = fd_delta(&d, 1, 1e-3).unwrap();
        assert_eq!(fd.coefficient(1), real(0.0));
        assert!((fd.coefficient(2).re + 1.0).abs() < 1e-5);
    }

    #[test]
    fn fd_lambda_truncated_example2() {
        let ex2 = example_model(ExampleId::Example2);
        let d = truncate_model(&ex2, 64).unwrap();
        let g = fd_lambda(&d, 1, 1e-4).unwrap();
        assert!((g.re - 0.5).abs() < 1e-6);
    }

    #[test]
    fn fd_delta_matches_analytic_on_truncation() {
        let ex2 = example_model(ExampleId::Example2);
        let d = truncate_model(&ex2, 64).unwrap();
        let model = d.to_perturbed(FieldTag::Real).unwrap();
        let analytic = delta_derivative(&model, 2, &TruncationPolicy::default())
            .unwrap()
            .delta;
        let fd = fd_delta(&d, 2, 1e-4).unwrap();
        for k in 1..=64usize {
            assert!(
                (fd.coefficient(k) - analytic.coefficient(k)).norm() < 1e-5,
                "coordinate {k}"
            );
        }
    }

    #[test]
    fn study_orders_near_two() {
        let ex1 = example_model(ExampleId::Example1);
        let d = truncate_model(&ex1, 128).unwrap();
        let report = convergence_study(&d, 1, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(
            report.fitted_order_delta > 1.7 && report.fitted_order_delta < 2.3,
            "order {}",
            report.fitted_order_delta
        );
    }

    #[test]
    fn study_diagonal_errors_at_floor() {
        let d = DenseModel {
            lambda: vec![real(0.5), real(2.0), real(5.0)],
            jmat: vec![
                vec![real(1.0), real(0.0), real(0.0)],
                vec![real(0.0), real(2.0), real(0.0)],
                vec![real(0.0), real(0.0), real(3.0)],
            ],
            gap_min: 1e-12,
        };
        let report = convergence_study(&d, 1, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        for (_, le, de) in &report.rows {
            assert!(*le <= 1e-12 && *de <= 1e-12);
        }
        assert!(report.fitted_order_lambda.is_nan());
    }

    #[test]
    fn bad_h_list_rejected() {
        let d = swap_model();
        assert!(convergence_study(&d, 1, &[1e-2, 1e-2, 1e-3]).is_err());
        assert!(convergence_study(&d, 1, &[1e-2, 1e-3]).is_err());
    }
}
