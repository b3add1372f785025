//! The two built-in operator pairs on L2(0, infinity) expressed in
//! coordinates, plus the closed-form quantities known about them.
//!
//! Example 1 (unbounded J): lambda_n = n, j[n][k] = 1/sqrt(n+k).
//! Example 2 (bounded J):   lambda_n = 1/n, j[n][k] = 1/(n+k).

use num_complex::Complex64;

use crate::par;
use crate::series::{adaptive_sum, monotone_tail_bound, Neumaier, TailReport, TruncationPolicy};
use crate::spectral::{FieldTag, PerturbedModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleId {
    Example1,
    Example2,
}

impl ExampleId {
    pub fn name(&self) -> &'static str {
        match self {
            ExampleId::Example1 => "paper_example_1",
            ExampleId::Example2 => "paper_example_2",
        }
    }

    pub fn from_name(name: &str) -> Option<ExampleId> {
        match name {
            "paper_example_1" => Some(ExampleId::Example1),
            "paper_example_2" => Some(ExampleId::Example2),
            _ => None,
        }
    }
}

pub fn example_model(which: ExampleId) -> PerturbedModel {
    let model = match which {
        ExampleId::Example1 => PerturbedModel::generator(
            FieldTag::Real,
            |n| Complex64::new(n as f64, 0.0),
            |n, k| Complex64::new(1.0 / ((n + k) as f64).sqrt(), 0.0),
        ),
        ExampleId::Example2 => PerturbedModel::generator(
            FieldTag::Real,
            |n| Complex64::new(1.0 / n as f64, 0.0),
            |n, k| Complex64::new(1.0 / (n + k) as f64, 0.0),
        ),
    };
    model.with_monotone_coefficients(true)
}

/// Closed form: `1/sqrt(2i)` for Example 1, `1/(2i)` for Example 2.
pub fn example_lambda_derivative(which: ExampleId, i: usize) -> f64 {
    match which {
        ExampleId::Example1 => 1.0 / ((i + i) as f64).sqrt(),
        ExampleId::Example2 => 1.0 / (i + i) as f64,
    }
}

/// Closed-form `||Delta_i||` series evaluated under the policy:
/// Example 1: `sqrt(sum_{j != i} 1/((j-i)^2 (i+j)))`;
/// Example 2: `i * sqrt(sum_{j != i} j^2/(j^2 - i^2)^2)`.
/// The returned value is the truncated sum; the report carries an integral
/// tail bound on the missed squared mass (decay exponent 3 resp. 2).
pub fn example_delta_norm(
    which: ExampleId,
    i: usize,
    policy: &TruncationPolicy,
) -> (f64, TailReport) {
    let if64 = i as f64;
    let (term, decay): (Box<dyn Fn(usize) -> f64>, f64) = match which {
        ExampleId::Example1 => (
            Box::new(move |j: usize| {
                let jf = j as f64;
                1.0 / ((jf - if64) * (jf - if64) * (if64 + jf))
            }),
            3.0,
        ),
        ExampleId::Example2 => (
            Box::new(move |j: usize| {
                let jf = j as f64;
                let r = if64 * jf / (jf * jf - if64 * if64);
                r * r
            }),
            2.0,
        ),
    };
    let (sum, mut tail) = adaptive_sum(
        |j| Complex64::new(term(j), 0.0),
        Some(i),
        policy,
    );
    let m = tail.terms_used;
    if m > i {
        tail.monotone_tail_bound = monotone_tail_bound(term(m), decay, m).ok();
    }
    (sum.re.max(0.0).sqrt(), tail)
}

/// Evidence that Example 2's J is bounded: max over `n <= n_max` of the
/// column norm `sqrt(sum_{k <= k_max} 1/(n+k)^2 + tail bound)`. The paper
/// bounds the supremum by pi^2/6.
pub fn example2_boundedness(n_max: usize, k_max: usize) -> f64 {
    let norms = par::map_collect((1..=n_max).collect::<Vec<_>>(), |n| {
        let mut acc = Neumaier::default();
        for k in 1..=k_max {
            let t = 1.0 / ((n + k) as f64);
            acc.add(t * t);
        }
        let last = 1.0 / ((n + k_max) as f64);
        let tail = monotone_tail_bound(last * last, 2.0, k_max).unwrap_or(0.0);
        (acc.value() + tail).sqrt()
    });
    norms.into_iter().fold(0.0, f64::max)
}

/// Evidence that Example 1's J is unbounded: the squared-norm partial sum
/// `sum_{k <= k_max} 1/(n+k)` grows like `log(k_max)`.
pub fn example1_unboundedness_evidence(n: usize, k_max: usize) -> f64 {
    let mut acc = Neumaier::default();
    for k in 1..=k_max {
        acc.add(1.0 / ((n + k) as f64));
    }
    acc.value()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FigureRow {
    pub index: usize,
    pub delta_norm: f64,
    pub ratio: f64,
}

/// One row per index: `(i, ||Delta_i||, ||Delta_i|| / i)`. Rows are
/// independent and computed in parallel when the feature is enabled.
pub fn figure_data(
    which: ExampleId,
    i_lo: usize,
    i_hi: usize,
    policy: &TruncationPolicy,
) -> Vec<FigureRow> {
    figure_data_with_parallelism(which, i_lo, i_hi, policy, true)
}

pub fn figure_data_with_parallelism(
    which: ExampleId,
    i_lo: usize,
    i_hi: usize,
    policy: &TruncationPolicy,
    parallel: bool,
) -> Vec<FigureRow> {
    if i_lo > i_hi || i_lo == 0 {
        return Vec::new();
    }
    par::map_collect_mode((i_lo..=i_hi).collect(), parallel, |i| {
        let (norm, _) = example_delta_norm(which, i, policy);
        FigureRow {
            index: i,
            delta_norm: norm,
            ratio: norm / i as f64,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{lambda_derivative, vector_norm, delta_derivative};
    use approx::assert_relative_eq;

    #[test]
    fn model_values() {
        let ex1 = example_model(ExampleId::Example1);
        assert_eq!(ex1.lambda(3).unwrap().re, 3.0);
        assert_eq!(ex1.perturbation().get(3, 5).re, 1.0 / 8f64.sqrt());
        let ex2 = example_model(ExampleId::Example2);
        assert_eq!(ex2.lambda(4).unwrap().re, 0.25);
        assert_eq!(ex2.perturbation().get(2, 2).re, 0.25);
        // n+k is symmetric in both examples.
        for (n, k) in [(1, 9), (3, 4), (17, 2)] {
            assert_eq!(ex1.perturbation().get(n, k), ex1.perturbation().get(k, n));
            assert_eq!(ex2.perturbation().get(n, k), ex2.perturbation().get(k, n));
        }
    }

    #[test]
    fn closed_form_lambda() {
        assert_eq!(example_lambda_derivative(ExampleId::Example1, 2), 0.5);
        assert_eq!(example_lambda_derivative(ExampleId::Example2, 1), 0.5);
        assert_eq!(example_lambda_derivative(ExampleId::Example2, 50), 0.01);
    }

    #[test]
    fn closed_form_matches_generic_ops() {
        let policy = TruncationPolicy::default().with_max_terms(1 << 17);
        for which in [ExampleId::Example1, ExampleId::Example2] {
            let model = example_model(which);
            for i in [1usize, 2, 5, 17, 32] {
                let generic = lambda_derivative(&model, i).unwrap().re;
                assert_eq!(generic, example_lambda_derivative(which, i));
                let (closed, _) = example_delta_norm(which, i, &policy);
                let r = delta_derivative(&model, i, &policy).unwrap();
                assert_relative_eq!(vector_norm(&r.delta), closed, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn delta_norm_pinned_values() {
        let policy = TruncationPolicy::default();
        let (v1, _) = example_delta_norm(ExampleId::Example1, 1, &policy);
        assert_relative_eq!(v1, 0.6689297671834564, max_relative = 1e-8);
        let big = TruncationPolicy::default().with_max_terms(1 << 21);
        let (v64, _) = example_delta_norm(ExampleId::Example2, 64, &big);
        assert!((v64 / 64.0 - 0.907).abs() < 0.01);
    }

    #[test]
    fn boundedness_column_one() {
        // Closed form: sum_{k>=1} 1/(1+k)^2 = pi^2/6 - 1.
        let expect = (std::f64::consts::PI.powi(2) / 6.0 - 1.0).sqrt();
        let got = example2_boundedness(1, 1_000_000);
        assert!((got - expect).abs() < 1e-6);
        // Column norms decrease in n, so the supremum sits at n = 1.
        let sup = example2_boundedness(20, 100_000);
        assert_relative_eq!(sup, example2_boundedness(1, 100_000), max_relative = 1e-12);
    }

    #[test]
    fn unboundedness_partial_sums() {
        // n=1, k_max=10: H_11 - 1.
        let h11: f64 = (2..=11).map(|k| 1.0 / k as f64).sum();
        assert_relative_eq!(
            example1_unboundedness_evidence(1, 10),
            h11,
            max_relative = 1e-12
        );
        let a = example1_unboundedness_evidence(1, 10_000);
        let b = example1_unboundedness_evidence(1, 20_000);
        assert!((b - a - std::f64::consts::LN_2).abs() < 0.01);
    }

    #[test]
    fn figure_rows() {
        let policy = TruncationPolicy::default().with_max_terms(1 << 14);
        let rows = figure_data(ExampleId::Example1, 1, 20, &policy);
        assert_eq!(rows.len(), 20);
        // Example 1 norms peak at i = 2 (i = 1 lacks the close left
        // neighbor) and decrease from there on.
        assert!(rows[1].delta_norm > rows[0].delta_norm);
        for w in rows[1..].windows(2) {
            assert!(w[1].delta_norm < w[0].delta_norm);
        }
        assert!(figure_data(ExampleId::Example2, 5, 4, &policy).is_empty());
        assert_eq!(figure_data(ExampleId::Example2, 3, 3, &policy).len(), 1);
    }

    #[test]
    fn figure_parallel_matches_sequential() {
        let policy = TruncationPolicy::default().with_max_terms(1 << 12);
        let a = figure_data_with_parallelism(ExampleId::Example2, 1, 16, &policy, true);
        let b = figure_data_with_parallelism(ExampleId::Example2, 1, 16, &policy, false);
        assert_eq!(a, b);
    }
}
