//! Adaptive summation of scalar series with truncation diagnostics.
//!
//! Partial sums are taken over increasing index with a doubling window.
//! Summation stops when the latest block changes the accumulated magnitude
//! by no more than `rel_tol` relative, or when `max_terms` is reached.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Controls how far an infinite series is summed before giving up.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationPolicy {
    pub initial_terms: usize,
    pub max_terms: usize,
    pub rel_tol: f64,
    pub growth_factor: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            initial_terms: 64,
            max_terms: 1 << 20,
            rel_tol: 1e-10,
            growth_factor: 2,
        }
    }
}

impl TruncationPolicy {
    pub fn with_max_terms(mut self, max_terms: usize) -> Self {
        self.max_terms = max_terms;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

/// How a truncated series ended: number of terms examined, the relative
/// contribution of the final doubling block, and whether that block met the
/// stabilization tolerance. `block_ratio` is the magnitude of the final block
/// relative to the one before it, the raw signal behind [`Trend`].
#[derive(Clone, Debug, PartialEq)]
pub struct TailReport {
    pub terms_used: usize,
    pub last_block_delta: f64,
    pub converged: bool,
    pub monotone_tail_bound: Option<f64>,
    pub block_ratio: Option<f64>,
}

impl TailReport {
    /// Report for a sum that was evaluated exactly (finite support, no truncation).
    pub fn exact(terms_used: usize) -> Self {
        TailReport {
            terms_used,
            last_block_delta: 0.0,
            converged: true,
            monotone_tail_bound: None,
            block_ratio: None,
        }
    }

    pub fn trend(&self) -> Trend {
        if self.converged {
            return Trend::Stabilized;
        }
        match self.block_ratio {
            Some(r) if r >= 0.99 => Trend::Growing,
            Some(r) if r <= 0.75 => Trend::Decaying,
            _ => Trend::Unclear,
        }
    }

    /// Combine with another report, keeping the pessimistic view of both.
    pub fn combine(&self, other: &TailReport) -> TailReport {
        TailReport {
            terms_used: self.terms_used.max(other.terms_used),
            last_block_delta: self.last_block_delta.max(other.last_block_delta),
            converged: self.converged && other.converged,
            monotone_tail_bound: match (self.monotone_tail_bound, other.monotone_tail_bound) {
                (Some(a), Some(b)) => Some(a + b),
                (a, b) => a.or(b),
            },
            block_ratio: match (self.block_ratio, other.block_ratio) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

/// Qualitative behavior of the doubling blocks at the point summation stopped.
///
/// `Stabilized` means the tolerance was met. `Decaying` means blocks were
/// shrinking geometrically but the tolerance was not yet met; `Growing` means
/// they were flat or increasing, the signature of a divergent series.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Stabilized,
    Decaying,
    Growing,
    Unclear,
}

/// Compensated (Neumaier) accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    s: f64,
    c: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    pub fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Sum `term(j)` for `j = 1, 2, 3, ...`, omitting `skip`, until the doubling
/// blocks stabilize or `policy.max_terms` is reached. Non-convergence is a
/// flag in the report, not an error.
pub fn adaptive_sum<F>(
    term: F,
    skip: Option<usize>,
    policy: &TruncationPolicy,
) -> (Complex64, TailReport)
where
    F: Fn(usize) -> Complex64,
{
    let growth = policy.growth_factor.max(2);
    let mut acc_re = Neumaier::default();
    let mut acc_im = Neumaier::default();
    let mut next = 1usize;
    let mut window = policy.initial_terms.max(1).min(policy.max_terms);
    let mut last_block_delta;
    let mut prev_block_abs: Option<f64> = None;
    let mut block_ratio;
    let mut converged = false;

    loop {
        let mut block_re = Neumaier::default();
        let mut block_im = Neumaier::default();
        for j in next..=window {
            if Some(j) == skip {
                continue;
            }
            let t = term(j);
            block_re.add(t.re);
            block_im.add(t.im);
        }
        next = window + 1;
        let block = Complex64::new(block_re.value(), block_im.value());
        acc_re.add(block.re);
        acc_im.add(block.im);

        let acc_abs = Complex64::new(acc_re.value(), acc_im.value()).norm();
        let block_abs = block.norm();
        last_block_delta = block_abs / acc_abs.max(f64::MIN_POSITIVE);
        block_ratio = prev_block_abs.map(|p| {
            if p > 0.0 {
                block_abs / p
            } else if block_abs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        });
        if last_block_delta <= policy.rel_tol {
            converged = true;
            break;
        }
        if window >= policy.max_terms {
            break;
        }
        prev_block_abs = Some(block_abs);
        window = window.saturating_mul(growth).min(policy.max_terms);
    }

    let sum = Complex64::new(acc_re.value(), acc_im.value());
    (
        sum,
        TailReport {
            terms_used: next - 1,
            last_block_delta,
            converged,
            monotone_tail_bound: None,
            block_ratio,
        },
    )
}

/// Adaptive sum of `|term(j)|^2`. Returns the square-summed value (not its root).
pub fn adaptive_sum_squares<F>(
    term: F,
    skip: Option<usize>,
    policy: &TruncationPolicy,
) -> (f64, TailReport)
where
    F: Fn(usize) -> Complex64,
{
    let (sum, tail) = adaptive_sum(
        |j| Complex64::new(term(j).norm_sqr(), 0.0),
        skip,
        policy,
    );
    (sum.re, tail)
}

/// Integral-comparison bound on the tail `sum_{j > M} term(j)` of a sequence
/// eventually dominated by `c * j^(-p)` and monotone past `M`:
/// `term(M) * M / (p - 1)`.
pub fn monotone_tail_bound(term_at_m: f64, decay_exponent: f64, m: usize) -> Result<f64> {
    if decay_exponent <= 1.0 || decay_exponent.is_nan() {
        return Err(Error::InvalidExponent(decay_exponent));
    }
    Ok(term_at_m * m as f64 / (decay_exponent - 1.0))
}

/// Rebuild a [`TailReport`] from a precomputed sequence of nonnegative
/// contributions, applying the same doubling-block rule the adaptive driver
/// uses. Used when coefficients are computed over a fixed window but their
/// norm-series behavior still needs to be classified.
pub fn tail_from_contributions(contributions: &[f64], policy: &TruncationPolicy) -> TailReport {
    let growth = policy.growth_factor.max(2);
    let n = contributions.len();
    if n == 0 {
        return TailReport::exact(0);
    }
    let mut acc = Neumaier::default();
    let mut next = 0usize;
    let mut window = policy.initial_terms.max(1);
    let mut last_block_delta;
    let mut prev_block_abs: Option<f64> = None;
    let mut block_ratio;
    let mut converged = false;
    loop {
        let end = window.min(n);
        let mut block = Neumaier::default();
        for c in &contributions[next..end] {
            block.add(*c);
        }
        next = end;
        let block_abs = block.value().abs();
        acc.add(block.value());
        last_block_delta = block_abs / acc.value().abs().max(f64::MIN_POSITIVE);
        block_ratio = prev_block_abs.map(|p| {
            if p > 0.0 {
                block_abs / p
            } else if block_abs > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        });
        if last_block_delta <= policy.rel_tol {
            converged = true;
            break;
        }
        if next >= n {
            break;
        }
        prev_block_abs = Some(block_abs);
        window = window.saturating_mul(growth);
    }
    TailReport {
        terms_used: n,
        last_block_delta,
        converged,
        monotone_tail_bound: None,
        block_ratio,
    }
}
