//! Sample-size planning: Bernstein tails, batch counts and lengths, and the
//! single-batch variance bounds they rest on.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::config::{validate_order, EstimatorConfig};
use crate::error::{Error, Result};
use crate::numeric::{binomial, ceil_tolerant, ratio_to_f64, CompensatedSum};

/// Samples needed for one run, split into `n_batches` batches of `batch_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub n_total: u64,
    pub n_batches: u64,
    pub batch_size: u64,
    /// Lower bound on `||p||_d` the batch length was sized for.
    pub assumed_norm_lower: f64,
    /// Bound on `Var(batch estimate) / p^2` used in the Bernstein step.
    pub variance_ratio_bound: f64,
}

/// Two-sided Bernstein tail bound for the mean of `m` i.i.d. batch estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernsteinTail {
    /// `min(1, 2 exp(-m eps^2 / (2B + 2B eps / 3)))`
    pub tight: f64,
    /// `min(1, 2 exp(-3 m eps^2 / (8B)))`; `None` when `eps > 1`, where it is
    /// not a valid bound.
    pub loose: Option<f64>,
}

pub fn bernstein_tail(m: u64, epsilon: f64, b: f64) -> Result<BernsteinTail> {
    if m == 0 {
        return Err(Error::Domain("batch count m must be >= 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("B = {b} must be positive")));
    }
    let m = m as f64;
    let eps2 = epsilon * epsilon;
    let tight = (2.0 * (-m * eps2 / (2.0 * b + 2.0 * b * epsilon / 3.0)).exp()).min(1.0);
    let loose = (epsilon <= 1.0).then(|| (2.0 * (-3.0 * m * eps2 / (8.0 * b)).exp()).min(1.0));
    Ok(BernsteinTail { tight, loose })
}

/// `ceil(8 B ln(2/delta) / (3 eps^2))`.
pub fn required_batches(epsilon: f64, delta: f64, b: f64) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(b > 0.0 && b.is_finite()) {
        return Err(Error::Domain(format!("B = {b} must be positive")));
    }
    let raw = 8.0 * b * (2.0 / delta).ln() / (3.0 * epsilon * epsilon);
    let m = ceil_tolerant(raw).max(1.0);
    m.to_u64()
        .ok_or_else(|| Error::Range(format!("batch count {raw} does not fit in u64")))
}

/// Batch length `floor(2d / norm_lower) + 1`, raised to `2d^2 + 1` when smaller.
pub fn batch_size_for_norm(d: u32, norm_lower: f64) -> Result<u64> {
    validate_order(d)?;
    if !(norm_lower > 0.0 && norm_lower <= 1.0) {
        return Err(Error::Domain(format!(
            "norm lower bound {norm_lower} must lie in (0, 1]"
        )));
    }
    let d = d as u64;
    let by_norm = (2.0 * d as f64 / norm_lower).floor() + 1.0;
    let by_norm = by_norm
        .to_u64()
        .ok_or_else(|| Error::Range(format!("batch length {by_norm} does not fit in u64")))?;
    Ok(by_norm.max(2 * d * d + 1))
}

/// `||p||_d` implied by an upper bound on `H_d` in bits.
pub fn norm_from_entropy(d: u32, entropy_bits: f64) -> f64 {
    let d = d as f64;
    (-(1.0 - 1.0 / d) * entropy_bits).exp2()
}

/// Plan for relative error `config.epsilon` at confidence `1 - config.delta`
/// given `H_d <= entropy_upper_bits`.
pub fn plan_samples(config: &EstimatorConfig, entropy_upper_bits: f64) -> Result<SamplePlan> {
    config.validate()?;
    if !(entropy_upper_bits >= 0.0 && entropy_upper_bits.is_finite()) {
        return Err(Error::Domain(format!(
            "entropy bound {entropy_upper_bits} must be a finite non-negative number"
        )));
    }
    let norm = norm_from_entropy(config.d, entropy_upper_bits);
    plan_for_norm(config, norm)
}

/// Plan given a lower bound on `||p||_d` directly.
pub fn plan_for_norm(config: &EstimatorConfig, norm_lower: f64) -> Result<SamplePlan> {
    config.validate()?;
    let b = 1.0;
    let batch_size = batch_size_for_norm(config.d, norm_lower)?;
    let n_batches = required_batches(config.epsilon, config.delta, b)?;
    let n_total = batch_size
        .checked_mul(n_batches)
        .ok_or_else(|| Error::Range("planned sample count overflows u64".into()))?;
    Ok(SamplePlan {
        n_total,
        n_batches,
        batch_size,
        assumed_norm_lower: norm_lower,
        variance_ratio_bound: b,
    })
}

/// Weights `C(d,k) C(n-d, d-k) / C(n,d)` for `k = 0..=d`.
fn overlap_weights(n: u64, d: u32) -> Result<Vec<f64>> {
    let d = d as u64;
    let total = binomial(n, d)?;
    (0..=d)
        .map(|k| Ok(ratio_to_f64(&(binomial(d, k)? * binomial(n - d, d - k)?), &total)))
        .collect()
}

/// Upper bound on the variance of one normalized batch of length `n`:
/// `sum_{k=1..d} C(d,k) C(n-d,d-k) M_{2d-k} / C(n,d)`, with
/// `moments[i] = sum_x p(x)^(d+i)` for `i = 0..=d`.
pub fn variance_bound_exact(n: u64, d: u32, moments: &[f64]) -> Result<f64> {
    validate_order(d)?;
    if moments.len() < d as usize + 1 {
        return Err(Error::Precondition(format!(
            "need moments of orders {d}..={}, got {}",
            2 * d,
            moments.len()
        )));
    }
    if n < 2 * d as u64 {
        return Err(Error::Precondition(format!("batch length {n} < 2d = {}", 2 * d)));
    }
    let weights = overlap_weights(n, d)?;
    let mut acc = CompensatedSum::new();
    for k in 1..=d as usize {
        // M_{2d-k} sits at index d - k
        acc.add(weights[k] * moments[d as usize - k]);
    }
    Ok(acc.value())
}

/// `2 ||p||_d^d / C(n, d)`, defined for `n > 2d^2`.
pub fn variance_bound_simple(n: u64, d: u32, norm_d: f64) -> Result<f64> {
    validate_order(d)?;
    let min_n = 2 * (d as u64) * (d as u64);
    if n <= min_n {
        return Err(Error::Inapplicable(format!(
            "simple variance bound needs n > 2d^2 = {min_n}, got n = {n}"
        )));
    }
    if !(norm_d > 0.0 && norm_d <= 1.0) {
        return Err(Error::Domain(format!("norm {norm_d} must lie in (0, 1]")));
    }
    let inv = ratio_to_f64(&1u32.into(), &binomial(n, d as u64)?);
    Ok(2.0 * norm_d.powi(d as i32) * inv)
}
