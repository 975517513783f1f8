//! Exact combinatorial arithmetic and the few floating-point primitives
//! every estimator shares.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` accepted by [`binomial`].
pub const MAX_BINOMIAL_N: u64 = 1_000_000;
/// Largest `k` accepted by [`binomial`]; also the largest supported moment order.
pub const MAX_BINOMIAL_K: u64 = 16;

/// Exact `C(n, k)` inside the declared envelope `n <= 10^6`, `k <= 16`.
pub fn binomial(n: u64, k: u64) -> Result<BigUint> {
    if n > MAX_BINOMIAL_N || k > MAX_BINOMIAL_K {
        return Err(Error::Range(format!(
            "binomial({n}, {k}) outside envelope n <= {MAX_BINOMIAL_N}, k <= {MAX_BINOMIAL_K}"
        )));
    }
    Ok(binomial_big(n, k))
}

/// `C(n, k)` in `u128` when every intermediate product fits.
#[inline]
pub(crate) fn binomial_u128(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) since acc = C(n, i).
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Unbounded exact `C(n, k)`.
pub(crate) fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    if let Some(v) = binomial_u128(n, k) {
        return BigUint::from(v);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub(crate) fn factorial(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, i| acc * i)
}

/// Correctly rounded `num / den` as `f64`.
pub fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "ratio_to_f64: zero denominator");
    const EXACT: u64 = 1 << 53;
    if let (Some(a), Some(b)) = (num.to_u64(), den.to_u64()) {
        if a <= EXACT && b <= EXACT {
            return a as f64 / b as f64;
        }
    }
    BigRational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
        .to_f64()
        .unwrap_or(f64::NAN)
}

/// Renyi entropy in bits from the moment `p = sum_x p(x)^d`.
pub fn moment_to_entropy(p: f64, d: u32) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain(format!("order d = {d} must be >= 2")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("moment {p} must lie in (0, 1]")));
    }
    if p == 1.0 {
        return Ok(0.0);
    }
    Ok(p.log2() / (1.0 - d as f64))
}

/// Entropy as reported by the estimators. A zero collision count only
/// supports a lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "bits", rename_all = "snake_case")]
pub enum Entropy {
    Exact(f64),
    AtLeast(f64),
}

impl Entropy {
    pub fn bits(&self) -> f64 {
        match *self {
            Entropy::Exact(b) | Entropy::AtLeast(b) => b,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Entropy::Exact(_))
    }
}

/// Neumaier compensated summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Left-to-right compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().collect::<CompensatedSum>().value()
}

/// Median of a non-empty slice; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        (v[mid - 1] + v[mid]) / 2.0
    })
}

/// `ceil(x)`, except that values within a few ulps above an integer round
/// down to it so that e.g. `8 * ln(e^3) / 3` plans 8 batches, not 9.
pub(crate) fn ceil_tolerant(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pascal(n_max: usize, k_max: usize) -> Vec<Vec<BigUint>> {
        let mut t = vec![vec![BigUint::zero(); k_max + 1]; n_max + 1];
        for n in 0..=n_max {
            t[n][0] = BigUint::one();
            for k in 1..=k_max.min(n) {
                t[n][k] = &t[n - 1][k - 1] + &t[n - 1][k];
            }
        }
        t
    }

    #[test]
    fn small_binomials() {
        assert_eq!(binomial(5, 2).unwrap(), BigUint::from(10u32));
        assert_eq!(binomial(4, 7).unwrap(), BigUint::zero());
        assert_eq!(binomial(0, 0).unwrap(), BigUint::one());
    }

    #[test]
    fn binomial_matches_pascal_triangle() {
        let t = pascal(1000, 16);
        assert_eq!(binomial(1000, 8).unwrap(), t[1000][8]);
        for n in 0..=1000u64 {
            for k in 0..=16u64 {
                assert_eq!(binomial(n, k).unwrap(), t[n as usize][k as usize], "C({n},{k})");
            }
        }
    }

    #[test]
    fn binomial_rejects_outside_envelope() {
        assert!(matches!(binomial(1_000_001, 2), Err(Error::Range(_))));
        assert!(matches!(binomial(10, 17), Err(Error::Range(_))));
        // edge of the envelope needs more than 128 bits
        let big = binomial(1_000_000, 16).unwrap();
        assert!(big.bits() > 128);
        let mut ratio = big.clone() * factorial(16);
        for i in 0..16u64 {
            assert!((&ratio % (1_000_000 - i)).is_zero());
            ratio /= 1_000_000 - i;
        }
        assert!(ratio.is_one());
    }

    #[test]
    fn vandermonde_sanity_identity() {
        for n in 0..=200u64 {
            for d in 0..=8u64.min(n) {
                let lhs: BigUint = (0..=d)
                    .map(|k| binomial(d, k).unwrap() * binomial(n - d, d - k).unwrap())
                    .sum();
                assert_eq!(lhs, binomial(n, d).unwrap(), "n={n} d={d}");
            }
        }
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(moment_to_entropy(1.0, 2).unwrap(), 0.0);
        assert_eq!(moment_to_entropy(0.25, 2).unwrap(), 2.0);
        assert_eq!(moment_to_entropy(1.0 / 64.0, 3).unwrap(), 3.0);
        assert!(moment_to_entropy(1.0, 2).unwrap().is_sign_positive());
    }

    #[test]
    fn entropy_rejects_nonpositive() {
        assert!(matches!(moment_to_entropy(0.0, 2), Err(Error::Domain(_))));
        assert!(matches!(moment_to_entropy(-0.5, 3), Err(Error::Domain(_))));
        assert!(matches!(moment_to_entropy(f64::NAN, 3), Err(Error::Domain(_))));
        assert!(matches!(moment_to_entropy(0.5, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn ratio_rounding() {
        let one = BigUint::one();
        assert_eq!(ratio_to_f64(&one, &BigUint::from(3u32)), 1.0 / 3.0);
        let big = BigUint::from(1u8) << 200;
        let num = &big + 1u32;
        assert_eq!(ratio_to_f64(&num, &big), 1.0);
        let third = ratio_to_f64(&big, &(&big * 3u32));
        assert_eq!(third, 1.0 / 3.0);
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v), 2.0);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn tolerant_ceiling() {
        assert_eq!(ceil_tolerant(8.000000000000002), 8.0);
        assert_eq!(ceil_tolerant(8.001), 9.0);
        assert_eq!(ceil_tolerant(0.3), 1.0);
    }

    proptest::proptest! {
        #[test]
        fn pascal_rule(n in 1u64..=1_000_000, k in 1u64..=16) {
            let lhs = binomial(n, k).unwrap();
            let rhs = binomial(n - 1, k - 1).unwrap() + binomial(n - 1, k).unwrap();
            proptest::prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn entropy_strictly_decreasing(a in 1e-300f64..1.0, b in 1e-300f64..1.0, d in 2u32..=16) {
            proptest::prop_assume!(b / a > 1.0 + 1e-9);
            proptest::prop_assert!(moment_to_entropy(a, d).unwrap() > moment_to_entropy(b, d).unwrap());
        }
    }
}
