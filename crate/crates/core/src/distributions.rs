//! Explicit finite distributions with closed-form moments, a pinned sampler,
//! and an exhaustive expectation oracle for the batch estimator.
//!
//! Sampling uses xoshiro256++ seeded through SplitMix64 (`seed_from_u64`).
//! Each draw takes one `next_u64`, maps it to `u = (x >> 11) * 2^-53` and
//! returns the first symbol whose cumulative probability exceeds `u`.
//! Symbols are the indices `0..support_size` as `u64`.

use std::fmt;
use std::str::FromStr;

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::config::validate_order;
use crate::error::{Error, Result};
use crate::estimator::count_collisions_bruteforce;
use crate::numeric::{binomial, compensated_sum, moment_to_entropy, ratio_to_f64, CompensatedSum};

/// Upper limit on `support^n0` for [`DiscreteDistribution::exhaustive_expectation`].
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from nonnegative weights, renormalizing them to
    /// sum to one. Zero weights are rejected since every listed symbol must
    /// have positive mass.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Domain("distribution needs at least one symbol".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Domain(format!("weight {w} is not a positive finite number")));
        }
        let total = compensated_sum(weights.iter().copied());
        let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
        Ok(Self::from_normalized(probabilities))
    }

    fn from_normalized(probabilities: Vec<f64>) -> Self {
        let mut acc = CompensatedSum::new();
        let mut cumulative: Vec<f64> = probabilities
            .iter()
            .map(|&p| {
                acc.add(p);
                acc.value()
            })
            .collect();
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self {
            probabilities,
            cumulative,
        }
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("uniform support must be >= 1".into()));
        }
        Ok(Self::from_normalized(vec![1.0 / m as f64; m]))
    }

    pub fn point_mass() -> Self {
        Self::from_normalized(vec![1.0])
    }

    /// `p(i) ∝ (i + 1)^(-s)` on `m` symbols.
    pub fn zipf(m: usize, s: f64) -> Result<Self> {
        if m == 0 || !(s >= 0.0 && s.is_finite()) {
            return Err(Error::Domain(format!("invalid zipf parameters m = {m}, s = {s}")));
        }
        let w: Vec<f64> = (1..=m).map(|i| (i as f64).powf(-s)).collect();
        Self::from_weights(&w)
    }

    /// `p(i) ∝ r^i` truncated to `m` symbols.
    pub fn geometric(m: usize, r: f64) -> Result<Self> {
        if m == 0 || !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("invalid geometric parameters m = {m}, r = {r}")));
        }
        let w: Vec<f64> = (0..m).map(|i| r.powi(i as i32)).collect();
        Self::from_weights(&w)
    }

    /// One symbol with mass `heavy`, the remaining `m - 1` sharing the rest evenly.
    pub fn two_spike(m: usize, heavy: f64) -> Result<Self> {
        if m < 2 || !(heavy > 0.0 && heavy < 1.0) {
            return Err(Error::Domain(format!(
                "invalid two-spike parameters m = {m}, heavy = {heavy}"
            )));
        }
        let mut p = vec![(1.0 - heavy) / (m - 1) as f64; m];
        p[0] = heavy;
        Ok(Self::from_normalized(p))
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn support_size(&self) -> usize {
        self.probabilities.len()
    }

    /// `sum_x p(x)^alpha` for a real exponent.
    pub fn power_sum(&self, alpha: f64) -> f64 {
        compensated_sum(self.probabilities.iter().map(|p| p.powf(alpha)))
    }

    /// `sum_x p(x)^d`.
    pub fn exact_moment(&self, d: u32) -> f64 {
        compensated_sum(self.probabilities.iter().map(|p| p.powi(d as i32)))
    }

    /// `||p||_d = (sum_x p(x)^d)^(1/d)`.
    pub fn norm(&self, d: u32) -> f64 {
        self.exact_moment(d).powf(1.0 / d as f64)
    }

    /// Renyi entropy of order `d`, in bits.
    pub fn exact_entropy(&self, d: u32) -> Result<f64> {
        moment_to_entropy(self.exact_moment(d).min(1.0), d)
    }

    pub fn sampler(&self, seed: u64) -> Sampler<'_> {
        Sampler {
            dist: self,
            rng: Xoshiro256PlusPlus::seed_from_u64(seed),
        }
    }

    /// `n` i.i.d. draws; identical for identical `(self, n, seed)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        self.sampler(seed).take(n).collect()
    }

    /// Exact `E[p~]` for one batch of length `n0`, by enumerating all
    /// `support^n0` outcome sequences and counting collisions by tuple
    /// enumeration.
    pub fn exhaustive_expectation(&self, n0: usize, d: u32) -> Result<f64> {
        validate_order(d)?;
        if n0 < d as usize {
            return Err(Error::Precondition(format!("batch length {n0} < d = {d}")));
        }
        let k = self.support_size() as u64;
        let outcomes = k.checked_pow(n0 as u32).filter(|&c| c <= ENUMERATION_BUDGET);
        let Some(outcomes) = outcomes else {
            return Err(Error::Range(format!(
                "{k}^{n0} outcomes exceed the enumeration budget {ENUMERATION_BUDGET}"
            )));
        };
        let tuples = binomial(n0 as u64, d as u64)?;
        let mut seq = vec![0u64; n0];
        let mut acc = CompensatedSum::new();
        for _ in 0..outcomes {
            let prob: f64 = seq.iter().map(|&s| self.probabilities[s as usize]).product();
            let hits = count_collisions_bruteforce(&seq, d)?;
            acc.add(prob * ratio_to_f64(&hits, &tuples));
            // odometer increment
            for digit in seq.iter_mut() {
                *digit += 1;
                if *digit < k {
                    break;
                }
                *digit = 0;
            }
        }
        Ok(acc.value())
    }
}

/// Endless iterator of draws from a distribution.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    dist: &'a DiscreteDistribution,
    rng: Xoshiro256PlusPlus,
}

impl Iterator for Sampler<'_> {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let cum = &self.dist.cumulative;
        let idx = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        Some(idx as u64)
    }
}

/// Parsed form of the compact text spec used by the CLI, e.g.
/// `uniform:m=16`, `zipf:m=1024,s=1.0`, `geometric:m=32,r=0.5`,
/// `twospike:m=64,heavy=0.3`, `point`.
#[derive(Debug, Clone, PartialEq)]
pub enum DistSpec {
    Uniform { m: usize },
    Zipf { m: usize, s: f64 },
    Geometric { m: usize, r: f64 },
    TwoSpike { m: usize, heavy: f64 },
    Point,
}

impl DistSpec {
    pub fn build(&self) -> Result<DiscreteDistribution> {
        match *self {
            DistSpec::Uniform { m } => DiscreteDistribution::uniform(m),
            DistSpec::Zipf { m, s } => DiscreteDistribution::zipf(m, s),
            DistSpec::Geometric { m, r } => DiscreteDistribution::geometric(m, r),
            DistSpec::TwoSpike { m, heavy } => DiscreteDistribution::two_spike(m, heavy),
            DistSpec::Point => Ok(DiscreteDistribution::point_mass()),
        }
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistSpec::Uniform { m } => write!(f, "uniform:m={m}"),
            DistSpec::Zipf { m, s } => write!(f, "zipf:m={m},s={s}"),
            DistSpec::Geometric { m, r } => write!(f, "geometric:m={m},r={r}"),
            DistSpec::TwoSpike { m, heavy } => write!(f, "twospike:m={m},heavy={heavy}"),
            DistSpec::Point => write!(f, "point"),
        }
    }
}

impl FromStr for DistSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (family, params) = s.split_once(':').unwrap_or((s, ""));
        let mut kv = Vec::new();
        for part in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got {part:?}")))?;
            kv.push((k.trim(), v.trim()));
        }
        let get = |key: &str| -> Result<&str> {
            kv.iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Parse(format!("{family}: missing parameter {key:?}")))
        };
        let int = |key: &str| -> Result<usize> {
            get(key)?
                .parse()
                .map_err(|e| Error::Parse(format!("{family}: {key}: {e}")))
        };
        let real = |key: &str| -> Result<f64> {
            get(key)?
                .parse()
                .map_err(|e| Error::Parse(format!("{family}: {key}: {e}")))
        };
        let allowed: &[&str] = match family {
            "uniform" => &["m"],
            "zipf" => &["m", "s"],
            "geometric" => &["m", "r"],
            "twospike" => &["m", "heavy"],
            "point" => &[],
            other => return Err(Error::Parse(format!("unknown distribution family {other:?}"))),
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !allowed.contains(k)) {
            return Err(Error::Parse(format!("{family}: unknown parameter {k:?}")));
        }
        let spec = match family {
            "uniform" => DistSpec::Uniform { m: int("m")? },
            "zipf" => DistSpec::Zipf {
                m: int("m")?,
                s: real("s")?,
            },
            "geometric" => DistSpec::Geometric {
                m: int("m")?,
                r: real("r")?,
            },
            "twospike" => DistSpec::TwoSpike {
                m: int("m")?,
                heavy: real("heavy")?,
            },
            _ => DistSpec::Point,
        };
        // reject out-of-range parameters at parse time
        spec.build()?;
        Ok(spec)
    }
}
