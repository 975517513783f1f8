//! Doubling search that brackets an unknown moment before a full-precision
//! run.
//!
//! Test `lambda` assumes `p >= p0 = 2^-lambda`, sizes batches for
//! `||p||_d >= p0^(1/d)` at `epsilon = 1` and fires when the estimate exceeds
//! `2 p0`. Tests consume fresh, consecutive samples from the stream.

use serde::{Deserialize, Serialize};

use crate::config::validate_order;
use crate::error::{Error, Result};
use crate::estimator::BatchStream;
use crate::planner::{batch_size_for_norm, required_batches};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeOutcome {
    /// Some test's estimate exceeded its threshold; bracket `[p/2, 2p]`.
    Fired,
    /// The first test saw an estimate above 1/2 without firing; bracket `[p/2, 1]`.
    Saturated,
    /// No test fired up to `lambda_max`; bracket `[0, 2^(1 - lambda_max)]`.
    NoFire,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeTest {
    pub lambda: u32,
    pub threshold: f64,
    pub batch_size: u64,
    pub n_batches: u64,
    pub p_hat: f64,
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeResult {
    /// Index of the last test run.
    pub lambda: u32,
    pub p_bracket_low: f64,
    pub p_bracket_high: f64,
    pub tests_run: u32,
    pub samples_used: u64,
    pub per_test_delta: f64,
    pub outcome: RegimeOutcome,
    pub tests: Vec<RegimeTest>,
}

impl RegimeResult {
    pub fn contains(&self, p: f64) -> bool {
        self.p_bracket_low <= p && p <= self.p_bracket_high
    }

    /// Lambda of the firing test, if any.
    pub fn fired_at(&self) -> Option<u32> {
        (self.outcome == RegimeOutcome::Fired).then_some(self.lambda)
    }
}

/// Batch length and count for test `lambda`.
pub fn test_batching(d: u32, lambda: u32, per_test_delta: f64) -> Result<(u64, u64)> {
    let p0 = (-(lambda as f64)).exp2();
    let n0 = batch_size_for_norm(d, p0.powf(1.0 / d as f64))?;
    let m = required_batches(1.0, per_test_delta, 1.0)?;
    Ok((n0, m))
}

pub fn learn_regime<I>(samples: I, d: u32, delta_total: f64, lambda_max: u32) -> Result<RegimeResult>
where
    I: IntoIterator<Item = u64>,
{
    validate_order(d)?;
    if !(delta_total > 0.0 && delta_total < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "delta = {delta_total} must lie in (0, 1)"
        )));
    }
    if lambda_max == 0 {
        return Err(Error::InvalidConfig("lambda_max must be >= 1".into()));
    }
    let per_test_delta = delta_total / lambda_max as f64;
    let mut samples = samples.into_iter();
    let mut tests = Vec::new();
    let mut samples_used = 0u64;

    for lambda in 1..=lambda_max {
        let p0 = (-(lambda as f64)).exp2();
        let threshold = 2.0 * p0;
        let (n0, m) = test_batching(d, lambda, per_test_delta)?;
        let mut stream = BatchStream::new(d, n0, m)?;
        while !stream.is_complete() {
            match samples.next() {
                Some(s) => stream.push(s)?,
                None => {
                    return Err(Error::StreamExhausted {
                        failed_lambda: lambda,
                        last_completed: lambda - 1,
                        samples_used: samples_used + stream.consumed(),
                        required: samples_used + stream.required(),
                    })
                }
            }
        }
        samples_used += stream.consumed();
        let p_hat = stream.finish()?.p_hat;
        let fired = p_hat > threshold;
        tests.push(RegimeTest {
            lambda,
            threshold,
            batch_size: n0,
            n_batches: m,
            p_hat,
            fired,
        });

        let finish = |outcome, low: f64, high: f64, tests| RegimeResult {
            lambda,
            p_bracket_low: low,
            p_bracket_high: high,
            tests_run: lambda,
            samples_used,
            per_test_delta,
            outcome,
            tests,
        };
        if fired {
            return Ok(finish(RegimeOutcome::Fired, p_hat / 2.0, (2.0 * p_hat).min(1.0), tests));
        }
        if lambda == 1 && p_hat > 0.5 {
            return Ok(finish(RegimeOutcome::Saturated, p_hat / 2.0, 1.0, tests));
        }
    }

    Ok(RegimeResult {
        lambda: lambda_max,
        p_bracket_low: 0.0,
        p_bracket_high: 2.0 * (-(lambda_max as f64)).exp2(),
        tests_run: lambda_max,
        samples_used,
        per_test_delta,
        outcome: RegimeOutcome::NoFire,
        tests,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DiscreteDistribution;

    #[test]
    fn point_mass_stops_at_first_test() {
        for d in 2..=4 {
            let r = learn_regime(std::iter::repeat(7u64), d, 0.1, 10).unwrap();
            assert_eq!(r.outcome, RegimeOutcome::Saturated);
            assert_eq!(r.lambda, 1);
            assert_eq!(r.tests_run, 1);
            assert!(r.contains(1.0));
            assert_eq!(r.p_bracket_high, 1.0);
        }
    }

    #[test]
    fn distinct_stream_never_fires() {
        let r = learn_regime(0u64.., 2, 0.1, 6).unwrap();
        assert_eq!(r.outcome, RegimeOutcome::NoFire);
        assert_eq!(r.tests_run, 6);
        assert!(r.contains(0.0));
        assert_eq!(r.p_bracket_high, 2.0 / 64.0);
        assert_eq!(r.samples_used, r.tests.iter().map(|t| t.batch_size * t.n_batches).sum::<u64>());
    }

    #[test]
    fn per_test_cost_nondecreasing() {
        let mut last = 0;
        for lambda in 1..=30 {
            let (n0, m) = test_batching(3, lambda, 0.01).unwrap();
            assert!(n0 * m >= last);
            last = n0 * m;
        }
    }

    #[test]
    fn exhausted_stream_reports_progress() {
        let err = learn_regime(0u64..500, 2, 0.1, 20).unwrap_err();
        match err {
            Error::StreamExhausted { failed_lambda, last_completed, samples_used, .. } => {
                assert_eq!(last_completed + 1, failed_lambda);
                assert!(last_completed >= 1);
                assert_eq!(samples_used, 500);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn brackets_uniform_256() {
        let dist = DiscreteDistribution::uniform(256).unwrap();
        let p = dist.exact_moment(2);
        let r = learn_regime(dist.sampler(11), 2, 0.1, 12).unwrap();
        assert_eq!(r.outcome, RegimeOutcome::Fired);
        assert!(r.contains(p), "{r:?}");
        assert!(r.p_bracket_high / r.p_bracket_low <= 8.0);
        assert!(r.per_test_delta * r.tests_run as f64 <= 0.1 + 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(learn_regime(0u64.., 2, 0.0, 5).is_err());
        assert!(learn_regime(0u64.., 2, 0.1, 0).is_err());
        assert!(learn_regime(0u64.., 1, 0.1, 5).is_err());
    }
}
