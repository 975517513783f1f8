//! Estimation of frequency moments `sum_x p(x)^d` and Renyi entropies `H_d`
//! of an unknown discrete distribution from i.i.d. samples.
//!
//! The estimator counts monochromatic `d`-subsets ("collisions") inside
//! disjoint batches and averages the normalized counts; Bernstein's
//! inequality sizes the number of batches, so no median trick is needed.
//!
//! ```
//! use collide::{estimate_moment, DiscreteDistribution, EstimatorConfig};
//!
//! let dist = DiscreteDistribution::uniform(16).unwrap();
//! let cfg = EstimatorConfig::new(2, 0.5, 0.1).unwrap();
//! let samples = dist.sample(4000, 1);
//! let est = estimate_moment(&samples, &cfg).unwrap();
//! assert!((est.p_hat - 1.0 / 16.0).abs() < 0.5 / 16.0);
//! ```

pub mod cli;
pub mod config;
pub mod distributions;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod numeric;
pub mod planner;
pub mod regime;
pub mod report;
pub mod stream;
pub mod table;

pub use config::EstimatorConfig;
pub use distributions::{DiscreteDistribution, DistSpec};
pub use error::{Error, Result};
pub use estimator::{
    count_collisions, count_collisions_bruteforce, estimate_moment, median_of_means_estimate,
    BatchResult, BatchStream, MomentEstimate,
};
pub use numeric::{binomial, moment_to_entropy, Entropy};
pub use planner::{
    batch_size_for_norm, bernstein_tail, plan_samples, required_batches, variance_bound_exact,
    variance_bound_simple, BernsteinTail, SamplePlan,
};
pub use regime::{learn_regime, RegimeOutcome, RegimeResult};
pub use stream::{
    ams_fk_estimate, ams_full_sweep, basis_identity_check, collision_sum_from_power_sums,
    stirling_second, PowerSums, StirlingTable, StreamingPowerSums,
};
pub use table::FrequencyTable;
