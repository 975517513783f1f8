//! Batched birthday-paradox estimator of `sum_x p(x)^d`.
//!
//! The sample stream is cut into disjoint consecutive batches of length
//! `n0`. In every batch the number of monochromatic `d`-subsets is counted
//! exactly and normalized by `C(n0, d)`; the estimate is the mean of the
//! normalized batch values. Counting goes through a [`FrequencyTable`], so a
//! batch costs `O(n0)` time and `O(distinct symbols)` memory.

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{validate_order, EstimatorConfig};
use crate::error::{Error, Result};
use crate::numeric::{binomial, compensated_sum, median, moment_to_entropy, ratio_to_f64, Entropy};
use crate::planner::required_batches;
use crate::table::FrequencyTable;

/// Upper limit on the number of tuples [`count_collisions_bruteforce`] enumerates.
pub const BRUTEFORCE_BUDGET: u64 = 1_000_000;

/// Outcome of one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchResult {
    pub collision_count: BigUint,
    pub batch_size: u64,
    /// `collision_count / C(batch_size, d)`, correctly rounded.
    pub normalized: f64,
    /// Distinct symbols seen in the batch.
    pub distinct: usize,
}

impl BatchResult {
    pub fn new(collision_count: BigUint, batch_size: u64, d: u32, distinct: usize) -> Result<Self> {
        let total = binomial(batch_size, d as u64)?;
        if total.is_zero() {
            return Err(Error::Precondition(format!(
                "batch of length {batch_size} is shorter than d = {d}"
            )));
        }
        if collision_count > total {
            return Err(Error::Consistency(format!(
                "collision count {collision_count} exceeds C({batch_size}, {d}) = {total}"
            )));
        }
        let normalized = ratio_to_f64(&collision_count, &total);
        Ok(Self {
            collision_count,
            batch_size,
            normalized,
            distinct,
        })
    }

    pub fn from_table(table: &FrequencyTable, d: u32) -> Result<Self> {
        Self::new(table.collision_sum(d)?, table.total(), d, table.distinct())
    }
}

/// Final estimate with sample accounting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub p_hat: f64,
    pub renyi_entropy_bits: Entropy,
    pub d: u32,
    pub n_used: u64,
    pub n_batches: u64,
    pub batch_size: u64,
    /// Samples beyond the last full batch (or group) that were ignored.
    pub n_dropped: u64,
    /// Largest number of distinct symbols tracked in any one batch.
    pub peak_distinct: u64,
}

impl MomentEstimate {
    fn from_batches(
        d: u32,
        batch_size: u64,
        p_hat: f64,
        n_batches: u64,
        n_dropped: u64,
        peak_distinct: u64,
    ) -> Result<Self> {
        let p_hat = p_hat.clamp(0.0, 1.0);
        let renyi_entropy_bits = if p_hat > 0.0 {
            Entropy::Exact(moment_to_entropy(p_hat, d)?)
        } else {
            let resolution = binomial(batch_size, d as u64)? * n_batches;
            Entropy::AtLeast(moment_to_entropy(
                ratio_to_f64(&BigUint::one(), &resolution),
                d,
            )?)
        };
        Ok(Self {
            p_hat,
            renyi_entropy_bits,
            d,
            n_used: n_batches * batch_size,
            n_batches,
            batch_size,
            n_dropped,
            peak_distinct,
        })
    }
}

/// `sum_x C(n_x, d)` over the batch's symbol counts.
pub fn count_collisions(batch: &[u64], d: u32) -> Result<BigUint> {
    validate_order(d)?;
    check_batch_len(batch.len(), d)?;
    FrequencyTable::from_symbols(batch).collision_sum(d)
}

/// Enumerates every `d`-subset of positions and counts the constant ones.
pub fn count_collisions_bruteforce(batch: &[u64], d: u32) -> Result<BigUint> {
    validate_order(d)?;
    check_batch_len(batch.len(), d)?;
    let tuples = binomial(batch.len() as u64, d as u64)?;
    if tuples > BigUint::from(BRUTEFORCE_BUDGET) {
        return Err(Error::Range(format!(
            "C({}, {d}) = {tuples} tuples exceeds the enumeration budget {BRUTEFORCE_BUDGET}",
            batch.len()
        )));
    }
    let hits = (0..batch.len())
        .combinations(d as usize)
        .filter(|idx| idx.iter().all(|&i| batch[i] == batch[idx[0]]))
        .count();
    Ok(BigUint::from(hits))
}

fn check_batch_len(len: usize, d: u32) -> Result<()> {
    if (len as u64) < d as u64 {
        return Err(Error::Precondition(format!(
            "batch of length {len} is shorter than d = {d}"
        )));
    }
    Ok(())
}

/// Batch length and count for `n` available samples: `m` is fixed by
/// `(epsilon, delta)` and `n0` is the override or `floor(n / m)`.
pub fn resolve_batching(config: &EstimatorConfig, available: u64) -> Result<(u64, u64)> {
    config.validate()?;
    let m = required_batches(config.epsilon, config.delta, 1.0)?;
    let n0 = config.batch_size.unwrap_or(available / m);
    let needed = m.saturating_mul(n0.max(config.d as u64));
    if n0 < config.d as u64 || needed > available {
        return Err(Error::InsufficientData {
            required: needed,
            available,
        });
    }
    Ok((n0, m))
}

/// Per-batch results over the first `m * n0` samples, in batch order.
pub fn batch_results(samples: &[u64], d: u32, batch_size: u64, n_batches: u64) -> Result<Vec<BatchResult>> {
    let needed = batch_size.saturating_mul(n_batches);
    if batch_size < d as u64 || (samples.len() as u64) < needed {
        return Err(Error::InsufficientData {
            required: needed.max(n_batches.saturating_mul(d as u64)),
            available: samples.len() as u64,
        });
    }
    samples
        .par_chunks_exact(batch_size as usize)
        .take(n_batches as usize)
        .map(|chunk| BatchResult::from_table(&FrequencyTable::from_symbols(chunk), d))
        .collect()
}

fn peak_distinct(batches: &[BatchResult]) -> u64 {
    batches.iter().map(|b| b.distinct as u64).max().unwrap_or(0)
}

/// Mean of normalized collision counts over disjoint batches.
pub fn estimate_moment(samples: &[u64], config: &EstimatorConfig) -> Result<MomentEstimate> {
    let (n0, m) = resolve_batching(config, samples.len() as u64)?;
    estimate_with_batching(samples, config.d, n0, m)
}

/// As [`estimate_moment`] with explicit batching, e.g. from a [`crate::planner::SamplePlan`].
pub fn estimate_with_batching(samples: &[u64], d: u32, batch_size: u64, n_batches: u64) -> Result<MomentEstimate> {
    validate_order(d)?;
    let batches = batch_results(samples, d, batch_size, n_batches)?;
    let p_hat = compensated_sum(batches.iter().map(|b| b.normalized)) / n_batches as f64;
    MomentEstimate::from_batches(
        d,
        batch_size,
        p_hat,
        n_batches,
        samples.len() as u64 - n_batches * batch_size,
        peak_distinct(&batches),
    )
}

/// Median over `groups` equal groups of per-group batch means. Batches that
/// do not fill a whole group are dropped.
pub fn median_of_means_estimate(
    samples: &[u64],
    config: &EstimatorConfig,
    groups: u64,
) -> Result<MomentEstimate> {
    let (n0, m) = resolve_batching(config, samples.len() as u64)?;
    median_of_means_with_batching(samples, config.d, n0, m, groups)
}

pub fn median_of_means_with_batching(
    samples: &[u64],
    d: u32,
    batch_size: u64,
    n_batches: u64,
    groups: u64,
) -> Result<MomentEstimate> {
    validate_order(d)?;
    if groups == 0 || groups > n_batches {
        return Err(Error::Precondition(format!(
            "groups = {groups} must lie in [1, {n_batches}]"
        )));
    }
    let batches = batch_results(samples, d, batch_size, n_batches)?;
    let per_group = (n_batches / groups) as usize;
    let means: Vec<f64> = batches
        .chunks_exact(per_group)
        .take(groups as usize)
        .map(|g| compensated_sum(g.iter().map(|b| b.normalized)) / per_group as f64)
        .collect();
    let used_batches = groups * per_group as u64;
    let p_hat = median(&means).expect("at least one group");
    MomentEstimate::from_batches(
        d,
        batch_size,
        p_hat,
        used_batches,
        samples.len() as u64 - used_batches * batch_size,
        peak_distinct(&batches[..used_batches as usize]),
    )
}

/// Incremental estimator for a token stream with known batching. Only the
/// current batch's frequency table is held in memory.
#[derive(Debug, Clone)]
pub struct BatchStream {
    d: u32,
    batch_size: u64,
    n_batches: u64,
    current: FrequencyTable,
    normalized: Vec<f64>,
    peak_distinct: u64,
    consumed: u64,
    extra: u64,
}

impl BatchStream {
    pub fn new(d: u32, batch_size: u64, n_batches: u64) -> Result<Self> {
        validate_order(d)?;
        if batch_size < d as u64 {
            return Err(Error::Precondition(format!(
                "batch size {batch_size} is smaller than d = {d}"
            )));
        }
        if n_batches == 0 {
            return Err(Error::Precondition("at least one batch is required".into()));
        }
        // fail early on batches outside the exact-arithmetic envelope
        binomial(batch_size, d as u64)?;
        Ok(Self {
            d,
            batch_size,
            n_batches,
            current: FrequencyTable::with_capacity(batch_size.min(1 << 16) as usize),
            normalized: Vec::with_capacity(n_batches.min(1 << 20) as usize),
            peak_distinct: 0,
            consumed: 0,
            extra: 0,
        })
    }

    pub fn required(&self) -> u64 {
        self.batch_size * self.n_batches
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    pub fn is_complete(&self) -> bool {
        self.normalized.len() as u64 == self.n_batches
    }

    /// Feeds one token. Tokens arriving after the last batch is full are
    /// counted as dropped.
    pub fn push(&mut self, symbol: u64) -> Result<()> {
        if self.is_complete() {
            self.extra += 1;
            return Ok(());
        }
        self.current.insert(symbol);
        self.consumed += 1;
        if self.current.total() == self.batch_size {
            let batch = BatchResult::from_table(&self.current, self.d)?;
            self.peak_distinct = self.peak_distinct.max(batch.distinct as u64);
            self.normalized.push(batch.normalized);
            self.current.clear();
        }
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = u64>>(&mut self, symbols: I) -> Result<()> {
        for s in symbols {
            self.push(s)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<MomentEstimate> {
        if !self.is_complete() {
            return Err(Error::InsufficientData {
                required: self.required(),
                available: self.consumed,
            });
        }
        let p_hat = compensated_sum(self.normalized.iter().copied()) / self.n_batches as f64;
        MomentEstimate::from_batches(
            self.d,
            self.batch_size,
            p_hat,
            self.n_batches,
            self.extra,
            self.peak_distinct,
        )
    }
}
