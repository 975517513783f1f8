use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::MAX_BINOMIAL_K;

/// Parameters of a moment estimation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Moment order.
    pub d: u32,
    /// Relative error target, in (0, 1].
    pub epsilon: f64,
    /// Failure probability, in (0, 1).
    pub delta: f64,
    /// Batch length override. When unset the batch length is derived from
    /// the sample count or a plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<u64>,
    pub seed: u64,
}

impl EstimatorConfig {
    pub fn new(d: u32, epsilon: f64, delta: f64) -> Result<Self> {
        let cfg = Self {
            d,
            epsilon,
            delta,
            batch_size: None,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_batch_size(mut self, batch_size: u64) -> Result<Self> {
        self.batch_size = Some(batch_size);
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        validate_order(self.d)?;
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon = {} must lie in (0, 1]",
                self.epsilon
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "delta = {} must lie in (0, 1)",
                self.delta
            )));
        }
        if let Some(n0) = self.batch_size {
            if n0 < self.d as u64 {
                return Err(Error::InvalidConfig(format!(
                    "batch size {n0} is smaller than the order d = {}",
                    self.d
                )));
            }
        }
        Ok(())
    }
}

pub(crate) fn validate_order(d: u32) -> Result<()> {
    if d < 2 || d as u64 > MAX_BINOMIAL_K {
        return Err(Error::InvalidConfig(format!(
            "order d = {d} must lie in [2, {MAX_BINOMIAL_K}]"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_valid() {
        let cfg = EstimatorConfig::new(2, 1.0, 0.1).unwrap();
        assert_eq!(cfg.batch_size, None);
        assert!(cfg.with_batch_size(2).is_ok());
    }

    #[test]
    fn rejects_invalid() {
        assert!(EstimatorConfig::new(1, 0.5, 0.1).is_err());
        assert!(EstimatorConfig::new(17, 0.5, 0.1).is_err());
        assert!(EstimatorConfig::new(2, 0.0, 0.1).is_err());
        assert!(EstimatorConfig::new(2, 1.5, 0.1).is_err());
        assert!(EstimatorConfig::new(2, 0.5, 0.0).is_err());
        assert!(EstimatorConfig::new(2, 0.5, 1.0).is_err());
        let cfg = EstimatorConfig::new(3, 0.5, 0.1).unwrap();
        assert!(matches!(cfg.with_batch_size(2), Err(Error::InvalidConfig(_))));
    }
}
