//! Per-batch symbol counts.

use num_bigint::BigUint;
use num_traits::Zero;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::numeric::{binomial, binomial_u128, MAX_BINOMIAL_N};

/// Symbol -> occurrence count for one batch or sub-stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: FxHashMap<u64, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            counts: FxHashMap::with_capacity_and_hasher(capacity, Default::default()),
            total: 0,
        }
    }

    pub fn from_symbols(symbols: &[u64]) -> Self {
        let mut table = Self::with_capacity(symbols.len().min(1 << 16));
        for &s in symbols {
            table.insert(s);
        }
        table
    }

    #[inline]
    pub fn insert(&mut self, symbol: u64) {
        *self.counts.entry(symbol).or_insert(0) += 1;
        self.total += 1;
    }

    pub fn get(&self, symbol: u64) -> u64 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of distinct symbols.
    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    pub fn counts(&self) -> impl Iterator<Item = u64> + '_ {
        self.counts.values().copied()
    }

    /// Pointwise addition of counts from a disjoint sub-stream.
    pub fn merge(&mut self, other: &FrequencyTable) {
        for (s, c) in other.iter() {
            *self.counts.entry(s).or_insert(0) += c;
        }
        self.total += other.total;
    }

    /// Empties the table, keeping its allocation.
    pub fn clear(&mut self) {
        self.counts.clear();
        self.total = 0;
    }

    /// `sum_x C(n_x, d)`: the number of monochromatic d-subsets.
    pub fn collision_sum(&self, d: u32) -> Result<BigUint> {
        let d = d as u64;
        let mut fast: u128 = 0;
        let mut slow = BigUint::zero();
        for c in self.counts() {
            if c < d {
                continue;
            }
            if c > MAX_BINOMIAL_N {
                return Err(Error::Range(format!(
                    "symbol count {c} exceeds {MAX_BINOMIAL_N}"
                )));
            }
            match binomial_u128(c, d).and_then(|b| fast.checked_add(b)) {
                Some(v) => fast = v,
                None => slow += binomial(c, d)?,
            }
        }
        Ok(slow + fast)
    }
}

impl Extend<u64> for FrequencyTable {
    fn extend<I: IntoIterator<Item = u64>>(&mut self, iter: I) {
        for s in iter {
            self.insert(s);
        }
    }
}

impl FromIterator<u64> for FrequencyTable {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut t = FrequencyTable::new();
        t.extend(iter);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_and_counts() {
        let t = FrequencyTable::from_symbols(&[1, 1, 2, 3, 3, 3]);
        assert_eq!(t.total(), 6);
        assert_eq!(t.distinct(), 3);
        assert_eq!(t.get(3), 3);
        assert_eq!(t.get(9), 0);
        assert_eq!(t.counts().sum::<u64>(), t.total());
    }

    #[test]
    fn merge_is_pointwise() {
        let mut a = FrequencyTable::from_symbols(&[1, 2, 2]);
        let b = FrequencyTable::from_symbols(&[2, 3]);
        a.merge(&b);
        assert_eq!(a, FrequencyTable::from_symbols(&[1, 2, 2, 2, 3]));
    }

    #[test]
    fn collision_sum_small() {
        let t = FrequencyTable::from_symbols(&[7, 7, 9, 9, 9]);
        assert_eq!(t.collision_sum(2).unwrap(), BigUint::from(4u32));
        assert_eq!(t.collision_sum(3).unwrap(), BigUint::from(1u32));
        assert_eq!(t.collision_sum(4).unwrap(), BigUint::zero());
    }

    #[test]
    fn collision_sum_falls_back_to_bignum() {
        // C(10^6, 16) alone overflows u128
        let mut t = FrequencyTable::new();
        t.counts.insert(1, 1_000_000);
        t.counts.insert(2, 1_000_000);
        t.total = 2_000_000;
        let one = binomial(1_000_000, 16).unwrap();
        assert_eq!(t.collision_sum(16).unwrap(), &one + &one);
    }
}
