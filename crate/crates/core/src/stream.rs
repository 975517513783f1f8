//! Power sums of symbol counts and their conversion to collision sums.
//!
//! `sum_x C(n_x, d)` is a degree-`d` polynomial in the counts, so it can be
//! assembled from the empirical power sums `F_j = sum_x n_x^j`:
//!
//! ```text
//! d! * sum_x C(n_x, d) = sum_{j=1..d} s(d, j) F_j        (signed Stirling, first kind)
//! n^k                  = sum_{j=0..k} S(k, j) j! C(n, j) (Stirling, second kind)
//! ```
//!
//! The exact path keeps per-symbol counts. [`ams_fk_estimate`] is the
//! bounded-memory alternative for `F_k`.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::numeric::{binomial_big, factorial, median, CompensatedSum, MAX_BINOMIAL_K};
use crate::table::FrequencyTable;

/// Largest table order built on demand by the free functions.
pub const DEFAULT_K_MAX: u32 = 2 * MAX_BINOMIAL_K as u32;

/// Triangular tables of `S(k, j)` and signed `s(k, j)` for `0 <= j <= k <= k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct StirlingTable {
    k_max: u32,
    second_kind: Vec<Vec<BigUint>>,
    first_kind_signed: Vec<Vec<BigInt>>,
}

impl StirlingTable {
    pub fn new(k_max: u32) -> Self {
        let k = k_max as usize;
        let mut second = vec![vec![BigUint::zero(); k + 1]; k + 1];
        let mut first = vec![vec![BigInt::zero(); k + 1]; k + 1];
        second[0][0] = BigUint::one();
        first[0][0] = BigInt::one();
        for n in 1..=k {
            for j in 1..=n {
                second[n][j] = &second[n - 1][j] * j + &second[n - 1][j - 1];
                first[n][j] = &first[n - 1][j - 1] - &first[n - 1][j] * (n - 1);
            }
        }
        Self {
            k_max,
            second_kind: second,
            first_kind_signed: first,
        }
    }

    /// Table sized for moment order `d` (up to `2d`, enough for variance formulas).
    pub fn for_order(d: u32) -> Self {
        Self::new(2 * d)
    }

    pub fn k_max(&self) -> u32 {
        self.k_max
    }

    fn check(&self, k: u32, j: u32) -> Result<()> {
        if k > self.k_max || j > self.k_max {
            return Err(Error::Range(format!(
                "Stirling index ({k}, {j}) outside table of order {}",
                self.k_max
            )));
        }
        Ok(())
    }

    /// `S(k, j)`, zero for `j > k`.
    pub fn second(&self, k: u32, j: u32) -> Result<&BigUint> {
        self.check(k, j)?;
        Ok(&self.second_kind[k as usize][j as usize])
    }

    /// Signed `s(k, j)`, zero for `j > k`.
    pub fn first_signed(&self, k: u32, j: u32) -> Result<&BigInt> {
        self.check(k, j)?;
        Ok(&self.first_kind_signed[k as usize][j as usize])
    }

    /// `sum_x C(n_x, d)` from `F_1..F_d`.
    pub fn collision_sum(&self, sums: &PowerSums, d: u32) -> Result<BigUint> {
        if d == 0 || d > self.k_max {
            return Err(Error::Range(format!("order {d} outside table of order {}", self.k_max)));
        }
        if sums.order() < d {
            return Err(Error::Precondition(format!(
                "power sums known up to order {}, need {d}",
                sums.order()
            )));
        }
        let mut acc = BigInt::zero();
        for j in 1..=d {
            acc += self.first_signed(d, j)? * BigInt::from(sums.get(j)?.clone());
        }
        let (q, r) = acc.div_rem(&BigInt::from(factorial(d as u64)));
        if !r.is_zero() || q.sign() == Sign::Minus {
            return Err(Error::Consistency(format!(
                "sum_j s({d},j) F_j = {acc} is not a non-negative multiple of {d}!"
            )));
        }
        Ok(q.magnitude().clone())
    }

    /// `F_k` rebuilt from binomial sums `B_j = sum_x C(n_x, j)`, `j = 0..=k`.
    pub fn power_sum_from_binomial_sums(&self, binomial_sums: &[BigUint], k: u32) -> Result<BigUint> {
        if binomial_sums.len() < k as usize + 1 {
            return Err(Error::Precondition(format!(
                "need binomial sums of orders 0..={k}, got {}",
                binomial_sums.len()
            )));
        }
        let mut acc = BigUint::zero();
        for j in 0..=k {
            acc += self.second(k, j)? * factorial(j as u64) * &binomial_sums[j as usize];
        }
        Ok(acc)
    }
}

/// `S(k, j)` via `S(k, j) = j S(k-1, j) + S(k-1, j-1)`.
pub fn stirling_second(k: u32, j: u32) -> Result<BigUint> {
    if k > DEFAULT_K_MAX || j > k {
        return Err(Error::Range(format!(
            "S({k}, {j}) requires 0 <= j <= k <= {DEFAULT_K_MAX}"
        )));
    }
    Ok(StirlingTable::new(k).second(k, j)?.clone())
}

/// Checks `x^k = sum_{j=0..k} S(k, j) j! C(x, j)` in exact arithmetic.
pub fn basis_identity_check(x: u64, k: u32) -> bool {
    let table = StirlingTable::new(k);
    let rhs: BigUint = (0..=k)
        .map(|j| {
            table.second_kind[k as usize][j as usize].clone()
                * factorial(j as u64)
                * binomial_big(x, j as u64)
        })
        .sum();
    BigUint::from(x).pow(k) == rhs
}

/// `sum_x C(n_x, d)` from power sums, building a Stirling table on the fly.
pub fn collision_sum_from_power_sums(sums: &PowerSums, d: u32) -> Result<BigUint> {
    StirlingTable::new(d).collision_sum(sums, d)
}

/// Exact empirical power sums `F_j = sum_x n_x^j` for `j = 1..=order`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSums {
    sums: Vec<BigUint>,
    n: u64,
}

impl PowerSums {
    pub fn new(order: u32) -> Self {
        Self {
            sums: vec![BigUint::zero(); order as usize],
            n: 0,
        }
    }

    pub fn from_table(table: &FrequencyTable, order: u32) -> Self {
        let mut sums = vec![BigUint::zero(); order as usize];
        for c in table.counts() {
            let mut pow = BigUint::one();
            for s in sums.iter_mut() {
                pow *= c;
                *s += &pow;
            }
        }
        Self {
            sums,
            n: table.total(),
        }
    }

    pub fn order(&self) -> u32 {
        self.sums.len() as u32
    }

    /// Total number of tokens.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// `F_j` for `1 <= j <= order`.
    pub fn get(&self, j: u32) -> Result<&BigUint> {
        if j == 0 || j > self.order() {
            return Err(Error::Range(format!("F_{j} outside 1..={}", self.order())));
        }
        Ok(&self.sums[j as usize - 1])
    }

    /// Applies one count increment `c -> c + 1`: `F_j += (c+1)^j - c^j`.
    fn bump(&mut self, c: u64) {
        let mut old = BigUint::one();
        let mut new = BigUint::one();
        for s in self.sums.iter_mut() {
            old *= c;
            new *= c + 1;
            *s += &new - &old;
        }
        self.n += 1;
    }
}

/// Exact incremental power sums over a stream. Memory grows with the number
/// of distinct symbols.
#[derive(Debug, Clone, Default)]
pub struct StreamingPowerSums {
    counts: FxHashMap<u64, u64>,
    sums: Option<PowerSums>,
}

impl StreamingPowerSums {
    pub fn new(order: u32) -> Self {
        Self {
            counts: FxHashMap::default(),
            sums: Some(PowerSums::new(order)),
        }
    }

    pub fn push(&mut self, symbol: u64) {
        let c = self.counts.entry(symbol).or_insert(0);
        let before = *c;
        *c += 1;
        self.sums.as_mut().expect("initialized").bump(before);
    }

    pub fn power_sums(&self) -> &PowerSums {
        self.sums.as_ref().expect("initialized")
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }
}

impl Extend<u64> for StreamingPowerSums {
    fn extend<I: IntoIterator<Item = u64>>(&mut self, iter: I) {
        for s in iter {
            self.push(s);
        }
    }
}

/// `r^k - (r-1)^k` for `r >= 1`.
fn increment(r: u64, k: u32) -> BigUint {
    BigUint::from(r).pow(k) - BigUint::from(r - 1).pow(k)
}

/// `sum over positions i of (r_i^k - (r_i - 1)^k)`, where `r_i` counts the
/// occurrences of `stream[i]` at positions `>= i`. Telescopes to `F_k`.
pub fn ams_full_sweep(stream: &[u64], k: u32) -> BigUint {
    let mut suffix: FxHashMap<u64, u64> = FxHashMap::default();
    let mut acc = BigUint::zero();
    for &s in stream.iter().rev() {
        let r = suffix.entry(s).or_insert(0);
        *r += 1;
        acc += increment(*r, k);
    }
    acc
}

/// Median over `groups` of the mean of `reps` sampled estimators
/// `n (r^k - (r-1)^k)`, each from a uniformly random position. One forward
/// pass; memory is `O(reps * groups)`.
pub fn ams_fk_estimate(stream: &[u64], k: u32, reps: usize, groups: usize, seed: u64) -> Result<f64> {
    if stream.is_empty() {
        return Err(Error::Domain("empty stream".into()));
    }
    if k < 1 || reps == 0 || groups == 0 {
        return Err(Error::Domain(format!(
            "need k >= 1, reps >= 1, groups >= 1 (got {k}, {reps}, {groups})"
        )));
    }
    let n = stream.len() as u64;
    let total = reps * groups;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    // multiply-shift range reduction, bias at most n / 2^64
    let mut positions: Vec<(u64, usize)> = (0..total)
        .map(|i| ((((rng.next_u64() as u128) * n as u128) >> 64) as u64, i))
        .collect();
    positions.sort_unstable();

    let mut r = vec![0u64; total];
    let mut active: FxHashMap<u64, Vec<usize>> = FxHashMap::default();
    let mut next = 0;
    for (pos, &s) in stream.iter().enumerate() {
        while next < positions.len() && positions[next].0 == pos as u64 {
            active.entry(s).or_default().push(positions[next].1);
            next += 1;
        }
        if let Some(ids) = active.get(&s) {
            for &id in ids {
                r[id] += 1;
            }
        }
    }

    let nf = n as f64;
    let means: Vec<f64> = r
        .chunks_exact(reps)
        .map(|group| {
            let mut acc = CompensatedSum::new();
            for &ri in group {
                acc.add(nf * increment(ri, k).to_f64().unwrap_or(f64::INFINITY));
            }
            acc.value() / reps as f64
        })
        .collect();
    Ok(median(&means).expect("groups >= 1"))
}
