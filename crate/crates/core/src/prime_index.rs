//! Primes and the correspondence `n = p^alpha` between positive integers and
//! finite multi-indices.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::OnceLock;

/// Sieve bound of the shared table.
pub const DEFAULT_BOUND: u64 = 10_000_000;

/// Ascending primes up to a fixed bound. Immutable once built.
#[derive(Debug, Clone)]
pub struct PrimeTable {
    bound: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn new(bound: u64) -> Self {
        let b = bound as usize;
        let mut composite = vec![false; b + 1];
        let mut primes = Vec::new();
        for i in 2..=b {
            if composite[i] {
                continue;
            }
            primes.push(i as u64);
            let mut j = i.saturating_mul(i);
            while j <= b {
                composite[j] = true;
                j += i;
            }
        }
        PrimeTable { bound, primes }
    }

    /// Process-wide table with bound [`DEFAULT_BOUND`], built on first use.
    pub fn global() -> &'static PrimeTable {
        static TABLE: OnceLock<PrimeTable> = OnceLock::new();
        TABLE.get_or_init(|| PrimeTable::new(DEFAULT_BOUND))
    }

    pub fn bound(&self) -> u64 {
        self.bound
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Primes in `[lo, hi]`.
    pub fn range(&self, lo: u64, hi: u64) -> &[u64] {
        let a = self.primes.partition_point(|&p| p < lo);
        let b = self.primes.partition_point(|&p| p <= hi);
        &self.primes[a..b.max(a)]
    }

    /// The k-th prime, 1-based.
    pub fn nth_prime(&self, k: usize) -> Result<u64> {
        if k == 0 {
            return Err(Error::Domain("prime index starts at 1".into()));
        }
        self.primes.get(k - 1).copied().ok_or(Error::TableTooSmall {
            requested: k as u64,
            capacity: self.primes.len() as u64,
        })
    }

    /// 1-based position of the prime `p`, if `p` is a tabulated prime.
    pub fn index_of(&self, p: u64) -> Option<usize> {
        self.primes.binary_search(&p).ok().map(|i| i + 1)
    }

    /// Prime factorization as `(prime, exponent)` pairs in ascending order.
    pub fn factor_pairs(&self, n: u64) -> Result<Vec<(u64, u32)>> {
        if n == 0 {
            return Err(Error::Domain("cannot factorize 0".into()));
        }
        let limit = (self.bound as u128) * (self.bound as u128);
        if (n as u128) > limit {
            return Err(Error::TableTooSmall {
                requested: n,
                capacity: self.bound,
            });
        }
        let mut rest = n;
        let mut out = Vec::new();
        for &p in &self.primes {
            if p * p > rest {
                break;
            }
            if rest % p == 0 {
                let mut e = 0;
                while rest % p == 0 {
                    rest /= p;
                    e += 1;
                }
                out.push((p, e));
            }
        }
        if rest > 1 {
            out.push((rest, 1));
        }
        Ok(out)
    }

    pub fn factorize(&self, n: u64) -> Result<MultiIndex> {
        let pairs = self.factor_pairs(n)?;
        let Some(&(largest, _)) = pairs.last() else {
            return Ok(MultiIndex::default());
        };
        let len = self.index_of(largest).ok_or(Error::TableTooSmall {
            requested: largest,
            capacity: self.bound,
        })?;
        let mut exps = vec![0u32; len];
        for (p, e) in pairs {
            // every factor except possibly the last is below the bound
            let k = self.index_of(p).ok_or(Error::TableTooSmall {
                requested: p,
                capacity: self.bound,
            })?;
            exps[k - 1] = e;
        }
        Ok(MultiIndex::new(exps))
    }

    pub fn compose(&self, alpha: &MultiIndex) -> Result<u64> {
        let mut n: u64 = 1;
        for (k, &e) in alpha.exponents().iter().enumerate() {
            if e == 0 {
                continue;
            }
            let p = self.nth_prime(k + 1)?;
            let pe = p
                .checked_pow(e)
                .ok_or_else(|| Error::Overflow(format!("{p}^{e}")))?;
            n = n
                .checked_mul(pe)
                .ok_or_else(|| Error::Overflow(format!("composing {alpha}")))?;
        }
        Ok(n)
    }

    /// Number of prime factors counted with multiplicity.
    pub fn omega(&self, n: u64) -> Result<u32> {
        Ok(self.factor_pairs(n)?.iter().map(|&(_, e)| e).sum())
    }
}

/// Exponent tuple `(alpha_1, ..., alpha_N)`; trailing zeros are trimmed so
/// that equal indices compare equal structurally.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(mut exponents: Vec<u32>) -> Self {
        while exponents.last() == Some(&0) {
            exponents.pop();
        }
        MultiIndex(exponents)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    /// Number of variables up to the last nonzero exponent.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn get(&self, k: usize) -> u32 {
        self.0.get(k).copied().unwrap_or(0)
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        let len = self.len().max(other.len());
        MultiIndex::new((0..len).map(|k| self.get(k) + other.get(k)).collect())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// Shorthands against the shared table.
pub fn nth_prime(k: usize) -> Result<u64> {
    PrimeTable::global().nth_prime(k)
}

pub fn factorize(n: u64) -> Result<MultiIndex> {
    PrimeTable::global().factorize(n)
}

pub fn compose(alpha: &MultiIndex) -> Result<u64> {
    PrimeTable::global().compose(alpha)
}

pub fn omega(n: u64) -> Result<u32> {
    PrimeTable::global().omega(n)
}
