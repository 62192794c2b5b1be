//! A key set on which simple tabulation can behave much worse than fully
//! random hashing, and a table-rigging mode that forces the bad event.
//!
//! The keys are `[n / k^{c-1}] × [k]^{c-1}`. If for every position `i ≥ 1`
//! the first `k` characters hash identically (in both functions), each
//! key's bins depend only on its position-0 character, so every bin pair is
//! repeated `k^{c-1}` times, and in lexicographic order the repeats arrive
//! back to back.

use serde::{Deserialize, Serialize};

use crate::allocator::{place_all, AllocationConfig, RunTrace, Scheme};
use crate::error::{Error, Result};
use crate::tabulation::{CharSpec, Key, TabulationTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversarialSpec {
    /// Number of keys; a multiple of `k^{c-1}`.
    pub n: u64,
    pub k: u32,
    pub spec: CharSpec,
}

impl AdversarialSpec {
    pub fn new(n: u64, k: u32, spec: CharSpec) -> Result<Self> {
        let a = AdversarialSpec { n, k, spec };
        a.validate()?;
        Ok(a)
    }

    /// `k^{c-1}`, the number of copies of each position-0 block.
    pub fn copies(&self) -> Option<u64> {
        (self.k as u64).checked_pow(self.spec.c - 1)
    }

    /// Size of the position-0 range, `n / k^{c-1}`.
    pub fn base_len(&self) -> u64 {
        self.n / self.copies().unwrap_or(u64::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let alphabet = self.spec.alphabet() as u64;
        if self.k == 0 || self.k as u64 > alphabet {
            return Err(Error::Config(format!(
                "k = {} not in 1..={alphabet}",
                self.k
            )));
        }
        let copies = self
            .copies()
            .ok_or_else(|| Error::Config("k^(c-1) overflows".into()))?;
        if !self.n.is_multiple_of(copies) {
            return Err(Error::Config(format!(
                "n = {} is not a multiple of k^(c-1) = {copies}",
                self.n
            )));
        }
        if self.n / copies > alphabet {
            return Err(Error::Config(format!(
                "n / k^(c-1) = {} exceeds alphabet 2^{}",
                self.n / copies,
                self.spec.q
            )));
        }
        Ok(())
    }
}

/// All keys of `[n / k^{c-1}] × [k]^{c-1}` in lexicographic order of the
/// character tuple `(x_0, x_1, …, x_{c-1})`: position 0 is compared first, so
/// the `k^{c-1}` keys sharing a position-0 character are contiguous.
pub fn generate_adversarial_keys(aspec: &AdversarialSpec) -> Result<Vec<Key>> {
    aspec.validate()?;
    let spec = &aspec.spec;
    let k = aspec.k as u64;
    let tails = aspec.copies().expect("validated");
    let mut keys = Vec::with_capacity(aspec.n as usize);
    for x0 in 0..aspec.base_len() {
        for j in 0..tails {
            // digits of j in base k, position c - 1 least significant
            let mut rest = j;
            let mut value = x0;
            for pos in (1..spec.c).rev() {
                value |= (rest % k) << (pos * spec.q);
                rest /= k;
            }
            keys.push(Key(value));
        }
    }
    Ok(keys)
}

/// Copy of `tables` with `T_i[0..k]` all set to `T_i[0]` for every position `i ≥ 1`.
pub fn rig_tables(tables: &TabulationTables, k: u32) -> TabulationTables {
    let mut out = tables.clone();
    for t in out.tables_mut().iter_mut().skip(1) {
        let first = t[0];
        let k = (k as usize).min(t.len());
        t[..k].fill(first);
    }
    out
}

/// Places the adversarial keys into `n_bins` bins per table, with tables
/// built from `seed` and optionally rigged.
pub fn run_adversary(
    aspec: &AdversarialSpec,
    n_bins: u32,
    seed: u64,
    rigged: bool,
) -> Result<RunTrace> {
    let keys = generate_adversarial_keys(aspec)?;
    let scheme = if rigged {
        Scheme::RiggedTabulation
    } else {
        Scheme::Tabulation
    };
    let m = u32::try_from(keys.len()).map_err(|_| Error::Config("too many keys".into()))?;
    let config = AllocationConfig::new(n_bins, m, scheme, aspec.spec.c, aspec.spec.q, seed)?
        .with_rig_k(aspec.k);
    if config.spec.r != aspec.spec.r {
        return Err(Error::Config(format!(
            "spec has r = {} but n_bins = {n_bins} needs r = {}",
            aspec.spec.r, config.spec.r
        )));
    }
    place_all(&keys, config)
}

/// Whether every pair of keys agreeing in position 0 receives identical
/// values under both functions.
pub fn rigging_collapses(trace: &RunTrace) -> bool {
    let Some(tables) = trace.config().tables() else {
        return false;
    };
    let q = trace.config().spec.q;
    let mask = (1u64 << q) - 1;
    let mut by_low: std::collections::HashMap<u64, [u64; 2]> = std::collections::HashMap::new();
    trace.records().iter().all(|r| {
        let h = [0, 1].map(|s| tables[s].hash_unchecked(r.key));
        *by_low.entry(r.key.0 & mask).or_insert(h) == h
    })
}
