//! Simple tabulation hashing.
//!
//! A key of `c·q` bits is split into `c` characters of `q` bits each; the
//! hash is the XOR of one table lookup per character position. Position 0
//! holds the least-significant `q` bits of the key.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub const MAX_CHARS: u32 = 8;
pub const MAX_CHAR_BITS: u32 = 16;
pub const MAX_OUTPUT_BITS: u32 = 64;

/// Character decomposition of the key universe and the output width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharSpec {
    /// Number of characters per key.
    pub c: u32,
    /// Bits per character.
    pub q: u32,
    /// Output bits.
    pub r: u32,
}

impl CharSpec {
    pub fn new(c: u32, q: u32, r: u32) -> Result<Self> {
        let spec = CharSpec { c, q, r };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_CHARS).contains(&self.c) {
            return Err(Error::Config(format!(
                "c = {} not in 1..={MAX_CHARS}",
                self.c
            )));
        }
        if !(1..=MAX_CHAR_BITS).contains(&self.q) {
            return Err(Error::Config(format!(
                "q = {} not in 1..={MAX_CHAR_BITS}",
                self.q
            )));
        }
        if !(1..=MAX_OUTPUT_BITS).contains(&self.r) {
            return Err(Error::Config(format!(
                "r = {} not in 1..={MAX_OUTPUT_BITS}",
                self.r
            )));
        }
        if self.c * self.q > 64 {
            return Err(Error::Config(format!(
                "c*q = {} exceeds a 64-bit key",
                self.c * self.q
            )));
        }
        Ok(())
    }

    /// Bits in a key, `c·q`.
    pub fn key_bits(&self) -> u32 {
        self.c * self.q
    }

    /// Alphabet size `2^q`.
    pub fn alphabet(&self) -> usize {
        1usize << self.q
    }

    /// Largest valid key value.
    pub fn max_key(&self) -> u64 {
        low_mask(self.key_bits())
    }

    pub fn output_mask(&self) -> u64 {
        low_mask(self.r)
    }

    pub fn check_key(&self, key: Key) -> Result<()> {
        if key.0 > self.max_key() {
            Err(Error::Domain(format!(
                "key {:#x} outside universe of {} bits",
                key.0,
                self.key_bits()
            )))
        } else {
            Ok(())
        }
    }

    /// Characters of `key`, position 0 first. The key is not range-checked.
    pub(crate) fn chars_unchecked(&self, key: Key) -> impl Iterator<Item = u32> + '_ {
        let mask = low_mask(self.q);
        (0..self.c).map(move |i| ((key.0 >> (i * self.q)) & mask) as u32)
    }

    /// Inverse of [`derive_characters`].
    pub fn assemble(&self, chars: &[u32]) -> Result<Key> {
        if chars.len() != self.c as usize {
            return Err(Error::Domain(format!(
                "expected {} characters, got {}",
                self.c,
                chars.len()
            )));
        }
        let mut value = 0u64;
        for (i, &ch) in chars.iter().enumerate() {
            if ch as usize >= self.alphabet() {
                return Err(Error::Domain(format!(
                    "character {ch} exceeds alphabet 2^{}",
                    self.q
                )));
            }
            value |= (ch as u64) << (i as u32 * self.q);
        }
        Ok(Key(value))
    }
}

fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// A key of the universe `[2^{c·q}]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Key(pub u64);

/// A `(position, character)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PositionCharacter {
    pub position: u32,
    pub character: u32,
}

impl PositionCharacter {
    pub fn new(position: u32, character: u32) -> Self {
        PositionCharacter {
            position,
            character,
        }
    }
}

/// Splits `key` into its `c` characters, least-significant first.
pub fn derive_characters(key: Key, spec: &CharSpec) -> Result<Vec<u32>> {
    spec.check_key(key)?;
    Ok(spec.chars_unchecked(key).collect())
}

/// The `c` position characters of `key`.
pub fn position_characters(key: Key, spec: &CharSpec) -> Result<Vec<PositionCharacter>> {
    spec.check_key(key)?;
    Ok(spec
        .chars_unchecked(key)
        .enumerate()
        .map(|(i, ch)| PositionCharacter::new(i as u32, ch))
        .collect())
}

/// The `c` character tables of one simple tabulation hash function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TabulationTables {
    spec: CharSpec,
    seed: u64,
    tables: Vec<Vec<u64>>,
}

impl TabulationTables {
    /// Fills table `i` from the ChaCha stream `(seed, i)`, masked to `r` bits.
    pub fn build(spec: CharSpec, seed: u64) -> Self {
        let mask = spec.output_mask();
        let tables = (0..spec.c)
            .map(|i| {
                let mut rng = seed::stream(seed, i as u64);
                (0..spec.alphabet())
                    .map(|_| rng.next_u64() & mask)
                    .collect()
            })
            .collect();
        TabulationTables { spec, seed, tables }
    }

    /// Tables with explicit entries. Seed is recorded as 0.
    pub fn from_entries(spec: CharSpec, tables: Vec<Vec<u64>>) -> Result<Self> {
        spec.validate()?;
        if tables.len() != spec.c as usize {
            return Err(Error::Config(format!(
                "expected {} tables, got {}",
                spec.c,
                tables.len()
            )));
        }
        let mask = spec.output_mask();
        for (i, t) in tables.iter().enumerate() {
            if t.len() != spec.alphabet() {
                return Err(Error::Config(format!(
                    "table {i} has {} entries, expected {}",
                    t.len(),
                    spec.alphabet()
                )));
            }
            if let Some(v) = t.iter().find(|&&v| v & !mask != 0) {
                return Err(Error::Config(format!(
                    "entry {v:#x} in table {i} exceeds {} bits",
                    spec.r
                )));
            }
        }
        Ok(TabulationTables {
            spec,
            seed: 0,
            tables,
        })
    }

    /// All-zero tables.
    pub fn zeroed(spec: CharSpec) -> Self {
        TabulationTables {
            spec,
            seed: 0,
            tables: vec![vec![0; spec.alphabet()]; spec.c as usize],
        }
    }

    pub fn spec(&self) -> &CharSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn tables(&self) -> &[Vec<u64>] {
        &self.tables
    }

    pub fn entry(&self, position: u32, character: u32) -> u64 {
        self.tables[position as usize][character as usize]
    }

    pub(crate) fn tables_mut(&mut self) -> &mut [Vec<u64>] {
        &mut self.tables
    }

    pub fn hash(&self, key: Key) -> Result<u64> {
        self.spec.check_key(key)?;
        Ok(self.hash_unchecked(key))
    }

    /// Hash of a key already known to be in range.
    #[inline]
    pub fn hash_unchecked(&self, key: Key) -> u64 {
        let q = self.spec.q;
        let mask = low_mask(q);
        let mut h = 0;
        let mut x = key.0;
        for t in &self.tables {
            h ^= t[(x & mask) as usize];
            x = x.checked_shr(q).unwrap_or(0);
        }
        h
    }

    /// XOR of the table entries selected by `pcs`. The empty set hashes to 0.
    pub fn hash_position_set<'a>(
        &self,
        pcs: impl IntoIterator<Item = &'a PositionCharacter>,
    ) -> u64 {
        pcs.into_iter()
            .fold(0, |h, pc| h ^ self.entry(pc.position, pc.character))
    }
}

/// Convenience wrapper for [`TabulationTables::build`].
pub fn build_tables(spec: CharSpec, seed: u64) -> TabulationTables {
    TabulationTables::build(spec, seed)
}
