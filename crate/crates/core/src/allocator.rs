//! The sequential two-choice placement process.
//!
//! Ball `j` is offered bin `h_0(x_j)` in table 0 and bin `h_1(x_j)` in table 1
//! and lands in whichever currently holds fewer balls, table 0 on ties. The
//! run is recorded in full so any time prefix can be replayed.

use std::fmt;
use std::str::FromStr;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::adversary::rig_tables;
use crate::error::{Error, Result};
use crate::seed;
use crate::tabulation::{CharSpec, Key, TabulationTables};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Two independent simple tabulation functions.
    Tabulation,
    /// Bins drawn per ball from the seeded generator; keys are ignored.
    FullyRandom,
    /// Only `h_0` is used, drawn as in `FullyRandom`.
    OneChoice,
    /// Tabulation with both functions rigged by [`rig_tables`].
    RiggedTabulation,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Tabulation,
        Scheme::FullyRandom,
        Scheme::OneChoice,
        Scheme::RiggedTabulation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tabulation => "tabulation",
            Scheme::FullyRandom => "fully-random",
            Scheme::OneChoice => "one-choice",
            Scheme::RiggedTabulation => "rigged-tabulation",
        }
    }

    pub fn uses_tables(self) -> bool {
        matches!(self, Scheme::Tabulation | Scheme::RiggedTabulation)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationConfig {
    /// Bins per table; a power of two.
    pub n: u32,
    /// Number of balls.
    pub m: u32,
    pub scheme: Scheme,
    /// Character layout for the tabulation schemes; `2^r` must equal `n`.
    pub spec: CharSpec,
    /// Rigging width for [`Scheme::RiggedTabulation`].
    #[serde(default)]
    pub rig_k: u32,
    pub seed: u64,
}

impl AllocationConfig {
    /// A config with `r = lg n` and the given character layout.
    pub fn new(n: u32, m: u32, scheme: Scheme, c: u32, q: u32, seed: u64) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::Config(format!(
                "n = {n} must be a power of two >= 2"
            )));
        }
        let cfg = AllocationConfig {
            n,
            m,
            scheme,
            spec: CharSpec::new(c, q, n.trailing_zeros())?,
            rig_k: 0,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_rig_k(mut self, k: u32) -> Self {
        self.rig_k = k;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n.is_power_of_two() || self.n < 2 {
            return Err(Error::Config(format!(
                "n = {} must be a power of two >= 2",
                self.n
            )));
        }
        self.spec.validate()?;
        if self.scheme.uses_tables() && self.n as u64 != 1u64 << self.spec.r {
            return Err(Error::Config(format!(
                "2^r = 2^{} does not match n = {}",
                self.spec.r, self.n
            )));
        }
        if self.scheme == Scheme::RiggedTabulation && self.rig_k as usize > self.spec.alphabet() {
            return Err(Error::Config(format!(
                "rig k = {} exceeds alphabet 2^{}",
                self.rig_k, self.spec.q
            )));
        }
        Ok(())
    }

    /// The hash tables `(h_0, h_1)` for a tabulation scheme, built from the
    /// sub-seeds `(seed, 0)` and `(seed, 1)`.
    pub fn tables(&self) -> Option<[TabulationTables; 2]> {
        if !self.scheme.uses_tables() {
            return None;
        }
        let mut hs =
            [0, 1].map(|side| TabulationTables::build(self.spec, seed::derive(self.seed, side)));
        if self.scheme == Scheme::RiggedTabulation {
            hs = hs.map(|t| rig_tables(&t, self.rig_k));
        }
        Some(hs)
    }
}

/// The canonical key stream `0, 1, …, m − 1`.
pub fn default_keys(m: u32) -> Vec<Key> {
    (0..m as u64).map(Key).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallRecord {
    pub time: u32,
    pub key: Key,
    pub bin0: u32,
    pub bin1: u32,
    /// Table the ball was placed in.
    pub chosen: u8,
    /// Loads of `(bin0, bin1)` just before placement.
    pub load_before: (u32, u32),
}

impl BallRecord {
    pub fn bin(&self, side: usize) -> u32 {
        if side == 0 {
            self.bin0
        } else {
            self.bin1
        }
    }

    pub fn chosen_bin(&self) -> u32 {
        self.bin(self.chosen as usize)
    }
}

/// Ball times per bin, stored compactly for one table.
#[derive(Debug, Clone, PartialEq, Eq)]
struct History {
    offsets: Vec<u32>,
    times: Vec<u32>,
}

impl History {
    fn build(n: u32, records: &[BallRecord], side: u8) -> Self {
        let mut offsets = vec![0u32; n as usize + 1];
        for r in records.iter().filter(|r| r.chosen == side) {
            offsets[r.chosen_bin() as usize + 1] += 1;
        }
        for i in 0..n as usize {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut times = vec![0u32; offsets[n as usize] as usize];
        // records are in time order, so each bin's slice comes out sorted
        for r in records.iter().filter(|r| r.chosen == side) {
            let slot = &mut fill[r.chosen_bin() as usize];
            times[*slot as usize] = r.time;
            *slot += 1;
        }
        History { offsets, times }
    }

    fn of(&self, bin: u32) -> &[u32] {
        let (a, b) = (self.offsets[bin as usize], self.offsets[bin as usize + 1]);
        &self.times[a as usize..b as usize]
    }
}

/// Full record of one allocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunTrace {
    config: AllocationConfig,
    records: Vec<BallRecord>,
    final_loads: [Vec<u32>; 2],
    history: [History; 2],
}

impl RunTrace {
    /// Rebuilds a trace from its records, replaying every placement and
    /// checking the recorded loads against the replay.
    pub fn from_records(config: AllocationConfig, records: Vec<BallRecord>) -> Result<Self> {
        config.validate()?;
        if records.len() != config.m as usize {
            return Err(Error::Domain(format!(
                "{} records for m = {}",
                records.len(),
                config.m
            )));
        }
        let n = config.n;
        let mut loads = [vec![0u32; n as usize], vec![0u32; n as usize]];
        for (j, r) in records.iter().enumerate() {
            if r.time as usize != j {
                return Err(Error::Domain(format!("record {j} has time {}", r.time)));
            }
            if r.bin0 >= n || r.bin1 >= n || r.chosen > 1 {
                return Err(Error::Domain(format!("record {j} out of range")));
            }
            let before = (loads[0][r.bin0 as usize], loads[1][r.bin1 as usize]);
            if before != r.load_before {
                return Err(Error::Domain(format!(
                    "record {j} load_before {:?} disagrees with replay {:?}",
                    r.load_before, before
                )));
            }
            loads[r.chosen as usize][r.chosen_bin() as usize] += 1;
        }
        let history = [
            History::build(n, &records, 0),
            History::build(n, &records, 1),
        ];
        Ok(RunTrace {
            config,
            records,
            final_loads: loads,
            history,
        })
    }

    pub fn config(&self) -> &AllocationConfig {
        &self.config
    }

    pub fn records(&self) -> &[BallRecord] {
        &self.records
    }

    pub fn n(&self) -> u32 {
        self.config.n
    }

    pub fn m(&self) -> u32 {
        self.records.len() as u32
    }

    pub fn final_loads(&self, side: usize) -> &[u32] {
        &self.final_loads[side]
    }

    pub fn final_load(&self, side: usize, bin: u32) -> u32 {
        self.final_loads[side][bin as usize]
    }

    /// Times of the balls placed in `(side, bin)`, in order.
    pub fn bin_history(&self, side: usize, bin: u32) -> &[u32] {
        self.history[side].of(bin)
    }

    /// Largest final load over both tables.
    pub fn max_load(&self) -> u32 {
        self.final_loads
            .iter()
            .flatten()
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// A bin attaining [`max_load`](Self::max_load); table 0 and lower bins first.
    pub fn max_load_bin(&self) -> (usize, u32) {
        let max = self.max_load();
        for side in 0..2 {
            if let Some(b) = self.final_loads[side].iter().position(|&l| l == max) {
                return (side, b as u32);
            }
        }
        unreachable!("tables are nonempty")
    }

    /// Number of balls in `(side, bin)` among the first `t` placements.
    pub fn load_at_time(&self, side: usize, bin: u32, t: u32) -> Result<u32> {
        if side > 1 || bin >= self.config.n {
            return Err(Error::Domain(format!("bin ({side}, {bin}) out of range")));
        }
        if t > self.m() {
            return Err(Error::Precondition(format!(
                "t = {t} exceeds m = {}",
                self.m()
            )));
        }
        Ok(self
            .bin_history(side, bin)
            .partition_point(|&time| time < t) as u32)
    }

    /// Every ball went to a least-loaded candidate, table 0 on ties.
    /// Not meaningful for [`Scheme::OneChoice`].
    pub fn obeys_greedy_rule(&self) -> bool {
        self.records.iter().all(|r| {
            let (l0, l1) = r.load_before;
            match r.chosen {
                0 => l0 <= l1,
                _ => l1 < l0,
            }
        })
    }
}

/// Places pre-hashed balls `(key, bin0, bin1)` in order.
pub fn place_pairs(
    config: AllocationConfig,
    pairs: impl IntoIterator<Item = (Key, u32, u32)>,
) -> Result<RunTrace> {
    config.validate()?;
    let n = config.n;
    let one_choice = config.scheme == Scheme::OneChoice;
    let mut loads = [vec![0u32; n as usize], vec![0u32; n as usize]];
    let mut records = Vec::with_capacity(config.m as usize);
    for (time, (key, bin0, bin1)) in pairs.into_iter().enumerate() {
        if bin0 >= n || bin1 >= n {
            return Err(Error::Domain(format!(
                "bin pair ({bin0}, {bin1}) outside [{n}]"
            )));
        }
        let load_before = (loads[0][bin0 as usize], loads[1][bin1 as usize]);
        let chosen = if one_choice || load_before.0 <= load_before.1 {
            0
        } else {
            1
        };
        let bin = if chosen == 0 { bin0 } else { bin1 };
        loads[chosen as usize][bin as usize] += 1;
        records.push(BallRecord {
            time: time as u32,
            key,
            bin0,
            bin1,
            chosen,
            load_before,
        });
    }
    if records.len() != config.m as usize {
        return Err(Error::Domain(format!(
            "{} balls for m = {}",
            records.len(),
            config.m
        )));
    }
    let history = [
        History::build(n, &records, 0),
        History::build(n, &records, 1),
    ];
    Ok(RunTrace {
        config,
        records,
        final_loads: loads,
        history,
    })
}

/// Runs the two-choice process on `keys` in order.
pub fn place_all(keys: &[Key], config: AllocationConfig) -> Result<RunTrace> {
    config.validate()?;
    if keys.len() != config.m as usize {
        return Err(Error::Domain(format!(
            "{} keys for m = {}",
            keys.len(),
            config.m
        )));
    }
    match config.tables() {
        Some([h0, h1]) => {
            for &k in keys {
                config.spec.check_key(k)?;
            }
            place_pairs(
                config,
                keys.iter()
                    .map(|&k| (k, h0.hash_unchecked(k) as u32, h1.hash_unchecked(k) as u32)),
            )
        }
        None => {
            let mask = config.n as u64 - 1;
            let mut r0 = seed::stream(seed::derive(config.seed, 0), 0);
            let mut r1 = seed::stream(seed::derive(config.seed, 1), 0);
            place_pairs(
                config,
                keys.iter().map(|&k| {
                    (
                        k,
                        (r0.next_u64() & mask) as u32,
                        (r1.next_u64() & mask) as u32,
                    )
                }),
            )
        }
    }
}

/// Largest final load of `trace`.
pub fn max_load(trace: &RunTrace) -> u32 {
    trace.max_load()
}
