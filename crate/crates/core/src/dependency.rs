//! Dependent keys under simple tabulation.
//!
//! A set of keys whose position characters all occur an even number of times
//! has hash values XOR-ing to zero under every choice of tables. This module
//! finds such sets exactly (linear algebra over GF(2) on position-character
//! indicator vectors) and counts zero-sum and dependent tuples by exhaustive
//! enumeration for small key sets.

use std::collections::{BTreeSet, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tabulation::{CharSpec, Key, PositionCharacter};

/// Hard cap on the number of base keys for certificate searches.
pub const MAX_BASE_KEYS: usize = 24;
/// Hard cap on the number of tuples a counting oracle may enumerate.
pub const MAX_ENUMERATION: u128 = 1_000_000_000;

/// A set of position characters with multiplicities reduced mod 2.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PositionSet {
    members: BTreeSet<PositionCharacter>,
}

impl PositionSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn toggle(&mut self, pc: PositionCharacter) {
        if !self.members.remove(&pc) {
            self.members.insert(pc);
        }
    }

    /// Toggles every position character of `key`.
    pub fn toggle_key(&mut self, key: Key, spec: &CharSpec) {
        for (i, ch) in spec.chars_unchecked(key).enumerate() {
            self.toggle(PositionCharacter::new(i as u32, ch));
        }
    }

    /// `self Δ other`.
    pub fn symmetric_difference(&self, other: &PositionSet) -> PositionSet {
        PositionSet {
            members: self
                .members
                .symmetric_difference(&other.members)
                .copied()
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, pc: &PositionCharacter) -> bool {
        self.members.contains(pc)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PositionCharacter> {
        self.members.iter()
    }
}

impl FromIterator<PositionCharacter> for PositionSet {
    fn from_iter<I: IntoIterator<Item = PositionCharacter>>(iter: I) -> Self {
        let mut s = PositionSet::new();
        for pc in iter {
            s.toggle(pc);
        }
        s
    }
}

impl<'a> IntoIterator for &'a PositionSet {
    type Item = &'a PositionCharacter;
    type IntoIter = std::collections::btree_set::Iter<'a, PositionCharacter>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// The referenced keys have empty symmetric difference.
    EvenSet,
    /// The referenced keys have symmetric difference equal to an extension key.
    Extension,
}

/// A subset `I` of key indices witnessing a hash-value linear relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyCertificate {
    /// Zero-based indices into the key list the certificate was issued for.
    pub subset: Vec<usize>,
    pub kind: CertificateKind,
}

impl DependencyCertificate {
    /// Checks the certificate against `keys` (and the extension key, if any).
    pub fn verify(&self, keys: &[Key], extension: Option<Key>, spec: &CharSpec) -> bool {
        if self.subset.is_empty() || self.subset.iter().any(|&i| i >= keys.len()) {
            return false;
        }
        let mut sd = PositionSet::new();
        for &i in &self.subset {
            sd.toggle_key(keys[i], spec);
        }
        match (self.kind, extension) {
            (CertificateKind::EvenSet, None) => sd.is_empty(),
            (CertificateKind::Extension, Some(y)) => {
                sd.toggle_key(y, spec);
                sd.is_empty()
            }
            _ => false,
        }
    }
}

fn check_keys(keys: &[Key], spec: &CharSpec) -> Result<()> {
    keys.iter().try_for_each(|&k| spec.check_key(k))
}

/// Position characters occurring an odd number of times across `keys`.
pub fn symmetric_difference(keys: &[Key], spec: &CharSpec) -> Result<PositionSet> {
    check_keys(keys, spec)?;
    let mut sd = PositionSet::new();
    for &k in keys {
        sd.toggle_key(k, spec);
    }
    Ok(sd)
}

/// Dense bit-vector encoding of keys over the position characters they use.
struct Indicator {
    index: HashMap<PositionCharacter, usize>,
    words: usize,
}

impl Indicator {
    fn new<'a>(keys: impl IntoIterator<Item = &'a Key>, spec: &CharSpec) -> Self {
        let mut index = HashMap::new();
        for &k in keys {
            for (i, ch) in spec.chars_unchecked(k).enumerate() {
                let next = index.len();
                index
                    .entry(PositionCharacter::new(i as u32, ch))
                    .or_insert(next);
            }
        }
        let words = index.len().div_ceil(64).max(1);
        Indicator { index, words }
    }

    /// `None` when the key uses a position character outside the index.
    fn encode(&self, key: Key, spec: &CharSpec) -> Option<Vec<u64>> {
        let mut v = vec![0u64; self.words];
        for (i, ch) in spec.chars_unchecked(key).enumerate() {
            let bit = *self.index.get(&PositionCharacter::new(i as u32, ch))?;
            v[bit / 64] ^= 1 << (bit % 64);
        }
        Some(v)
    }
}

fn xor_into(acc: &mut [u64], v: &[u64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a ^= b;
    }
}

fn highest_bit(v: &[u64]) -> Option<usize> {
    v.iter()
        .enumerate()
        .rev()
        .find(|(_, &w)| w != 0)
        .map(|(i, &w)| i * 64 + 63 - w.leading_zeros() as usize)
}

/// Row-reduced basis of key indicator vectors over GF(2), tracking for each
/// basis row which input keys it combines.
struct XorBasis {
    rows: HashMap<usize, (Vec<u64>, u32)>,
}

impl XorBasis {
    fn new() -> Self {
        XorBasis {
            rows: HashMap::new(),
        }
    }

    /// Reduces `v` against the basis. Returns the residue and the combination
    /// of input keys XOR-ed in along the way.
    fn reduce(&self, mut v: Vec<u64>, mut combo: u32) -> (Vec<u64>, u32) {
        while let Some(p) = highest_bit(&v) {
            match self.rows.get(&p) {
                Some((row, c)) => {
                    xor_into(&mut v, row);
                    combo ^= c;
                }
                None => break,
            }
        }
        (v, combo)
    }

    /// Inserts key `idx`; returns the dependent combination if it reduces to zero.
    fn insert(&mut self, v: Vec<u64>, idx: usize) -> Option<u32> {
        let (v, combo) = self.reduce(v, 1 << idx);
        match highest_bit(&v) {
            Some(p) => {
                self.rows.insert(p, (v, combo));
                None
            }
            None => Some(combo),
        }
    }
}

fn mask_to_subset(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

fn check_capacity(len: usize) -> Result<()> {
    if len > MAX_BASE_KEYS {
        Err(Error::Capacity(format!(
            "{len} keys exceeds the exhaustive-search cap of {MAX_BASE_KEYS}"
        )))
    } else {
        Ok(())
    }
}

/// Finds a nonempty subset of `keys` whose position characters all appear an
/// even number of times, if one exists.
///
/// A repeated key is reported as the pair of its first two occurrences.
pub fn is_dependent_set(keys: &[Key], spec: &CharSpec) -> Result<Option<DependencyCertificate>> {
    check_capacity(keys.len())?;
    check_keys(keys, spec)?;
    let mut first_seen = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        if let Some(&j) = first_seen.get(k) {
            return Ok(Some(DependencyCertificate {
                subset: vec![j, i],
                kind: CertificateKind::EvenSet,
            }));
        }
        first_seen.insert(*k, i);
    }
    let ind = Indicator::new(keys, spec);
    let mut basis = XorBasis::new();
    for (i, &k) in keys.iter().enumerate() {
        let v = ind.encode(k, spec).expect("indexed from the same keys");
        if let Some(combo) = basis.insert(v, i) {
            return Ok(Some(DependencyCertificate {
                subset: mask_to_subset(combo),
                kind: CertificateKind::EvenSet,
            }));
        }
    }
    Ok(None)
}

/// Keys `y` of `pool` (not in `base`) equal, as position sets, to the
/// symmetric difference of some subset of `base`. Each distinct `y` is
/// reported once, in pool order.
pub fn find_dependent_extensions(
    base: &[Key],
    pool: &[Key],
    spec: &CharSpec,
) -> Result<Vec<(Key, DependencyCertificate)>> {
    check_capacity(base.len())?;
    check_keys(base, spec)?;
    check_keys(pool, spec)?;
    let ind = Indicator::new(base, spec);
    let mut basis = XorBasis::new();
    for (i, &k) in base.iter().enumerate() {
        basis.insert(ind.encode(k, spec).expect("indexed from base"), i);
    }
    let in_base: BTreeSet<Key> = base.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &y in pool {
        if in_base.contains(&y) || !seen.insert(y) {
            continue;
        }
        let Some(v) = ind.encode(y, spec) else {
            continue;
        };
        let (residue, combo) = basis.reduce(v, 0);
        if highest_bit(&residue).is_none() {
            out.push((
                y,
                DependencyCertificate {
                    subset: mask_to_subset(combo),
                    kind: CertificateKind::Extension,
                },
            ));
        }
    }
    Ok(out)
}

fn guard(total: Option<u128>, what: &str) -> Result<()> {
    match total {
        Some(n) if n <= MAX_ENUMERATION => Ok(()),
        _ => Err(Error::Capacity(format!(
            "{what} would enumerate more than {MAX_ENUMERATION} tuples"
        ))),
    }
}

fn checked_pow(base: usize, exp: u32) -> Option<u128> {
    (base as u128).checked_pow(exp)
}

/// Number of ways each position-character signature arises as the symmetric
/// difference of a tuple drawn from `sets` (one coordinate per set).
fn signature_counts(sets: &[&[Vec<u64>]], words: usize) -> HashMap<Vec<u64>, u64> {
    let mut counts: HashMap<Vec<u64>, u64> = HashMap::new();
    counts.insert(vec![0; words], 1);
    for set in sets {
        let mut next: HashMap<Vec<u64>, u64> = HashMap::with_capacity(counts.len() * set.len());
        for (sig, &n) in &counts {
            for v in set.iter() {
                let mut s = sig.clone();
                xor_into(&mut s, v);
                *next.entry(s).or_insert(0) += n;
            }
        }
        counts = next;
    }
    counts
}

/// Exact number of `2t`-tuples `(x_1, …, x_2t) ∈ A_1 × ⋯ × A_2t` whose
/// position characters cancel, by meet-in-the-middle over the two halves.
pub fn count_zero_sum_product(sets: &[Vec<Key>], spec: &CharSpec) -> Result<u64> {
    if sets.is_empty() || !sets.len().is_multiple_of(2) {
        return Err(Error::Domain(format!(
            "need an even, positive number of coordinate sets, got {}",
            sets.len()
        )));
    }
    let total = sets
        .iter()
        .try_fold(1u128, |acc, s| acc.checked_mul(s.len() as u128));
    guard(total, "zero-sum product count")?;
    for s in sets {
        check_keys(s, spec)?;
    }
    let ind = Indicator::new(sets.iter().flatten(), spec);
    let encoded: Vec<Vec<Vec<u64>>> = sets
        .iter()
        .map(|s| {
            s.iter()
                .map(|&k| ind.encode(k, spec).expect("indexed"))
                .collect()
        })
        .collect();
    let refs: Vec<&[Vec<u64>]> = encoded.iter().map(|v| v.as_slice()).collect();
    let t = sets.len() / 2;
    let left = signature_counts(&refs[..t], ind.words);
    let right = signature_counts(&refs[t..], ind.words);
    Ok(left
        .iter()
        .map(|(sig, &a)| a * right.get(sig).copied().unwrap_or(0))
        .sum())
}

/// Exact number of `2t`-tuples over `keys` whose position characters cancel.
pub fn count_zero_sum_tuples(keys: &[Key], t: u32, spec: &CharSpec) -> Result<u64> {
    if t == 0 {
        return Err(Error::Domain("t must be positive".into()));
    }
    guard(checked_pow(keys.len(), 2 * t), "zero-sum count")?;
    let sets = vec![keys.to_vec(); 2 * t as usize];
    count_zero_sum_product(&sets, spec)
}

/// Exact number of `s`-tuples over `keys` admitting a dependent extension
/// `y ∈ keys` distinct from every tuple entry.
pub fn count_dependent_tuples(keys: &[Key], s: u32, spec: &CharSpec) -> Result<u64> {
    if s < 3 {
        return Err(Error::Domain(format!(
            "s = {s}; dependent tuples need s >= 3"
        )));
    }
    check_capacity(s as usize)?;
    guard(checked_pow(keys.len(), s), "dependent-tuple count")?;
    check_keys(keys, spec)?;
    let n = keys.len();
    let s = s as usize;
    // Split on the first coordinate; each chunk enumerates the rest in odometer order.
    (0..n)
        .into_par_iter()
        .map(|first| -> Result<u64> {
            let mut idx = vec![0usize; s];
            idx[0] = first;
            let mut tuple = vec![keys[first]; s];
            let mut count = 0;
            loop {
                for (slot, &i) in tuple.iter_mut().zip(&idx).skip(1) {
                    *slot = keys[i];
                }
                if !find_dependent_extensions(&tuple, keys, spec)?.is_empty() {
                    count += 1;
                }
                let mut pos = s - 1;
                loop {
                    if pos == 0 {
                        return Ok(count);
                    }
                    idx[pos] += 1;
                    if idx[pos] < n {
                        break;
                    }
                    idx[pos] = 0;
                    pos -= 1;
                }
            }
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// `(2t − 1)!!`.
pub fn double_factorial_odd(t: u32) -> u128 {
    (1..=t as u128).map(|i| 2 * i - 1).product()
}

/// `((2t − 1)!!)^c · n^t`.
pub fn zero_sum_bound(c: u32, t: u32, n: usize) -> f64 {
    (double_factorial_odd(t) as f64).powi(c as i32) * (n as f64).powi(t as i32)
}

/// `((2t − 1)!!)^c · Π sqrt(|A_i|)` for the `2t` coordinate-set sizes.
pub fn zero_sum_product_bound(c: u32, sizes: &[usize]) -> f64 {
    let t = (sizes.len() / 2) as u32;
    (double_factorial_odd(t) as f64).powi(c as i32)
        * sizes.iter().map(|&a| (a as f64).sqrt()).product::<f64>()
}

/// `s^4 · (3^c / 6) · n^(s−1)`.
pub fn dependent_tuple_bound(c: u32, s: u32, n: usize) -> f64 {
    (s as f64).powi(4) * 3f64.powi(c as i32) / 6.0 * (n as f64).powi(s as i32 - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec22() -> CharSpec {
        CharSpec::new(2, 2, 4).unwrap()
    }

    fn k(s: &CharSpec, chars: &[u32]) -> Key {
        s.assemble(chars).unwrap()
    }

    fn quad(s: &CharSpec) -> Vec<Key> {
        vec![k(s, &[0, 1]), k(s, &[0, 3]), k(s, &[2, 1]), k(s, &[2, 3])]
    }

    /// Subset search by enumeration, independent of the GF(2) route.
    fn brute_dependent(keys: &[Key], s: &CharSpec) -> bool {
        (1u32..1 << keys.len()).any(|mask| {
            let sub: Vec<Key> = mask_to_subset(mask).into_iter().map(|i| keys[i]).collect();
            symmetric_difference(&sub, s).unwrap().is_empty()
        })
    }

    #[test]
    fn symmetric_difference_examples() {
        let s = spec22();
        let x = k(&s, &[1, 2]);
        let single = symmetric_difference(&[x], &s).unwrap();
        assert_eq!(single.len(), 2);
        assert!(single.contains(&PositionCharacter::new(0, 1)));
        assert!(single.contains(&PositionCharacter::new(1, 2)));
        assert!(symmetric_difference(&[x, x], &s).unwrap().is_empty());
        assert!(symmetric_difference(&quad(&s), &s).unwrap().is_empty());
        assert!(symmetric_difference(&[Key(16)], &s).is_err());
    }

    #[test]
    fn quadruple_is_dependent() {
        let s = spec22();
        let cert = is_dependent_set(&quad(&s), &s).unwrap().unwrap();
        assert_eq!(cert.subset, vec![0, 1, 2, 3]);
        assert_eq!(cert.kind, CertificateKind::EvenSet);
        assert!(cert.verify(&quad(&s), None, &s));
    }

    #[test]
    fn repeated_key_gives_pair() {
        let s = spec22();
        let keys = vec![
            k(&s, &[0, 0]),
            k(&s, &[1, 2]),
            k(&s, &[3, 3]),
            k(&s, &[1, 2]),
        ];
        let cert = is_dependent_set(&keys, &s).unwrap().unwrap();
        assert_eq!(cert.subset, vec![1, 3]);
    }

    #[test]
    fn three_distinct_keys_are_independent() {
        let s = spec22();
        for a in 0..16 {
            for b in a + 1..16 {
                for c in b + 1..16 {
                    let keys = [Key(a), Key(b), Key(c)];
                    assert!(is_dependent_set(&keys, &s).unwrap().is_none());
                }
            }
        }
    }

    #[test]
    fn capacity_cap() {
        let s = CharSpec::new(2, 8, 8).unwrap();
        let keys: Vec<Key> = (0..25).map(Key).collect();
        assert!(matches!(
            is_dependent_set(&keys, &s),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            find_dependent_extensions(&keys, &[], &s),
            Err(Error::Capacity(_))
        ));
        assert!(is_dependent_set(&keys[..24], &s).is_ok());
    }

    #[test]
    fn gf2_route_matches_subset_enumeration() {
        use rand::{Rng, SeedableRng};
        let s = CharSpec::new(2, 2, 4).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let len = rng.random_range(1..=8);
            let keys: Vec<Key> = (0..len).map(|_| Key(rng.random_range(0..16))).collect();
            let cert = is_dependent_set(&keys, &s).unwrap();
            assert_eq!(cert.is_some(), brute_dependent(&keys, &s), "{keys:?}");
            if let Some(c) = cert {
                assert!(c.verify(&keys, None, &s));
            }
        }
    }

    #[test]
    fn extension_completes_quadruple() {
        let s = spec22();
        let q = quad(&s);
        let ext = find_dependent_extensions(&q[..3], &[q[3], Key(5)], &s).unwrap();
        assert_eq!(ext.len(), 1);
        assert_eq!(ext[0].0, q[3]);
        assert_eq!(ext[0].1.subset, vec![0, 1, 2]);
        assert!(ext[0].1.verify(&q[..3], Some(q[3]), &s));
    }

    #[test]
    fn two_key_base_has_no_extension() {
        let s = spec22();
        let pool: Vec<Key> = (0..16).map(Key).collect();
        for a in 0..16 {
            for b in 0..16 {
                let ext = find_dependent_extensions(&[Key(a), Key(b)], &pool, &s).unwrap();
                assert!(ext.is_empty(), "{a} {b}: {ext:?}");
            }
        }
    }

    #[test]
    fn unrelated_extension_rejected() {
        let s = CharSpec::new(2, 4, 4).unwrap();
        let mut base: Vec<Key> = vec![
            k(&s, &[0, 1]),
            k(&s, &[0, 3]),
            k(&s, &[2, 1]),
            k(&s, &[2, 3]),
        ];
        let e = k(&s, &[9, 9]);
        base.push(e);
        assert!(find_dependent_extensions(&base, &[e], &s)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn zero_sum_t1_is_n() {
        let s = spec22();
        let keys: Vec<Key> = (0..16).map(Key).collect();
        assert_eq!(count_zero_sum_tuples(&keys, 1, &s).unwrap(), 16);
    }

    #[test]
    fn zero_sum_disjoint_keys() {
        // keys sharing no character in any position: only pairings of equal keys cancel
        let s = CharSpec::new(2, 4, 4).unwrap();
        let keys: Vec<Key> = (0..6).map(|i| k(&s, &[i, i + 6])).collect();
        let n = keys.len() as u64;
        let brute = {
            let mut c = 0;
            for a in &keys {
                for b in &keys {
                    for cc in &keys {
                        for d in &keys {
                            if symmetric_difference(&[*a, *b, *cc, *d], &s)
                                .unwrap()
                                .is_empty()
                            {
                                c += 1;
                            }
                        }
                    }
                }
            }
            c
        };
        assert_eq!(brute, 3 * n * n - 2 * n);
        assert_eq!(count_zero_sum_tuples(&keys, 2, &s).unwrap(), brute);
    }

    #[test]
    fn zero_sum_full_universe_under_bound() {
        let s = spec22();
        let keys: Vec<Key> = (0..16).map(Key).collect();
        let count = count_zero_sum_tuples(&keys, 2, &s).unwrap();
        assert!(count as f64 <= zero_sum_bound(2, 2, 16));
        assert_eq!(zero_sum_bound(2, 2, 16), 2304.0);
    }

    #[test]
    fn zero_sum_guard() {
        let s = CharSpec::new(2, 8, 8).unwrap();
        let keys: Vec<Key> = (0..200).map(Key).collect();
        assert!(matches!(
            count_zero_sum_tuples(&keys, 3, &s),
            Err(Error::Capacity(_))
        ));
        assert!(count_zero_sum_tuples(&keys, 0, &s).is_err());
    }

    #[test]
    fn dependent_tuples_disjoint_is_zero() {
        let s = CharSpec::new(2, 4, 4).unwrap();
        let keys: Vec<Key> = (0..8).map(|i| k(&s, &[i, i + 8])).collect();
        assert_eq!(count_dependent_tuples(&keys, 3, &s).unwrap(), 0);
        assert!(count_dependent_tuples(&keys, 2, &s).is_err());
    }

    #[test]
    fn dependent_tuples_full_universe_matches_brute_force() {
        let s = spec22();
        let keys: Vec<Key> = (0..16).map(Key).collect();
        let count = count_dependent_tuples(&keys, 3, &s).unwrap();
        // brute force: tuples (a, b, c) with some y outside the tuple equal to
        // the symmetric difference of a subset of the tuple
        let mut brute = 0u64;
        for &a in &keys {
            for &b in &keys {
                for &c in &keys {
                    let t = [a, b, c];
                    let hit = keys.iter().filter(|y| !t.contains(y)).any(|&y| {
                        (1u32..8).any(|mask| {
                            let mut sub: Vec<Key> =
                                mask_to_subset(mask).into_iter().map(|i| t[i]).collect();
                            sub.push(y);
                            symmetric_difference(&sub, &s).unwrap().is_empty()
                        })
                    });
                    brute += hit as u64;
                }
            }
        }
        assert_eq!(count, brute);
        assert!(count as f64 <= dependent_tuple_bound(2, 3, 16));
    }

    #[test]
    fn bounds() {
        assert_eq!(double_factorial_odd(1), 1);
        assert_eq!(double_factorial_odd(3), 15);
        assert_eq!(dependent_tuple_bound(2, 3, 16), 31104.0);
        assert_eq!(zero_sum_product_bound(2, &[4, 4, 1, 1]), 9.0 * 4.0);
    }

    #[test]
    fn product_count_matches_uniform_count() {
        let s = spec22();
        let keys: Vec<Key> = (0..16).map(Key).collect();
        let sets = vec![keys.clone(); 4];
        assert_eq!(
            count_zero_sum_product(&sets, &s).unwrap(),
            count_zero_sum_tuples(&keys, 2, &s).unwrap()
        );
        assert!(count_zero_sum_product(&sets[..3], &s).is_err());
    }
}
