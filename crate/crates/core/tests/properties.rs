use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tabchoice::adversary::{generate_adversarial_keys, run_adversary, AdversarialSpec};
use tabchoice::allocator::{default_keys, place_all, AllocationConfig, Scheme};
use tabchoice::dependency::{
    count_zero_sum_product, find_dependent_extensions, is_dependent_set, symmetric_difference,
    zero_sum_product_bound, CertificateKind,
};
use tabchoice::hashgraph::{
    build_graph, components, find_double_cycle, verify_structural_dichotomy,
};
use tabchoice::tabulation::{CharSpec, Key, TabulationTables};

#[test]
fn certificates_cancel_under_every_seed() {
    let spec = CharSpec::new(2, 3, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut pairs = 0;
    while pairs < 10_000 {
        let keys: Vec<Key> = (0..rng.random_range(3..10))
            .map(|_| Key(rng.random_range(0..64)))
            .collect();
        let pool: Vec<Key> = (0..64).map(Key).collect();
        let mut certs = Vec::new();
        if let Some(c) = is_dependent_set(&keys, &spec).unwrap() {
            assert_eq!(c.kind, CertificateKind::EvenSet);
            assert!(c.verify(&keys, None, &spec));
            certs.push((c, None));
        }
        for (y, c) in find_dependent_extensions(&keys, &pool, &spec).unwrap() {
            assert!(c.verify(&keys, Some(y), &spec));
            certs.push((c, Some(y)));
        }
        for (cert, y) in certs {
            for _ in 0..10 {
                let t = TabulationTables::build(spec, rng.random());
                let sum = cert
                    .subset
                    .iter()
                    .map(|&i| keys[i])
                    .chain(y)
                    .fold(0, |acc, k| acc ^ t.hash(k).unwrap());
                assert_eq!(sum, 0, "{cert:?} extension {y:?}");
                pairs += 1;
            }
        }
    }
}

fn brute_zero_sum(sets: &[Vec<Key>], spec: &CharSpec) -> u64 {
    let mut count = 0;
    let mut idx = vec![0usize; sets.len()];
    'outer: loop {
        let tuple: Vec<Key> = idx.iter().zip(sets).map(|(&i, s)| s[i]).collect();
        if symmetric_difference(&tuple, spec).unwrap().is_empty() {
            count += 1;
        }
        for p in (0..idx.len()).rev() {
            idx[p] += 1;
            if idx[p] < sets[p].len() {
                continue 'outer;
            }
            idx[p] = 0;
        }
        return count;
    }
}

#[test]
fn product_bound_over_singleton_and_full_mixes() {
    let spec = CharSpec::new(2, 2, 8).unwrap();
    let full: Vec<Key> = (0..16).map(Key).collect();
    let mut checked = 0;
    for pattern in 0u32..16 {
        // bit i set: coordinate i is a singleton, enumerated over all 16 keys
        let singles: Vec<usize> = (0..4).filter(|i| pattern >> i & 1 == 1).collect();
        for choice in 0..16u32.pow(singles.len() as u32) {
            let mut sets = vec![full.clone(); 4];
            let mut rest = choice;
            for &i in &singles {
                sets[i] = vec![Key((rest % 16) as u64)];
                rest /= 16;
            }
            let count = count_zero_sum_product(&sets, &spec).unwrap();
            let sizes: Vec<usize> = sets.iter().map(Vec::len).collect();
            assert!(
                count as f64 <= zero_sum_product_bound(spec.c, &sizes),
                "{sets:?}: {count}"
            );
            if choice % 997 == 0 {
                assert_eq!(count, brute_zero_sum(&sets, &spec));
            }
            checked += 1;
        }
    }
    assert_eq!(checked, 17u32.pow(4));
}

proptest! {
    #[test]
    fn symmetric_difference_of_concatenation(
        a in proptest::collection::vec(0u64..256, 0..12),
        b in proptest::collection::vec(0u64..256, 0..12),
    ) {
        let spec = CharSpec::new(2, 4, 8).unwrap();
        let a: Vec<Key> = a.into_iter().map(Key).collect();
        let b: Vec<Key> = b.into_iter().map(Key).collect();
        let joined: Vec<Key> = a.iter().chain(&b).copied().collect();
        let lhs = symmetric_difference(&joined, &spec).unwrap();
        let rhs = symmetric_difference(&a, &spec).unwrap()
            .symmetric_difference(&symmetric_difference(&b, &spec).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn runs_satisfy_structural_lemmas(lg_n in 3u32..9, ratio in 1u32..4, seed in any::<u64>(), fully in any::<bool>()) {
        let n = 1 << lg_n;
        let m = n * ratio / 2;
        let scheme = if fully { Scheme::FullyRandom } else { Scheme::Tabulation };
        let trace = place_all(&default_keys(m), AllocationConfig::new(n, m, scheme, 2, 8, seed).unwrap()).unwrap();
        let report = verify_structural_dichotomy(&trace);
        prop_assert!(report.passed(), "{:?}", report);
        let total: u32 = (0..2).flat_map(|s| trace.final_loads(s).to_vec()).sum();
        prop_assert_eq!(total, m);
    }
}

#[test]
fn tabulation_runs_pass_dichotomy() {
    let keys = default_keys(1 << 12);
    for seed in 0..100 {
        let cfg = AllocationConfig::new(1 << 12, 1 << 12, Scheme::Tabulation, 2, 8, seed).unwrap();
        let report = verify_structural_dichotomy(&place_all(&keys, cfg).unwrap());
        assert!(report.passed(), "seed {seed}: {:?}", report.violations());
    }
}

#[test]
fn rigged_runs_pass_dichotomy() {
    let aspec = AdversarialSpec::new(1 << 12, 2, CharSpec::new(2, 12, 12).unwrap()).unwrap();
    for seed in 0..20 {
        let report =
            verify_structural_dichotomy(&run_adversary(&aspec, 1 << 12, seed, true).unwrap());
        assert!(report.passed(), "seed {seed}: {:?}", report.violations());
    }
}

#[test]
fn double_cycle_witness_iff_excess_on_runs() {
    let keys = default_keys(700);
    for seed in 0..20 {
        let cfg = AllocationConfig::new(1 << 10, 700, Scheme::Tabulation, 2, 8, seed).unwrap();
        let graph = build_graph(&place_all(&keys, cfg).unwrap());
        for comp in components(&graph) {
            let w = find_double_cycle(&graph, &comp);
            assert_eq!(w.is_some(), comp.excess() >= 1);
            if let Some(w) = w {
                assert!(w.is_valid(&graph));
            }
        }
    }
}

#[test]
fn rigging_multiplies_axis_pairs() {
    for (c, k, q, n) in [(2u32, 2u32, 8u32, 256u64), (2, 3, 8, 192), (3, 2, 6, 256)] {
        let spec = CharSpec::new(c, q, 8).unwrap();
        let aspec = AdversarialSpec::new(n, k, spec).unwrap();
        let keys = generate_adversarial_keys(&aspec).unwrap();
        let copies = aspec.copies().unwrap() as usize;
        let cfg = AllocationConfig::new(256, keys.len() as u32, Scheme::RiggedTabulation, c, q, 5)
            .unwrap()
            .with_rig_k(k);
        let [h0, h1] = cfg.tables().unwrap();
        let pair = |key: Key| (h0.hash(key).unwrap(), h1.hash(key).unwrap());
        let mut all: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        for &key in &keys {
            *all.entry(pair(key)).or_insert(0) += 1;
        }
        let mut axis: BTreeMap<(u64, u64), usize> = BTreeMap::new();
        for x0 in 0..aspec.base_len() {
            *axis.entry(pair(Key(x0))).or_insert(0) += copies;
        }
        assert_eq!(all, axis, "c={c} k={k}");
        // keys differing only in positions >= 1 collide
        for block in keys.chunks(copies) {
            assert!(block.iter().all(|&key| pair(key) == pair(block[0])));
        }
    }
}

#[test]
fn unrigged_adversary_is_plain_tabulation() {
    let spec = CharSpec::new(2, 10, 10).unwrap();
    let aspec = AdversarialSpec::new(1024, 2, spec).unwrap();
    let keys = generate_adversarial_keys(&aspec).unwrap();
    for seed in 0..10 {
        let adv = run_adversary(&aspec, 1024, seed, false).unwrap();
        let plain = place_all(
            &keys,
            AllocationConfig::new(1024, 1024, Scheme::Tabulation, 2, 10, seed).unwrap(),
        )
        .unwrap();
        assert_eq!(adv.records(), plain.records());
    }
}

#[test]
fn traces_are_deterministic() {
    let keys = default_keys(5000);
    for scheme in [
        Scheme::Tabulation,
        Scheme::FullyRandom,
        Scheme::OneChoice,
        Scheme::RiggedTabulation,
    ] {
        let cfg = AllocationConfig::new(4096, 5000, scheme, 2, 8, 77).unwrap();
        let a = place_all(&keys, cfg).unwrap();
        let b = place_all(&keys, cfg).unwrap();
        assert_eq!(a.records(), b.records());
        for t in (0..=5000).step_by(500) {
            let total: u32 = (0..2)
                .flat_map(|s| (0..4096).map(move |bin| (s, bin)))
                .map(|(s, bin)| a.load_at_time(s, bin, t).unwrap())
                .sum();
            assert_eq!(total, t);
        }
    }
}
