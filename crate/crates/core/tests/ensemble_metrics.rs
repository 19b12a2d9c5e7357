mod common;

use std::collections::BTreeMap;

use common::{generators, library, rng, st};
use proptest::prelude::*;
use rand::Rng;
use rwcat_core::ensemble::{
    check_holder, divisors, expected_success_exact, k_subsets, normalized_elementary, prior_expected_success, run_ensemble, EnsembleConfig,
    Prior, SubsetLaw, EXACT_TOLERANCE,
};
use rwcat_core::passk::{pass_at_k, pass_ens_at_k};
use rwcat_core::prover::{PolicyProver, Prover, SyntheticProver, DEFAULT_BUDGET};
use rwcat_core::sampler::ExhaustiveSampler;

fn choose(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Miss probability averaged over every k-subset, by brute force.
fn brute_uniform(f: &[f64], k: usize) -> f64 {
    let sets = k_subsets(f.len(), k);
    sets.iter().map(|s| s.iter().map(|&i| f[i]).product::<f64>()).sum::<f64>() / sets.len() as f64
}

fn normalized(atoms: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    atoms.into_iter().map(|(v, w)| (v, w / total)).collect()
}

fn prior_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.0f64..=1.0, 0.05f64..1.0), 1..5).prop_map(normalized)
}

/// Atoms on a 0.05 grid inside [0.05, 0.95], at least two distinct.
fn spread_prior() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::btree_set(1u32..=19, 2..5)
        .prop_flat_map(|grid| {
            let n = grid.len();
            (Just(grid), prop::collection::vec(0.1f64..1.0, n))
        })
        .prop_map(|(grid, ws)| normalized(grid.into_iter().map(|g| g as f64 / 20.0).zip(ws).collect()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn elementary_recurrence_matches_enumeration(f in prop::collection::vec(0.0f64..1.0, 1..8)) {
        let m = normalized_elementary(&f, f.len());
        for k in 0..=f.len() {
            prop_assert!((m[k] - brute_uniform(&f, k)).abs() <= 1e-12, "k={}", k);
        }
    }

    #[test]
    fn exact_success_matches_explicit_laws(s in prop::collection::vec(0.0f64..1.0, 1..7), k in 1usize..7, extra in 0usize..9, a in 0usize..7) {
        let n_budget = k + extra;
        let q = (n_budget / k) as i32;
        let f: Vec<f64> = s.iter().map(|x| (1.0 - x).powi(q)).collect();
        let kk = k.min(s.len());
        let uni = expected_success_exact(&s, &SubsetLaw::Uniform, k, n_budget).unwrap();
        prop_assert!((uni - (1.0 - brute_uniform(&f, kk))).abs() <= 1e-12);
        let a = a % s.len();
        let rest: Vec<usize> = (0..s.len()).filter(|&i| i != a).collect();
        let sets = k_subsets(rest.len(), (k - 1).min(rest.len()));
        let w = 1.0 / sets.len() as f64;
        let explicit: Vec<(Vec<usize>, f64)> =
            sets.iter().map(|set| (std::iter::once(a).chain(set.iter().map(|&j| rest[j])).collect(), w)).collect();
        let anc = expected_success_exact(&s, &SubsetLaw::Anchored(a), k, n_budget).unwrap();
        let exp = expected_success_exact(&s, &SubsetLaw::Explicit(explicit), k, n_budget).unwrap();
        prop_assert!((anc - exp).abs() <= 1e-12);
        if kk == s.len() {
            prop_assert!((uni - anc).abs() <= 1e-12);
        }
    }

    #[test]
    fn divisor_chains_are_monotone(atoms in prior_strategy(), n in 1usize..=64) {
        let prior = Prior::new(atoms).unwrap();
        let chain: Vec<f64> = divisors(n).iter().map(|&k| prior_expected_success(&prior, k, n).unwrap()).collect();
        for w in chain.windows(2) {
            prop_assert!(w[1] >= w[0] - EXACT_TOLERANCE);
        }
        prop_assert!(chain.iter().all(|&v| v >= chain[0] - EXACT_TOLERANCE));
    }

    #[test]
    fn non_constant_priors_are_strict(atoms in spread_prior(), n in 2usize..=64) {
        let prior = Prior::new(atoms).unwrap();
        prop_assert!(!prior.is_constant());
        let ds = divisors(n);
        for w in ds.windows(2) {
            let rep = check_holder(&prior, n, w[0], w[1]).unwrap();
            prop_assert!(rep.pass && rep.strict_expected);
            prop_assert!(rep.strict, "{:?}", rep);
        }
    }

    #[test]
    fn pass_at_k_matches_combinatorics(n in 1u64..20, c in 0u64..20, k in 1u64..20) {
        let (c, k) = (c.min(n), k.min(n));
        let want = 1.0 - choose(n - c, k) / choose(n, k);
        prop_assert!((pass_at_k(n, c, k).unwrap() - want).abs() <= 1e-12);
        prop_assert_eq!(pass_ens_at_k(&[(n, c)], k).unwrap(), pass_at_k(n, c, k).unwrap());
        prop_assert_eq!(pass_ens_at_k(&[(n, c), (n, n)], 2 * k).unwrap(), 1.0);
    }
}

#[test]
fn worked_values() {
    assert_eq!(pass_at_k(4, 2, 2).unwrap(), 1.0 - 1.0 / 6.0);
    assert_eq!(pass_ens_at_k(&[(4, 2), (4, 2)], 4).unwrap(), 1.0 - (1.0f64 / 6.0).powi(2));
    let half = expected_success_exact(&[0.5, 0.5], &SubsetLaw::Uniform, 2, 4).unwrap();
    assert_eq!(half, 1.0 - 0.5f64.powi(2) * 0.5f64.powi(2));
    let coin = Prior::new(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
    assert_eq!(prior_expected_success(&coin, 1, 4).unwrap(), 0.5);
    assert_eq!(prior_expected_success(&coin, 4, 4).unwrap(), 1.0 - 0.5f64.powi(4));
    let p = Prior::point(0.3).unwrap();
    for k in divisors(12) {
        let v = prior_expected_success(&p, k, 12).unwrap();
        assert!((v - (1.0 - 0.7f64.powi(12))).abs() <= EXACT_TOLERANCE);
    }
    let r = check_holder(&Prior::uniform(&[0.1, 0.9]).unwrap(), 12, 2, 6).unwrap();
    assert!(r.strict && r.lhs < r.rhs);
    assert!(check_holder(&coin, 12, 3, 3).unwrap().lhs == check_holder(&coin, 12, 3, 3).unwrap().rhs);
}

#[test]
fn subsampling_frequency_matches_pass_at_k() {
    let mut r = rng(77);
    let trials = 100_000;
    for (n, c, k) in [(4usize, 2usize, 2usize), (12, 3, 5), (30, 1, 7)] {
        let mut hits = 0;
        let mut idx: Vec<usize> = (0..n).collect();
        for _ in 0..trials {
            let mut hit = false;
            for i in 0..k {
                let j = r.random_range(i..n);
                idx.swap(i, j);
                hit |= idx[i] < c;
            }
            hits += hit as u64;
        }
        let p = pass_at_k(n as u64, c as u64, k as u64).unwrap();
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((hits as f64 / trials as f64 - p).abs() <= 3.0 * sigma, "({n},{c},{k})");
    }
}

#[test]
fn iid_classes_average_to_the_prior_formula() {
    let prior = [(0.1, 0.3), (0.5, 0.2), (0.8, 0.5)];
    let p = Prior::new(prior.to_vec()).unwrap();
    let (k, n, size, reps) = (3, 9, 6, 20_000);
    let mut r = rng(3);
    let mut vals = Vec::with_capacity(reps);
    for _ in 0..reps {
        let class: Vec<f64> = (0..size)
            .map(|_| {
                let u: f64 = r.random();
                if u < 0.3 { 0.1 } else if u < 0.5 { 0.5 } else { 0.8 }
            })
            .collect();
        vals.push(expected_success_exact(&class, &SubsetLaw::Uniform, k, n).unwrap());
    }
    let mean = vals.iter().sum::<f64>() / reps as f64;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let want = prior_expected_success(&p, k, n).unwrap();
    assert!((mean - want).abs() <= 3.0 * (var / reps as f64).sqrt(), "{mean} vs {want}");
}

#[test]
fn degenerate_ensembles() {
    let cat = library();
    let classes = generators();
    let t = st("thm w (x:0..3) (h0: x + 1 = 3) : x = 2");
    let anchored = ExhaustiveSampler::from_root(&classes, &t, 2, true).unwrap();
    let prover = PolicyProver::text_conditioned(3);
    let seed_mode = run_ensemble(&cat, &prover, &t, &anchored, &EnsembleConfig::new(1, 16, 5).unwrap()).unwrap();
    assert_eq!(seed_mode.variants.len(), 1);
    assert_eq!(seed_mode.variants[0].statement, t);
    assert_eq!(seed_mode.variants[0].attempts, 16);
    let size = anchored.class.len();
    let spread = run_ensemble(&cat, &prover, &t, &anchored, &EnsembleConfig::new(size, size, 5).unwrap()).unwrap();
    assert!(spread.variants.iter().all(|v| v.attempts == 1));
    assert_eq!(spread.variants.len(), size);
    let never = SyntheticProver::table(BTreeMap::new(), 3);
    let fail = run_ensemble(&cat, &never, &t, &anchored, &EnsembleConfig::new(2, 8, 1).unwrap()).unwrap();
    assert!(!fail.success());
    assert!(fail.variants.iter().all(|v| v.successes == 0));
}

#[test]
fn run_frequency_matches_exact_success() {
    let cat = library();
    let classes = generators();
    let t = st("thm w (x:0..3) (h0: x + 1 = 3) : x = 2");
    let sampler = ExhaustiveSampler::from_root(&classes, &t, 2, true).unwrap();
    let table = sampler.class.statements().map(|m| (m.canonical(), ((m.canonical().len() % 7) as f64 + 1.0) / 10.0)).collect();
    let prover = SyntheticProver::table(table, 4);
    // Realized rates include the provability gate.
    let rates: Vec<f64> = sampler
        .class
        .statements()
        .map(|m| prover.session(&cat, m).success_probability(4, DEFAULT_BUDGET).unwrap())
        .collect();
    assert!(rates.iter().any(|&r| r > 0.0));
    let anchor = sampler.position(&t).unwrap();
    let (k, n, reps) = (2, 5, 200_000);
    let exact = expected_success_exact(&rates, &SubsetLaw::Anchored(anchor), k, n).unwrap();
    let mut runner = rwcat_core::ensemble::EnsembleRunner::new(&cat, &prover);
    let hits = (0..reps).filter(|&r| runner.run(&t, &sampler, &EnsembleConfig::new(k, n, r as u64).unwrap()).unwrap().success()).count();
    let sigma = (exact * (1.0 - exact) / reps as f64).sqrt();
    assert!((hits as f64 / reps as f64 - exact).abs() <= 3.0 * sigma, "{hits} vs {exact}");
}
