mod common;

use std::collections::BTreeMap;

use common::{corpus, generators, library, rng, st};
use proptest::prelude::*;
use rwcat_core::prover::{success_probability_mc, Policy, PolicyProver, Prover, SyntheticProver};
use rwcat_core::tactic::TacticKind;
use rwcat_core::{ProofState, Statement};

const BUDGET: usize = 10_000_000;

/// The same statement under other theorem and hypothesis names.
fn renamed(t: &Statement) -> Statement {
    let mut r = t.with_name(&format!("{}_r", t.name));
    for (i, h) in r.hyps.iter_mut().enumerate() {
        h.name = format!("a{i}").as_str().into();
    }
    r
}

#[test]
fn exact_and_monte_carlo_agree_on_twenty_statements() {
    let cat = library();
    let prover = PolicyProver::text_conditioned(3);
    let mut r = rng(5);
    for t in corpus(20, 2) {
        let mut s = prover.session(&cat, &t);
        let exact = s.success_probability(3, BUDGET).unwrap();
        let est = success_probability_mc(s.as_mut(), &cat, 3, 100_000, &mut r);
        let tol = 4.0 * est.stderr.max((exact * (1.0 - exact) / 1e5).sqrt());
        assert!((est.mean - exact).abs() <= tol, "{t}: exact {exact}, estimate {} +- {}", est.mean, est.stderr);
    }
}

#[test]
fn refl_or_skip_monte_carlo() {
    let cat = library();
    let p = PolicyProver::sequential(2).with_policy(Policy::only(&[TacticKind::CloseRefl, TacticKind::Skip]));
    let t = st("thm r (x:0..3) : x = x");
    let mut s = p.session(&cat, &t);
    // Enumerate the four sequences by hand: only (skip, skip) fails.
    assert_eq!(s.success_probability(2, BUDGET).unwrap(), 1.0 - 0.5 * 0.5);
    let est = success_probability_mc(s.as_mut(), &cat, 2, 100_000, &mut rng(9));
    assert!((est.mean - 0.75).abs() <= 3.0 * est.stderr, "{est:?}");
}

#[test]
fn deterministic_provers() {
    let cat = library();
    let t = st("thm g () : 2 * 3 = 6");
    for (rate, want) in [(1.0, 1.0), (0.0, 0.0)] {
        let p = SyntheticProver::table(BTreeMap::from([(t.canonical(), rate)]), 2);
        let mut s = p.session(&cat, &t);
        let est = success_probability_mc(s.as_mut(), &cat, 2, 1000, &mut rng(1));
        assert_eq!((est.mean, est.stderr), (want, 0.0));
    }
}

#[test]
fn sequential_prover_is_a_function_of_the_state() {
    let cat = library();
    let p = PolicyProver::sequential(3);
    for t in corpus(12, 4) {
        let u = renamed(&t);
        assert_ne!(t.canonical(), u.canonical());
        assert_eq!(ProofState::compile(&t), ProofState::compile(&u));
        let a = p.session(&cat, &t).proof_distribution(2, BUDGET).unwrap();
        let b = p.session(&cat, &u).proof_distribution(2, BUDGET).unwrap();
        assert_eq!(a, b);
        let sa = p.session(&cat, &t).success_probability(3, BUDGET).unwrap();
        let sb = p.session(&cat, &u).success_probability(3, BUDGET).unwrap();
        assert_eq!(sa.to_bits(), sb.to_bits());
    }
}

#[test]
fn text_prover_separates_a_documented_class() {
    let cat = library();
    let classes = cat.generated(&["add_comm", "eq_comm"]).unwrap();
    let class = classes.equivalence_class(&st("thm w (x:0..3) (h0: x + 1 = 3) : x = 2"), 2).unwrap();
    assert!(class.len() >= 2);
    let p = PolicyProver::text_conditioned(4);
    let rates: Vec<f64> = class.statements().map(|m| p.session(&cat, m).success_probability(4, BUDGET).unwrap()).collect();
    let lo = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = rates.iter().copied().fold(0.0, f64::max);
    assert!(hi > lo, "{rates:?}");
}

#[test]
fn every_sequence_has_the_smoothing_floor() {
    let cat = library();
    let p = PolicyProver::text_conditioned(2);
    for t in corpus(4, 8) {
        let mut s = p.session(&cat, &t);
        let root = ProofState::compile(&t);
        let mut widest = s.tactic_menu(&root).len();
        for (_, next) in cat.enumerate_tactics(&root) {
            widest = widest.max(s.tactic_menu(&next).len());
        }
        let floor = (p.policy.epsilon / widest as f64).powi(2);
        let d = s.proof_distribution(2, BUDGET).unwrap();
        assert!(d.min_mass() >= floor, "{} < {floor}", d.min_mass());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_policies_are_normalized(seed in any::<u64>(), amp in 0.0f64..3.0, eps in 1e-9f64..0.5, pick in 0usize..8) {
        let cat = library();
        let t = corpus(8, 21)[pick].clone();
        for source in [true, false] {
            let base = if source { PolicyProver::text_conditioned(2) } else { PolicyProver::sequential(2) };
            let p = base.clone().with_policy(Policy { seed, feature_amplitude: amp, epsilon: eps, ..base.policy.clone() });
            let d = p.session(&cat, &t).proof_distribution(2, BUDGET).unwrap();
            prop_assert!((d.total() - 1.0).abs() <= 1e-12);
            prop_assert!(d.min_mass() > 0.0);
        }
    }

    #[test]
    fn generator_classes_keep_sequential_rates_on_equal_states(pick in 0usize..30) {
        // Permutation generators change text but a renaming keeps the state.
        let cat = library();
        let t = corpus(30, 6)[pick].clone();
        let p = PolicyProver::sequential(2);
        let a = p.session(&cat, &t).success_probability(2, BUDGET).unwrap();
        let b = p.session(&cat, &renamed(&t)).success_probability(2, BUDGET).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert!(generators().equivalence_class(&t, 1).unwrap().contains(&t));
    }
}
