mod common;

use common::{corpus, library, random_trace, rng, st};
use proptest::prelude::*;
use rand::Rng;
use rwcat_core::parse::parse_term;
use rwcat_core::tactic::{Side, TacticSeq};
use rwcat_core::{decide_truth, parse_statement, Direction, Limits, ProofState, Tactic, Term};

fn term_strategy() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![(-9i64..=9).prop_map(Term::lit), prop::sample::select(vec!["x", "y", "z"]).prop_map(Term::var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::add(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::sub(a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::mul(a, b)),
            inner.clone().prop_map(Term::neg),
            (inner, 0u8..=3).prop_map(|(a, e)| Term::pow(a, e)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printed_terms_parse_back(t in term_strategy()) {
        prop_assert_eq!(parse_term(&t.to_string()).unwrap(), t);
    }

    #[test]
    fn generated_statements_round_trip(seed in 0u64..10_000) {
        for t in corpus(6, seed) {
            prop_assert_eq!(parse_statement(&t.canonical()).unwrap(), t);
        }
    }

    #[test]
    fn closed_states_absorb(seed in 0u64..10_000) {
        let cat = library();
        let mut r = rng(seed);
        let t = &corpus(3, seed)[0];
        let (seq, _) = random_trace(&cat, t, 3, &mut r);
        for tac in seq.iter().chain([Tactic::CloseRefl, Tactic::Skip, Tactic::Fold].iter()) {
            prop_assert_eq!(cat.apply_tactic(&ProofState::Empty, tac), ProofState::Empty);
            prop_assert_eq!(cat.apply_tactic(&ProofState::Error, tac), ProofState::Error);
        }
    }

    #[test]
    fn open_states_of_true_statements_stay_true(seed in 0u64..10_000) {
        let cat = library();
        let mut r = rng(seed ^ 0xabc);
        for t in corpus(4, seed) {
            let (_, states) = random_trace(&cat, &t, 5, &mut r);
            for s in states {
                if let ProofState::Open(g) = &s {
                    prop_assert_eq!(decide_truth(&g.decompile("s"), &Limits::default()), Ok(true), "{}", g.decompile("s"));
                }
            }
        }
    }

    #[test]
    fn no_false_statement_is_proved(seed in 0u64..10_000, bump in 1i64..=3) {
        let cat = library();
        let mut r = rng(seed);
        for t in corpus(4, seed) {
            let mut f = t.clone();
            f.goal.rhs = Term::add(f.goal.rhs.clone(), Term::lit(bump));
            let truth = decide_truth(&f, &Limits::default()).unwrap();
            for _ in 0..20 {
                let len = r.random_range(1..=5);
                let (p, _) = random_trace(&cat, &f, len, &mut r);
                if cat.verify_proof(&f, &p) {
                    prop_assert!(truth, "{} <- {}", f, p);
                }
            }
        }
    }
}

/// Brute force over the declared domain, independent of the truth oracle.
fn holds_everywhere(lo: i64, hi: i64, hyp: impl Fn(i64) -> bool, goal: impl Fn(i64) -> bool) -> bool {
    (lo..=hi).all(|x| !hyp(x) || goal(x))
}

#[test]
fn truth_examples_against_enumeration() {
    let l = Limits::default();
    let cases = [
        ("thm a (x:0..3) (h: x + 1 = 3) : 3 = x + 1", holds_everywhere(0, 3, |x| x + 1 == 3, |x| 3 == x + 1)),
        ("thm a (x:0..3) (h: x + 1 = 3) : x = 2", holds_everywhere(0, 3, |x| x + 1 == 3, |x| x == 2)),
        ("thm a (x:0..3) : x <= 2", holds_everywhere(0, 3, |_| true, |x| x <= 2)),
    ];
    assert_eq!(cases.map(|c| c.1), [true, true, false]);
    for (text, want) in cases {
        assert_eq!(decide_truth(&st(text), &l), Ok(want), "{text}");
    }
}

#[test]
fn use_hyp_then_refl_trace() {
    let cat = library();
    let t = st("thm a (x:0..3) (h0: x + 1 = 3) : 3 = x + 1");
    let use_hyp = Tactic::UseHyp { hyp: 0, dir: Direction::Bwd, side: Side::Lhs, path: vec![] };
    let s1 = cat.apply_tactic(&ProofState::compile(&t), &use_hyp);
    let ProofState::Open(g) = &s1 else { panic!("{s1:?}") };
    assert_eq!(g.goal.to_string(), "x + 1 = x + 1");
    assert_eq!(cat.apply_tactic(&s1, &Tactic::CloseRefl), ProofState::Empty);
    assert!(cat.verify_proof(&t, &TacticSeq(vec![use_hyp, Tactic::CloseRefl])));
    assert!(!cat.verify_proof(&t, &TacticSeq(vec![])));
    assert!(cat.verify_proof(&st("thm b () : 2 * 3 = 6"), &TacticSeq(vec![Tactic::CloseEval])));
}
