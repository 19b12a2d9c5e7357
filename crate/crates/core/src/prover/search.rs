//! Breadth-first search for a short proof.

use alloc::collections::{BTreeMap, VecDeque};

use crate::category::RewritingCategory;
use crate::statement::Statement;
use crate::tactic::{ProofState, Tactic, TacticSeq};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Found(TacticSeq),
    /// No proof of at most the requested length exists.
    Exhausted,
    /// The state budget ran out first.
    Budget,
}

fn size(state: &ProofState) -> usize {
    match state {
        ProofState::Open(g) => g.hyps.iter().map(|h| h.node_count()).sum::<usize>() + g.goal.node_count(),
        _ => 0,
    }
}

/// Slack in total node count over the root that searched states may use.
pub const GROWTH_SLACK: usize = 2;

/// Shortest proof of at most `max_len` tactics (ties broken by tactic
/// order) among states no larger than the root plus [`GROWTH_SLACK`]
/// nodes, exploring at most `budget` distinct states.
pub fn find_proof(category: &RewritingCategory, t: &Statement, max_len: usize, budget: usize) -> SearchOutcome {
    let start = ProofState::compile(t);
    let cap = size(&start) + GROWTH_SLACK;
    let mut parent: BTreeMap<ProofState, Option<(ProofState, Tactic)>> = BTreeMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::new();
    queue.push_back((start, 0usize));
    while let Some((state, depth)) = queue.pop_front() {
        if depth == max_len {
            continue;
        }
        for (tac, next) in category.enumerate_tactics(&state) {
            if tac == Tactic::Skip || size(&next) > cap || parent.contains_key(&next) {
                continue;
            }
            if next.is_empty() {
                let mut proof = alloc::vec![tac];
                let mut cur = state.clone();
                while let Some(Some((prev, t))) = parent.get(&cur) {
                    proof.push(t.clone());
                    cur = prev.clone();
                }
                proof.reverse();
                return SearchOutcome::Found(TacticSeq(proof));
            }
            if parent.len() >= budget {
                return SearchOutcome::Budget;
            }
            parent.insert(next.clone(), Some((state.clone(), tac)));
            queue.push_back((next, depth + 1));
        }
    }
    SearchOutcome::Exhausted
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_statement;
    use crate::rules::RuleSet;

    #[test]
    fn finds_short_proofs() {
        let c = RewritingCategory::new(RuleSet::default_rules());
        let t = parse_statement("thm a (x:0..3) (h0: x + 1 = 3) : 3 = x + 1").unwrap();
        let SearchOutcome::Found(p) = find_proof(&c, &t, 3, 10_000) else { panic!() };
        assert_eq!(p.len(), 2);
        assert!(c.verify_proof(&t, &p));
        let g = parse_statement("thm g : 2 * 3 = 6").unwrap();
        assert_eq!(find_proof(&c, &g, 1, 100), SearchOutcome::Found(TacticSeq(alloc::vec![Tactic::CloseEval])));
        let no = parse_statement("thm n (x:0..3) : x <= 3").unwrap();
        assert_eq!(find_proof(&c, &no, 1, 10_000), SearchOutcome::Exhausted);
    }
}
