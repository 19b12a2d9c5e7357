//! Rewriting categories: statements as objects, rule-application
//! sequences as arrows.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rules::{RuleError, RuleSet};
use crate::statement::{Limits, RelKind, Relation, Statement, ValidationError};
use crate::tactic::{self, rewrite_relation, Direction, Position, ProofState, Side, Tactic, TacticSeq};
use crate::term::{Ident, Path};

/// What justifies a rewrite step: a rule, or an equality hypothesis.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lemma {
    Rule(Ident),
    Hyp(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Goal,
    Hyp(usize),
}

/// One generator arrow.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleApplication {
    pub lemma: Lemma,
    pub dir: Direction,
    pub target: Target,
    pub pos: Position,
}

impl RuleApplication {
    pub fn rule(rule: &str, dir: Direction, target: Target, pos: Position) -> Self {
        RuleApplication { lemma: Lemma::Rule(rule.into()), dir, target, pos }
    }

    pub fn inverse(&self) -> RuleApplication {
        RuleApplication { dir: self.dir.flip(), ..self.clone() }
    }

    /// The tactic performing this step on the corresponding proof state.
    pub fn realize(&self) -> Result<Tactic, RewriteError> {
        match (&self.lemma, self.target, &self.pos) {
            (Lemma::Rule(rule), Target::Goal, pos) => Ok(Tactic::RewriteGoal { rule: rule.clone(), dir: self.dir, pos: pos.clone() }),
            (Lemma::Rule(rule), Target::Hyp(hyp), pos) => {
                Ok(Tactic::RewriteHyp { hyp, rule: rule.clone(), dir: self.dir, pos: pos.clone() })
            }
            (Lemma::Hyp(hyp), Target::Goal, Position::Term { side, path }) => {
                Ok(Tactic::UseHyp { hyp: *hyp, dir: self.dir, side: *side, path: path.clone() })
            }
            _ => Err(RewriteError::Unrealizable),
        }
    }
}

impl fmt::Display for RuleApplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.realize() {
            Ok(t) => write!(f, "{t}"),
            Err(_) => write!(f, "{self:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RewriteError {
    #[error("unknown rule `{0}`")]
    UnknownRule(Ident),
    #[error("pattern does not match at the given position")]
    NoMatch,
    #[error("target does not exist")]
    BadTarget,
    #[error("result exceeds the growth limits")]
    Growth,
    #[error(transparent)]
    Limit(#[from] ValidationError),
    #[error("rule `{0}` is one-directional")]
    NotInvertible(Ident),
    #[error("arrow endpoints do not match")]
    EndpointMismatch,
    #[error("step cannot be expressed as a tactic")]
    Unrealizable,
    #[error("the category is not reciprocal")]
    NotReciprocal,
    #[error("equivalence class exceeds {0} members")]
    ClassTooLarge(usize),
    #[error("replaying the arrow does not reproduce its target")]
    ReplayMismatch,
    #[error("lifted proof does not verify the source")]
    LiftFailed,
    #[error(transparent)]
    Rules(#[from] RuleError),
}

/// A sequence of rule applications from `src` to `dst`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Arrow {
    pub src: Statement,
    pub dst: Statement,
    pub steps: Vec<RuleApplication>,
}

impl Arrow {
    pub fn identity(t: &Statement) -> Arrow {
        Arrow { src: t.clone(), dst: t.clone(), steps: Vec::new() }
    }

    pub fn is_identity(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// The tactic prefix performing the arrow.
    pub fn realize(&self) -> Result<TacticSeq, RewriteError> {
        self.steps.iter().map(RuleApplication::realize).collect::<Result<Vec<_>, _>>().map(TacticSeq)
    }
}

/// How AST growth is treated when generating arrows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Growth {
    /// Only the language limits apply.
    #[default]
    Loose,
    /// A rewritten part may not gain nodes or depth.
    Strict,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RewritingCategory {
    /// Generating rules of the arrows.
    pub rules: RuleSet,
    /// Rules available to rewrite tactics; contains `rules`.
    pub tactics: RuleSet,
    pub limits: Limits,
    pub growth: Growth,
    /// Whether `neighbors` also proposes rewrites by equality hypotheses.
    pub hyp_rewrites: bool,
    pub class_cap: usize,
}

/// A bounded equivalence class, with an arrow from the root to each member.
#[derive(Clone, Debug)]
pub struct EquivalenceClass {
    pub root: Statement,
    /// Sorted by canonical text.
    pub members: Vec<(Statement, Arrow)>,
}

impl EquivalenceClass {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.members.iter().map(|(s, _)| s)
    }

    pub fn contains(&self, t: &Statement) -> bool {
        let key = t.canonical();
        self.members.binary_search_by(|(s, _)| s.canonical().cmp(&key)).is_ok()
    }
}

fn part_mut(t: &mut Statement, target: Target) -> Option<&mut Relation> {
    match target {
        Target::Goal => Some(&mut t.goal),
        Target::Hyp(i) => t.hyps.get_mut(i).map(|h| &mut h.rel),
    }
}

fn part(t: &Statement, target: Target) -> Option<&Relation> {
    match target {
        Target::Goal => Some(&t.goal),
        Target::Hyp(i) => t.hyps.get(i).map(|h| &h.rel),
    }
}

impl RewritingCategory {
    pub fn new(rules: RuleSet) -> Self {
        RewritingCategory { tactics: rules.clone(), rules, limits: Limits::default(), growth: Growth::Loose, hyp_rewrites: false, class_cap: 10_000 }
    }

    pub fn with_growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }

    pub fn with_limits(mut self, limits: Limits) -> Self {
        self.limits = limits;
        self
    }

    pub fn with_hyp_rewrites(mut self, on: bool) -> Self {
        self.hyp_rewrites = on;
        self
    }

    /// The subcategory generated by a subset of the rules. Tactics keep
    /// the full rule library.
    pub fn generated(&self, ids: &[&str]) -> Result<RewritingCategory, RewriteError> {
        Ok(RewritingCategory { rules: self.rules.restrict(ids)?, ..self.clone() })
    }

    pub fn is_reciprocal(&self) -> bool {
        self.rules.is_reciprocal()
    }

    pub fn apply_rule(&self, t: &Statement, a: &RuleApplication) -> Result<Statement, RewriteError> {
        let old = part(t, a.target).ok_or(RewriteError::BadTarget)?;
        let new = match &a.lemma {
            Lemma::Rule(id) => {
                let rule = self.rules.get(id).ok_or_else(|| RewriteError::UnknownRule(id.clone()))?;
                if !rule.allows(a.dir) {
                    return Err(RewriteError::NotInvertible(id.clone()));
                }
                rewrite_relation(&self.rules, old, id, a.dir, &a.pos).ok_or(RewriteError::NoMatch)?
            }
            Lemma::Hyp(i) => {
                if a.target != Target::Goal {
                    return Err(RewriteError::BadTarget);
                }
                let hyp = t.hyps.get(*i).ok_or(RewriteError::BadTarget)?;
                let tac = a.realize()?;
                let state = ProofState::Open(crate::tactic::Goal {
                    vars: t.vars.clone(),
                    hyps: alloc::vec![hyp.rel.clone()],
                    goal: old.clone(),
                });
                let local = match tac {
                    Tactic::UseHyp { dir, side, path, .. } => Tactic::UseHyp { hyp: 0, dir, side, path },
                    _ => return Err(RewriteError::Unrealizable),
                };
                if hyp.rel.kind != RelKind::Eq {
                    return Err(RewriteError::NoMatch);
                }
                match tactic::apply_tactic(&self.rules, &self.limits, &state, &local) {
                    ProofState::Open(g) => g.goal,
                    _ => return Err(RewriteError::NoMatch),
                }
            }
        };
        self.limits.check_relation(&new)?;
        if self.growth == Growth::Strict && (new.node_count() > old.node_count() || new.depth() > old.depth()) {
            return Err(RewriteError::Growth);
        }
        let mut out = t.clone();
        *part_mut(&mut out, a.target).ok_or(RewriteError::BadTarget)? = new;
        Ok(out)
    }

    /// Replay `steps` from `src`.
    pub fn replay(&self, src: &Statement, steps: &[RuleApplication]) -> Result<Statement, RewriteError> {
        steps.iter().try_fold(src.clone(), |t, a| self.apply_rule(&t, a))
    }

    /// Build an arrow by replaying `steps`.
    pub fn arrow(&self, src: &Statement, steps: Vec<RuleApplication>) -> Result<Arrow, RewriteError> {
        let dst = self.replay(src, &steps)?;
        Ok(Arrow { src: src.clone(), dst, steps })
    }

    pub fn check_arrow(&self, a: &Arrow) -> Result<(), RewriteError> {
        if self.replay(&a.src, &a.steps)? == a.dst {
            Ok(())
        } else {
            Err(RewriteError::ReplayMismatch)
        }
    }

    pub fn compose(&self, a: &Arrow, b: &Arrow) -> Result<Arrow, RewriteError> {
        compose(a, b)
    }

    pub fn invert(&self, a: &Arrow) -> Result<Arrow, RewriteError> {
        for s in &a.steps {
            if let Lemma::Rule(id) = &s.lemma {
                let rule = self.rules.get(id).ok_or_else(|| RewriteError::UnknownRule(id.clone()))?;
                if !rule.bidirectional {
                    return Err(RewriteError::NotInvertible(id.clone()));
                }
            }
        }
        let steps = a.steps.iter().rev().map(RuleApplication::inverse).collect();
        Ok(Arrow { src: a.dst.clone(), dst: a.src.clone(), steps })
    }

    /// `realize(a) ++ p`, checked against `a.src`.
    pub fn lift_proof(&self, a: &Arrow, p: &TacticSeq) -> Result<TacticSeq, RewriteError> {
        let lifted = a.realize()?.concat(p);
        if self.verify_proof(&a.src, &lifted) || !self.verify_proof(&a.dst, p) {
            Ok(lifted)
        } else {
            Err(RewriteError::LiftFailed)
        }
    }

    fn single_applications(&self, t: &Statement) -> Vec<RuleApplication> {
        let mut out = Vec::new();
        let mut targets = alloc::vec![Target::Goal];
        targets.extend((0..t.hyps.len()).map(Target::Hyp));
        let term_positions = |r: &Relation| -> Vec<Position> {
            let mut v: Vec<Position> = r.lhs.positions().into_iter().map(|p| Position::Term { side: Side::Lhs, path: p }).collect();
            v.extend(r.rhs.positions().into_iter().map(|p: Path| Position::Term { side: Side::Rhs, path: p }));
            v
        };
        for rule in self.rules.iter() {
            for dir in [Direction::Fwd, Direction::Bwd] {
                if !rule.allows(dir) {
                    continue;
                }
                for &target in &targets {
                    let rel = part(t, target).expect("target exists");
                    let positions = if rule.is_relation_rule() { alloc::vec![Position::Relation] } else { term_positions(rel) };
                    for pos in positions {
                        out.push(RuleApplication { lemma: Lemma::Rule(rule.id.clone()), dir, target, pos });
                    }
                }
            }
        }
        if self.hyp_rewrites {
            for i in 0..t.hyps.len() {
                for dir in [Direction::Fwd, Direction::Bwd] {
                    for pos in term_positions(&t.goal) {
                        out.push(RuleApplication { lemma: Lemma::Hyp(i), dir, target: Target::Goal, pos });
                    }
                }
            }
        }
        out
    }

    /// Valid single-step rewrites of `t`, excluding self-loops, deduplicated
    /// by result, ranked by (node count, canonical text), truncated to
    /// `breadth`.
    pub fn neighbors(&self, t: &Statement, breadth: usize) -> Vec<(RuleApplication, Statement)> {
        self.ranked_neighbors(t, None, breadth)
    }

    /// As [`neighbors`](Self::neighbors), restricted to rewrites of one part.
    pub fn neighbors_at(&self, t: &Statement, target: Target, breadth: usize) -> Vec<(RuleApplication, Statement)> {
        self.ranked_neighbors(t, Some(target), breadth)
    }

    fn ranked_neighbors(&self, t: &Statement, only: Option<Target>, breadth: usize) -> Vec<(RuleApplication, Statement)> {
        if breadth == 0 {
            return Vec::new();
        }
        let own = t.canonical();
        let mut best: BTreeMap<String, (RuleApplication, Statement)> = BTreeMap::new();
        for a in self.single_applications(t) {
            if only.is_some_and(|o| o != a.target) {
                continue;
            }
            let Ok(dst) = self.apply_rule(t, &a) else {
                continue;
            };
            let key = dst.canonical();
            if key == own {
                continue;
            }
            match best.get(&key) {
                Some((prev, _)) if *prev <= a => {}
                _ => {
                    best.insert(key, (a, dst));
                }
            }
        }
        let mut ranked: Vec<(usize, String, RuleApplication, Statement)> =
            best.into_iter().map(|(k, (a, s))| (s.node_count(), k, a, s)).collect();
        ranked.sort_by(|x, y| (x.0, &x.1).cmp(&(y.0, &y.1)));
        ranked.into_iter().take(breadth).map(|(_, _, a, s)| (a, s)).collect()
    }

    /// Breadth-first closure of `t` under single rewrites, to `depth`.
    pub fn equivalence_class(&self, t: &Statement, depth: usize) -> Result<EquivalenceClass, RewriteError> {
        if !self.is_reciprocal() {
            return Err(RewriteError::NotReciprocal);
        }
        let mut seen: BTreeMap<String, (Statement, Arrow)> = BTreeMap::new();
        seen.insert(t.canonical(), (t.clone(), Arrow::identity(t)));
        let mut frontier: VecDeque<(Statement, usize)> = VecDeque::new();
        frontier.push_back((t.clone(), 0));
        while let Some((cur, d)) = frontier.pop_front() {
            if d == depth {
                continue;
            }
            let path = seen[&cur.canonical()].1.steps.clone();
            for (a, next) in self.neighbors(&cur, usize::MAX) {
                let key = next.canonical();
                if seen.contains_key(&key) {
                    continue;
                }
                if seen.len() >= self.class_cap {
                    return Err(RewriteError::ClassTooLarge(self.class_cap));
                }
                let mut steps = path.clone();
                steps.push(a);
                let arrow = Arrow { src: t.clone(), dst: next.clone(), steps };
                seen.insert(key, (next.clone(), arrow));
                frontier.push_back((next, d + 1));
            }
        }
        Ok(EquivalenceClass { root: t.clone(), members: seen.into_values().collect() })
    }

    pub fn apply_tactic(&self, s: &ProofState, t: &Tactic) -> ProofState {
        tactic::apply_tactic(&self.tactics, &self.limits, s, t)
    }

    pub fn verify_proof(&self, t: &Statement, p: &TacticSeq) -> bool {
        tactic::verify_proof(&self.tactics, &self.limits, t, p)
    }

    pub fn enumerate_tactics(&self, s: &ProofState) -> Vec<(Tactic, ProofState)> {
        tactic::enumerate_tactics(&self.tactics, &self.limits, s)
    }

    pub fn valid_tactics(&self, s: &ProofState) -> Vec<Tactic> {
        tactic::valid_tactics(&self.tactics, &self.limits, s)
    }
}

pub fn compose(a: &Arrow, b: &Arrow) -> Result<Arrow, RewriteError> {
    if a.dst != b.src {
        return Err(RewriteError::EndpointMismatch);
    }
    let mut steps = a.steps.clone();
    steps.extend(b.steps.iter().cloned());
    Ok(Arrow { src: a.src.clone(), dst: b.dst.clone(), steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_statement;
    use alloc::string::ToString;
    use alloc::vec;

    fn cat(ids: &[&str]) -> RewritingCategory {
        RewritingCategory::new(RuleSet::default_rules()).generated(ids).unwrap()
    }

    fn st(s: &str) -> Statement {
        parse_statement(s).unwrap()
    }

    fn lhs_root(rule: &str) -> RuleApplication {
        RuleApplication::rule(rule, Direction::Fwd, Target::Goal, Position::term(Side::Lhs, &[]))
    }

    #[test]
    fn add_comm_on_goal() {
        let c = cat(&["add_comm"]);
        let t = st("thm t (x:0..3) : x + 1 = 3");
        let out = c.apply_rule(&t, &lhs_root("add_comm")).unwrap();
        assert_eq!(out.goal.to_string(), "1 + x = 3");
        assert_eq!(c.apply_rule(&t, &lhs_root("mul_comm")), Err(RewriteError::UnknownRule("mul_comm".into())));
        let miss = RuleApplication::rule("add_comm", Direction::Fwd, Target::Goal, Position::term(Side::Rhs, &[]));
        assert_eq!(c.apply_rule(&t, &miss), Err(RewriteError::NoMatch));
    }

    #[test]
    fn strict_growth_rejects_expansion() {
        let t = st("thm t : 3 = 3");
        let a = RuleApplication::rule("mul_one", Direction::Bwd, Target::Goal, Position::term(Side::Lhs, &[]));
        let loose = cat(&["mul_one"]);
        assert_eq!(loose.apply_rule(&t, &a).unwrap().goal.to_string(), "3 * 1 = 3");
        let strict = loose.clone().with_growth(Growth::Strict);
        assert_eq!(strict.apply_rule(&t, &a), Err(RewriteError::Growth));
    }

    #[test]
    fn compose_and_invert() {
        let c = cat(&["add_comm", "mul_comm"]);
        let t = st("thm t (x:0..3) : x + 1 = 2 * x");
        let a = c.arrow(&t, vec![lhs_root("add_comm")]).unwrap();
        let b_step = RuleApplication::rule("mul_comm", Direction::Fwd, Target::Goal, Position::term(Side::Rhs, &[]));
        let b = c.arrow(&a.dst, vec![b_step]).unwrap();
        let ab = c.compose(&a, &b).unwrap();
        assert_eq!(ab.dst.goal.to_string(), "1 + x = x * 2");
        c.check_arrow(&ab).unwrap();
        assert_eq!(c.compose(&b, &a), Err(RewriteError::EndpointMismatch));
        let inv = c.invert(&a).unwrap();
        assert_eq!(inv.dst.goal.to_string(), "x + 1 = 2 * x");
        c.check_arrow(&inv).unwrap();
        assert_eq!(c.invert(&inv).unwrap(), a);
        let round = c.compose(&a, &inv).unwrap();
        assert_eq!(round.src, round.dst);
    }

    #[test]
    fn neighbors_examples() {
        let c = cat(&["mul_comm"]);
        let t = st("thm g : 2 * 3 = 6");
        let n = c.neighbors(&t, 15);
        assert_eq!(n.len(), 1);
        assert_eq!(n[0].1.goal.to_string(), "3 * 2 = 6");
        assert!(c.neighbors(&t, 0).is_empty());
    }

    #[test]
    fn neighbors_empty_at_node_limit() {
        let c = cat(&["mul_one"]);
        let limits = Limits { max_nodes: 3, ..Limits::default() };
        let c = c.with_limits(limits);
        let t = st("thm g (x:0..1) : x * 1 = x * x");
        let full = st("thm g (x:0..1) : x * x = x * x");
        assert!(c.neighbors(&full, 15).is_empty());
        assert_eq!(c.neighbors(&t, 15).len(), 1);
    }

    #[test]
    fn documented_class() {
        let c = cat(&["add_comm", "eq_comm"]);
        let t = st("thm t (x:0..3) : x + 1 = 3");
        let cls = c.equivalence_class(&t, 2).unwrap();
        let goals: Vec<String> = cls.statements().map(|s| s.goal.to_string()).collect();
        assert_eq!(goals, vec!["1 + x = 3", "3 = 1 + x", "3 = x + 1", "x + 1 = 3"]);
        assert_eq!(c.equivalence_class(&t, 0).unwrap().len(), 1);
        for (s, a) in &cls.members {
            c.check_arrow(a).unwrap();
            assert_eq!(&a.dst, s);
        }
    }

    #[test]
    fn non_reciprocal_class_is_refused() {
        let mut rules: Vec<_> = RuleSet::default_rules().iter().cloned().collect();
        rules.push(crate::rules::RewriteRule::parse("mul_zero: ?a * 0 -> 0").unwrap());
        let c = RewritingCategory::new(RuleSet::new(rules).unwrap());
        let t = st("thm t : 0 = 0");
        assert_eq!(c.equivalence_class(&t, 1).unwrap_err(), RewriteError::NotReciprocal);
    }

    #[test]
    fn lift_over_use_hyp_arrow() {
        let c = cat(&["add_comm"]);
        let t = st("thm a (x:0..3) (h0: x + 1 = 3) : 3 = x + 1");
        let step = RuleApplication { lemma: Lemma::Hyp(0), dir: Direction::Bwd, target: Target::Goal, pos: Position::term(Side::Lhs, &[]) };
        let a = c.arrow(&t, vec![step]).unwrap();
        assert_eq!(a.dst.goal.to_string(), "x + 1 = x + 1");
        let p = TacticSeq(vec![Tactic::CloseRefl]);
        assert!(c.verify_proof(&a.dst, &p));
        let lifted = c.lift_proof(&a, &p).unwrap();
        assert!(c.verify_proof(&t, &lifted));
        assert_eq!(c.lift_proof(&Arrow::identity(&t), &p).unwrap(), p);
    }
}
