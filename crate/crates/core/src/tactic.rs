//! Proof states, tactics and their (total) semantics.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rules::{RewriteRule, RuleSet};
use crate::statement::{Hypothesis, Limits, RelKind, Relation, Statement, VarDecl};
use crate::term::{Ident, Path, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Lhs,
    Rhs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Fwd,
    Bwd,
}

impl Direction {
    pub fn flip(self) -> Direction {
        match self {
            Direction::Fwd => Direction::Bwd,
            Direction::Bwd => Direction::Fwd,
        }
    }
}

/// Where a rule is applied inside a relation.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Position {
    /// The whole relation (relation-level rules).
    Relation,
    Term { side: Side, path: Path },
}

impl Position {
    pub fn term(side: Side, path: &[u8]) -> Position {
        Position::Term { side, path: path.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tactic {
    RewriteGoal { rule: Ident, dir: Direction, pos: Position },
    RewriteHyp { hyp: usize, rule: Ident, dir: Direction, pos: Position },
    /// Rewrite the goal with an equality hypothesis: `Fwd` replaces its lhs
    /// by its rhs.
    UseHyp { hyp: usize, dir: Direction, side: Side, path: Path },
    CloseRefl,
    CloseEval,
    CloseHyp(usize),
    Fold,
    /// The no-op.
    Skip,
}

/// Coarse tactic families, used by prover weightings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TacticKind {
    RewriteGoal,
    RewriteHyp,
    UseHyp,
    CloseRefl,
    CloseEval,
    CloseHyp,
    Fold,
    Skip,
}

impl TacticKind {
    pub const ALL: [TacticKind; 8] = [
        TacticKind::RewriteGoal,
        TacticKind::RewriteHyp,
        TacticKind::UseHyp,
        TacticKind::CloseRefl,
        TacticKind::CloseEval,
        TacticKind::CloseHyp,
        TacticKind::Fold,
        TacticKind::Skip,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            TacticKind::RewriteGoal => "rewrite_goal",
            TacticKind::RewriteHyp => "rewrite_hyp",
            TacticKind::UseHyp => "use_hyp",
            TacticKind::CloseRefl => "close_refl",
            TacticKind::CloseEval => "close_eval",
            TacticKind::CloseHyp => "close_hyp",
            TacticKind::Fold => "fold",
            TacticKind::Skip => "skip",
        }
    }

    pub fn from_name(name: &str) -> Option<TacticKind> {
        TacticKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl Tactic {
    pub fn kind(&self) -> TacticKind {
        match self {
            Tactic::RewriteGoal { .. } => TacticKind::RewriteGoal,
            Tactic::RewriteHyp { .. } => TacticKind::RewriteHyp,
            Tactic::UseHyp { .. } => TacticKind::UseHyp,
            Tactic::CloseRefl => TacticKind::CloseRefl,
            Tactic::CloseEval => TacticKind::CloseEval,
            Tactic::CloseHyp(_) => TacticKind::CloseHyp,
            Tactic::Fold => TacticKind::Fold,
            Tactic::Skip => TacticKind::Skip,
        }
    }

    pub fn rule(&self) -> Option<&str> {
        match self {
            Tactic::RewriteGoal { rule, .. } | Tactic::RewriteHyp { rule, .. } => Some(rule),
            _ => None,
        }
    }
}

struct PathDisplay<'a>(&'a Position);

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Position::Relation => Ok(()),
            Position::Term { side, path } => {
                f.write_str(match side {
                    Side::Lhs => ":lhs",
                    Side::Rhs => ":rhs",
                })?;
                for i in path {
                    write!(f, ".{i}")?;
                }
                Ok(())
            }
        }
    }
}

fn arrow(dir: Direction) -> &'static str {
    match dir {
        Direction::Fwd => "",
        Direction::Bwd => "<- ",
    }
}

impl fmt::Display for Tactic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tactic::RewriteGoal { rule, dir, pos } => write!(f, "rw [{}{rule}] goal{}", arrow(*dir), PathDisplay(pos)),
            Tactic::RewriteHyp { hyp, rule, dir, pos } => {
                write!(f, "rw [{}{rule}] h{hyp}{}", arrow(*dir), PathDisplay(pos))
            }
            Tactic::UseHyp { hyp, dir, side, path } => write!(
                f,
                "rw [{}h{hyp}] goal{}",
                arrow(*dir),
                PathDisplay(&Position::Term { side: *side, path: path.clone() })
            ),
            Tactic::CloseRefl => f.write_str("rfl"),
            Tactic::CloseEval => f.write_str("decide"),
            Tactic::CloseHyp(i) => write!(f, "exact h{i}"),
            Tactic::Fold => f.write_str("norm_num"),
            Tactic::Skip => f.write_str("skip"),
        }
    }
}

/// A finite tactic sequence; concatenation is the monoid operation.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TacticSeq(pub Vec<Tactic>);

impl TacticSeq {
    pub fn empty() -> TacticSeq {
        TacticSeq(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &TacticSeq) -> TacticSeq {
        let mut v = self.0.clone();
        v.extend(other.0.iter().cloned());
        TacticSeq(v)
    }

    pub fn starts_with(&self, prefix: &[Tactic]) -> bool {
        self.0.starts_with(prefix)
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Tactic> {
        self.0.iter()
    }
}

impl From<Vec<Tactic>> for TacticSeq {
    fn from(v: Vec<Tactic>) -> Self {
        TacticSeq(v)
    }
}

impl fmt::Display for TacticSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

/// An open goal: the variables, the hypotheses and the remaining goal.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Goal {
    pub vars: Vec<VarDecl>,
    pub hyps: Vec<Relation>,
    pub goal: Relation,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProofState {
    Open(Goal),
    Empty,
    Error,
}

impl ProofState {
    pub fn compile(stmt: &Statement) -> ProofState {
        ProofState::Open(Goal {
            vars: stmt.vars.clone(),
            hyps: stmt.hyps.iter().map(|h| h.rel.clone()).collect(),
            goal: stmt.goal.clone(),
        })
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, ProofState::Empty)
    }

    pub fn is_error(&self) -> bool {
        matches!(self, ProofState::Error)
    }

    pub fn as_open(&self) -> Option<&Goal> {
        match self {
            ProofState::Open(g) => Some(g),
            _ => None,
        }
    }
}

impl Goal {
    /// The statement of this goal, with hypotheses named `h0, h1, ...`.
    pub fn decompile(&self, name: &str) -> Statement {
        Statement {
            name: name.into(),
            vars: self.vars.clone(),
            hyps: self
                .hyps
                .iter()
                .enumerate()
                .map(|(i, r)| Hypothesis { name: alloc::format!("h{i}"), rel: r.clone() })
                .collect(),
            goal: self.goal.clone(),
        }
    }
}

/// Replace the subterm at `path` of `side` by `f(subterm)`.
fn rewrite_at<F>(rel: &Relation, side: Side, path: &[u8], f: F) -> Option<Relation>
where
    F: FnOnce(&Term) -> Option<Term>,
{
    let t = match side {
        Side::Lhs => &rel.lhs,
        Side::Rhs => &rel.rhs,
    };
    let new = t.replace_at(path, f(t.at(path)?)?)?;
    let mut out = Relation::new(rel.kind, Term::lit(0), Term::lit(0));
    match side {
        Side::Lhs => {
            out.lhs = new;
            out.rhs = rel.rhs.clone();
        }
        Side::Rhs => {
            out.lhs = rel.lhs.clone();
            out.rhs = new;
        }
    }
    Some(out)
}

fn rewrite_with(r: &RewriteRule, rel: &Relation, dir: Direction, pos: &Position) -> Option<Relation> {
    match pos {
        Position::Relation => r.rewrite_relation(dir, rel),
        Position::Term { side, path } => rewrite_at(rel, *side, path, |t| r.rewrite_term(dir, t)),
    }
}

/// Apply a rule at a position of a relation.
pub(crate) fn rewrite_relation(rules: &RuleSet, rel: &Relation, rule: &str, dir: Direction, pos: &Position) -> Option<Relation> {
    rewrite_with(rules.get(rule)?, rel, dir, pos)
}

fn use_hyp(hyp: &Relation, goal: &Relation, dir: Direction, side: Side, path: &[u8]) -> Option<Relation> {
    if hyp.kind != RelKind::Eq {
        return None;
    }
    let (from, to) = match dir {
        Direction::Fwd => (&hyp.lhs, &hyp.rhs),
        Direction::Bwd => (&hyp.rhs, &hyp.lhs),
    };
    rewrite_at(goal, side, path, |t| (t == from).then(|| to.clone()))
}

fn fold_goal(goal: &Relation, limits: &Limits) -> Option<Relation> {
    let lhs = goal.lhs.fold_constants(limits.literal_min, limits.literal_max).ok()?;
    let rhs = goal.rhs.fold_constants(limits.literal_min, limits.literal_max).ok()?;
    let out = Relation::new(goal.kind, lhs, rhs);
    (out != *goal).then_some(out)
}

fn step(rules: &RuleSet, limits: &Limits, g: &Goal, t: &Tactic) -> Option<ProofState> {
    let checked = |rel: &Relation| limits.check_relation(rel).is_ok();
    match t {
        Tactic::Skip => Some(ProofState::Open(g.clone())),
        Tactic::CloseRefl => (g.goal.kind == RelKind::Eq && g.goal.lhs == g.goal.rhs).then_some(ProofState::Empty),
        Tactic::CloseEval => {
            if !g.goal.is_ground() {
                return None;
            }
            let l = g.goal.lhs.eval_ground().ok()?;
            let r = g.goal.rhs.eval_ground().ok()?;
            g.goal.kind.holds(l, r).then_some(ProofState::Empty)
        }
        Tactic::CloseHyp(i) => (g.hyps.get(*i)? == &g.goal).then_some(ProofState::Empty),
        Tactic::Fold => {
            let goal = fold_goal(&g.goal, limits)?;
            Some(ProofState::Open(Goal { goal, ..g.clone() }))
        }
        Tactic::RewriteGoal { rule, dir, pos } => {
            let goal = rewrite_relation(rules, &g.goal, rule, *dir, pos)?;
            checked(&goal).then(|| ProofState::Open(Goal { goal, ..g.clone() }))
        }
        Tactic::RewriteHyp { hyp, rule, dir, pos } => {
            let new = rewrite_relation(rules, g.hyps.get(*hyp)?, rule, *dir, pos)?;
            if !checked(&new) {
                return None;
            }
            let mut next = g.clone();
            next.hyps[*hyp] = new;
            Some(ProofState::Open(next))
        }
        Tactic::UseHyp { hyp, dir, side, path } => {
            let goal = use_hyp(g.hyps.get(*hyp)?, &g.goal, *dir, *side, path)?;
            checked(&goal).then(|| ProofState::Open(Goal { goal, ..g.clone() }))
        }
    }
}

/// Total tactic semantics; `Empty` and `Error` are absorbing.
pub fn apply_tactic(rules: &RuleSet, limits: &Limits, state: &ProofState, t: &Tactic) -> ProofState {
    match state {
        ProofState::Open(g) => step(rules, limits, g, t).unwrap_or(ProofState::Error),
        absorbing => absorbing.clone(),
    }
}

/// Whether running `proof` from `compile(stmt)` reaches `Empty` at any prefix.
pub fn verify_proof(rules: &RuleSet, limits: &Limits, stmt: &Statement, proof: &TacticSeq) -> bool {
    let mut state = ProofState::compile(stmt);
    for t in proof.iter() {
        state = apply_tactic(rules, limits, &state, t);
        match state {
            ProofState::Empty => return true,
            ProofState::Error => return false,
            ProofState::Open(_) => {}
        }
    }
    false
}

fn term_positions(rel: &Relation) -> Vec<(Side, Path)> {
    let mut out: Vec<(Side, Path)> = rel.lhs.positions().into_iter().map(|p| (Side::Lhs, p)).collect();
    out.extend(rel.rhs.positions().into_iter().map(|p| (Side::Rhs, p)));
    out
}

/// Every tactic mapping `state` to a non-`Error` state, with that state,
/// sorted by tactic. `Skip` is included for open states.
pub fn enumerate_tactics(rules: &RuleSet, limits: &Limits, state: &ProofState) -> Vec<(Tactic, ProofState)> {
    let mut out: Vec<(Tactic, ProofState)> = Vec::new();
    enumerate_into(rules, limits, state, |t, next| out.push((t, next())));
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

/// The tactics of [`enumerate_tactics`], in the same order, without
/// building their successor states.
pub fn valid_tactics(rules: &RuleSet, limits: &Limits, state: &ProofState) -> Vec<Tactic> {
    let mut out = Vec::new();
    enumerate_into(rules, limits, state, |t, _| out.push(t));
    out.sort();
    out
}

fn enumerate_into(rules: &RuleSet, limits: &Limits, state: &ProofState, mut emit: impl FnMut(Tactic, &dyn Fn() -> ProofState)) {
    let ProofState::Open(g) = state else {
        return;
    };
    let checked = |rel: &Relation| limits.check_relation(rel).is_ok();
    let goal_pos = term_positions(&g.goal);
    let hyp_pos: Vec<Vec<(Side, Path)>> = g.hyps.iter().map(term_positions).collect();
    let positions = |rel_positions: &[(Side, Path)], relation_rule: bool| -> Vec<Position> {
        if relation_rule {
            alloc::vec![Position::Relation]
        } else {
            rel_positions.iter().map(|(s, p)| Position::Term { side: *s, path: p.clone() }).collect()
        }
    };
    for r in rules.iter() {
        for dir in [Direction::Fwd, Direction::Bwd] {
            if !r.allows(dir) {
                continue;
            }
            for pos in positions(&goal_pos, r.is_relation_rule()) {
                if let Some(goal) = rewrite_with(r, &g.goal, dir, &pos).filter(|x| checked(x)) {
                    emit(Tactic::RewriteGoal { rule: r.id.clone(), dir, pos }, &|| ProofState::Open(Goal { goal: goal.clone(), ..g.clone() }));
                }
            }
            for (i, hp) in hyp_pos.iter().enumerate() {
                for pos in positions(hp, r.is_relation_rule()) {
                    if let Some(new) = rewrite_with(r, &g.hyps[i], dir, &pos).filter(|x| checked(x)) {
                        emit(Tactic::RewriteHyp { hyp: i, rule: r.id.clone(), dir, pos }, &|| {
                            let mut next = g.clone();
                            next.hyps[i] = new.clone();
                            ProofState::Open(next)
                        });
                    }
                }
            }
        }
    }
    let mut cands: Vec<Tactic> = Vec::new();
    for i in 0..g.hyps.len() {
        for dir in [Direction::Fwd, Direction::Bwd] {
            for (side, path) in &goal_pos {
                cands.push(Tactic::UseHyp { hyp: i, dir, side: *side, path: path.clone() });
            }
        }
        cands.push(Tactic::CloseHyp(i));
    }
    cands.extend([Tactic::CloseRefl, Tactic::CloseEval, Tactic::Fold, Tactic::Skip]);
    for t in cands {
        if let Some(next) = step(rules, limits, g, &t) {
            emit(t, &|| next.clone());
        }
    }
}

/// Printable name of a goal state, for diagnostics.
pub fn describe_state(state: &ProofState) -> String {
    match state {
        ProofState::Open(g) => g.decompile("state").canonical(),
        ProofState::Empty => "<empty>".into(),
        ProofState::Error => "<error>".into(),
    }
}
