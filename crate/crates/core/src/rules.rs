//! Rewrite rules over term and relation patterns.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::hash::mix64;
use crate::parse::{ParseError, Parser, RawLeaf, RawSide, RawTerm};
use crate::statement::{Limits, RelKind, Relation};
use crate::tactic::Direction;
use crate::term::{fmt_node, Atom, Ident, LeafDisplay, Node, Term, PREC_ATOM, PREC_PREFIX};

/// Pattern leaf: a literal or a numbered hole.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Lit(i64),
    Hole(u8),
}

impl LeafDisplay for Slot {
    fn fmt_leaf(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Lit(v) => write!(f, "{v}"),
            Slot::Hole(h) => write!(f, "?{h}"),
        }
    }

    fn leaf_prec(&self) -> u8 {
        match self {
            Slot::Lit(v) if *v < 0 => PREC_PREFIX,
            _ => PREC_ATOM,
        }
    }
}

pub type Pattern = Node<Slot>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelPattern {
    pub kind: RelKind,
    pub lhs: Pattern,
    pub rhs: Pattern,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RuleBody {
    Term { lhs: Pattern, rhs: Pattern },
    Relation { lhs: RelPattern, rhs: RelPattern },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RewriteRule {
    pub id: Ident,
    /// Hole names, indexed by `Slot::Hole`.
    pub holes: Vec<String>,
    pub body: RuleBody,
    pub bidirectional: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("rule line {line}: {err}")]
    Parse { line: usize, err: ParseError },
    #[error("rule `{0}`: identifiers in rules must be holes (`?name`)")]
    ConcreteVariable(Ident),
    #[error("rule `{0}`: mixes a term pattern with a relation pattern")]
    MixedScope(Ident),
    #[error("rule `{0}`: pattern holes do not match between the sides")]
    HoleMismatch(Ident),
    #[error("rule `{0}`: not semantics-preserving")]
    Unsound(Ident),
    #[error("rule `{0}` defined twice")]
    Duplicate(Ident),
    #[error("unknown rule `{0}`")]
    Unknown(Ident),
}

type Subst = Vec<Option<Term>>;

fn match_pattern(p: &Pattern, t: &Term, s: &mut Subst) -> bool {
    match (p, t) {
        (Node::Leaf(Slot::Hole(h)), _) => match &s[*h as usize] {
            Some(bound) => bound == t,
            None => {
                s[*h as usize] = Some(t.clone());
                true
            }
        },
        (Node::Leaf(Slot::Lit(a)), Node::Leaf(Atom::Lit(b))) => a == b,
        (Node::Add(pa, pb), Node::Add(ta, tb)) | (Node::Sub(pa, pb), Node::Sub(ta, tb)) | (Node::Mul(pa, pb), Node::Mul(ta, tb)) => {
            match_pattern(pa, ta, s) && match_pattern(pb, tb, s)
        }
        (Node::Neg(pa), Node::Neg(ta)) => match_pattern(pa, ta, s),
        (Node::Pow(pa, pe), Node::Pow(ta, te)) => pe == te && match_pattern(pa, ta, s),
        _ => false,
    }
}

fn instantiate(p: &Pattern, s: &Subst) -> Option<Term> {
    Some(match p {
        Node::Leaf(Slot::Hole(h)) => s[*h as usize].clone()?,
        Node::Leaf(Slot::Lit(v)) => Term::lit(*v),
        Node::Add(a, b) => Node::add(instantiate(a, s)?, instantiate(b, s)?),
        Node::Sub(a, b) => Node::sub(instantiate(a, s)?, instantiate(b, s)?),
        Node::Mul(a, b) => Node::mul(instantiate(a, s)?, instantiate(b, s)?),
        Node::Neg(a) => Node::neg(instantiate(a, s)?),
        Node::Pow(a, e) => Node::pow(instantiate(a, s)?, *e),
    })
}

fn holes_of(p: &Pattern, out: &mut BTreeSet<u8>) {
    match p {
        Node::Leaf(Slot::Hole(h)) => {
            out.insert(*h);
        }
        Node::Leaf(Slot::Lit(_)) => {}
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
            holes_of(a, out);
            holes_of(b, out);
        }
        Node::Neg(a) | Node::Pow(a, _) => holes_of(a, out),
    }
}

impl RewriteRule {
    pub fn is_relation_rule(&self) -> bool {
        matches!(self.body, RuleBody::Relation { .. })
    }

    /// Whether the rule may be used in direction `dir`.
    pub fn allows(&self, dir: Direction) -> bool {
        dir == Direction::Fwd || self.bidirectional
    }

    fn term_sides(&self, dir: Direction) -> Option<(&Pattern, &Pattern)> {
        match (&self.body, dir) {
            (RuleBody::Term { lhs, rhs }, Direction::Fwd) => Some((lhs, rhs)),
            (RuleBody::Term { lhs, rhs }, Direction::Bwd) => Some((rhs, lhs)),
            _ => None,
        }
    }

    /// Rewrite `t` at its root. `None` on no match.
    pub fn rewrite_term(&self, dir: Direction, t: &Term) -> Option<Term> {
        if !self.allows(dir) {
            return None;
        }
        let (from, to) = self.term_sides(dir)?;
        let mut s = vec![None; self.holes.len()];
        if !match_pattern(from, t, &mut s) {
            return None;
        }
        instantiate(to, &s)
    }

    /// Rewrite a whole relation. `None` on no match.
    pub fn rewrite_relation(&self, dir: Direction, r: &Relation) -> Option<Relation> {
        if !self.allows(dir) {
            return None;
        }
        let RuleBody::Relation { lhs, rhs } = &self.body else {
            return None;
        };
        let (from, to) = match dir {
            Direction::Fwd => (lhs, rhs),
            Direction::Bwd => (rhs, lhs),
        };
        if from.kind != r.kind {
            return None;
        }
        let mut s = vec![None; self.holes.len()];
        if !(match_pattern(&from.lhs, &r.lhs, &mut s) && match_pattern(&from.rhs, &r.rhs, &mut s)) {
            return None;
        }
        Some(Relation::new(to.kind, instantiate(&to.lhs, &s)?, instantiate(&to.rhs, &s)?))
    }

    fn side_holes(&self) -> (BTreeSet<u8>, BTreeSet<u8>) {
        let (mut l, mut r) = (BTreeSet::new(), BTreeSet::new());
        match &self.body {
            RuleBody::Term { lhs, rhs } => {
                holes_of(lhs, &mut l);
                holes_of(rhs, &mut r);
            }
            RuleBody::Relation { lhs, rhs } => {
                holes_of(&lhs.lhs, &mut l);
                holes_of(&lhs.rhs, &mut l);
                holes_of(&rhs.lhs, &mut r);
                holes_of(&rhs.rhs, &mut r);
            }
        }
        (l, r)
    }

    fn check_holes(&self) -> Result<(), RuleError> {
        let (l, r) = self.side_holes();
        let ok = if self.bidirectional { l == r } else { r.is_subset(&l) };
        if ok {
            Ok(())
        } else {
            Err(RuleError::HoleMismatch(self.id.clone()))
        }
    }

    /// Randomized substitution test over small integers.
    pub fn check_soundness(&self, trials: usize) -> Result<(), RuleError> {
        let mut state = crate::hash::hash64(&self.id);
        for _ in 0..trials {
            let s: Subst = (0..self.holes.len())
                .map(|_| {
                    state = mix64(state);
                    Some(Term::lit((state % 19) as i64 - 9))
                })
                .collect();
            let sound = match &self.body {
                RuleBody::Term { lhs, rhs } => {
                    let a = instantiate(lhs, &s).and_then(|t| t.eval_ground().ok());
                    let b = instantiate(rhs, &s).and_then(|t| t.eval_ground().ok());
                    a == b
                }
                RuleBody::Relation { lhs, rhs } => {
                    let truth = |p: &RelPattern| -> Option<bool> {
                        let l = instantiate(&p.lhs, &s)?.eval_ground().ok()?;
                        let r = instantiate(&p.rhs, &s)?.eval_ground().ok()?;
                        Some(p.kind.holds(l, r))
                    };
                    truth(lhs) == truth(rhs)
                }
            };
            if !sound {
                return Err(RuleError::Unsound(self.id.clone()));
            }
        }
        Ok(())
    }

    /// Parse a single rule line `id: p <-> q` or `id: p -> q`.
    pub fn parse(text: &str) -> Result<RewriteRule, RuleError> {
        let raw = Parser::new(text, Limits::default())
            .and_then(|mut p| p.rule_line())
            .map_err(|err| RuleError::Parse { line: 1, err })?;
        let mut holes = Vec::new();
        let id = raw.id;
        let body = match (raw.lhs, raw.rhs) {
            (RawSide::Term(l), RawSide::Term(r)) => RuleBody::Term {
                lhs: to_pattern(l, &mut holes, &id)?,
                rhs: to_pattern(r, &mut holes, &id)?,
            },
            (RawSide::Relation(lk, ll, lr), RawSide::Relation(rk, rl, rr)) => RuleBody::Relation {
                lhs: RelPattern { kind: lk, lhs: to_pattern(ll, &mut holes, &id)?, rhs: to_pattern(lr, &mut holes, &id)? },
                rhs: RelPattern { kind: rk, lhs: to_pattern(rl, &mut holes, &id)?, rhs: to_pattern(rr, &mut holes, &id)? },
            },
            _ => return Err(RuleError::MixedScope(id)),
        };
        let rule = RewriteRule { id, holes, body, bidirectional: raw.bidirectional };
        rule.check_holes()?;
        rule.check_soundness(64)?;
        Ok(rule)
    }
}

fn to_pattern(raw: RawTerm, holes: &mut Vec<String>, id: &str) -> Result<Pattern, RuleError> {
    let rec = |t: Box<RawTerm>, holes: &mut Vec<String>| to_pattern(*t, holes, id).map(Box::new);
    Ok(match raw {
        Node::Leaf(RawLeaf::Lit(v)) => Node::Leaf(Slot::Lit(v)),
        Node::Leaf(RawLeaf::Var(_)) => return Err(RuleError::ConcreteVariable(id.into())),
        Node::Leaf(RawLeaf::Hole(name)) => {
            let idx = match holes.iter().position(|h| *h == name) {
                Some(i) => i,
                None => {
                    holes.push(name);
                    holes.len() - 1
                }
            };
            Node::Leaf(Slot::Hole(idx as u8))
        }
        Node::Add(a, b) => Node::Add(rec(a, holes)?, rec(b, holes)?),
        Node::Sub(a, b) => Node::Sub(rec(a, holes)?, rec(b, holes)?),
        Node::Mul(a, b) => Node::Mul(rec(a, holes)?, rec(b, holes)?),
        Node::Neg(a) => Node::Neg(rec(a, holes)?),
        Node::Pow(a, e) => Node::Pow(rec(a, holes)?, e),
    })
}

struct PatternDisplay<'a>(&'a Pattern, &'a [String]);

impl fmt::Display for PatternDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.1;
        fmt_node(self.0, 1, f, &|s: &Slot, f: &mut fmt::Formatter<'_>| match s {
            Slot::Lit(v) => write!(f, "{v}"),
            Slot::Hole(h) => write!(f, "?{}", names[*h as usize]),
        })
    }
}

impl fmt::Display for RewriteRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let arrow = if self.bidirectional { "<->" } else { "->" };
        let h = &self.holes[..];
        match &self.body {
            RuleBody::Term { lhs, rhs } => {
                write!(f, "{}: {} {arrow} {}", self.id, PatternDisplay(lhs, h), PatternDisplay(rhs, h))
            }
            RuleBody::Relation { lhs, rhs } => write!(
                f,
                "{}: {} {} {} {arrow} {} {} {}",
                self.id,
                PatternDisplay(&lhs.lhs, h),
                lhs.kind.symbol(),
                PatternDisplay(&lhs.rhs, h),
                PatternDisplay(&rhs.lhs, h),
                rhs.kind.symbol(),
                PatternDisplay(&rhs.rhs, h)
            ),
        }
    }
}

pub const DEFAULT_RULES: &str = "\
add_comm: ?a + ?b <-> ?b + ?a
mul_comm: ?a * ?b <-> ?b * ?a
add_assoc: ?a + ?b + ?c <-> ?a + (?b + ?c)
mul_assoc: ?a * ?b * ?c <-> ?a * (?b * ?c)
add_zero: ?a + 0 <-> ?a
mul_one: ?a * 1 <-> ?a
eq_comm: ?a = ?b <-> ?b = ?a
sub_intro: ?a - ?b = ?c <-> ?a = ?c + ?b
";

/// An ordered collection of rules with unique ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
}

impl RuleSet {
    pub fn new(rules: Vec<RewriteRule>) -> Result<RuleSet, RuleError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.id.as_str()) {
                return Err(RuleError::Duplicate(r.id.clone()));
            }
        }
        Ok(RuleSet { rules })
    }

    /// One rule per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<RuleSet, RuleError> {
        let mut rules = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let rule = RewriteRule::parse(line).map_err(|e| match e {
                RuleError::Parse { err, .. } => RuleError::Parse { line: i + 1, err },
                other => other,
            })?;
            rules.push(rule);
        }
        RuleSet::new(rules)
    }

    pub fn default_rules() -> RuleSet {
        RuleSet::parse(DEFAULT_RULES).expect("built-in rules are valid")
    }

    /// The rules with the given ids, in the order given.
    pub fn restrict(&self, ids: &[&str]) -> Result<RuleSet, RuleError> {
        let rules = ids
            .iter()
            .map(|id| self.get(id).cloned().ok_or_else(|| RuleError::Unknown((*id).to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        RuleSet::new(rules)
    }

    pub fn get(&self, id: &str) -> Option<&RewriteRule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &RewriteRule> {
        self.rules.iter()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn is_reciprocal(&self) -> bool {
        self.rules.iter().all(|r| r.bidirectional)
    }

    pub fn ids(&self) -> Vec<&str> {
        self.rules.iter().map(|r| r.id.as_str()).collect()
    }

    /// Canonical rule-file text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&r.to_string());
            out.push('\n');
        }
        out
    }
}
