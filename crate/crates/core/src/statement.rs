//! Relations, statements and the language limits they must respect.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::term::{Ident, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelKind {
    Eq,
    Le,
    Lt,
}

impl RelKind {
    pub fn symbol(self) -> &'static str {
        match self {
            RelKind::Eq => "=",
            RelKind::Le => "<=",
            RelKind::Lt => "<",
        }
    }

    pub fn holds(self, a: i128, b: i128) -> bool {
        match self {
            RelKind::Eq => a == b,
            RelKind::Le => a <= b,
            RelKind::Lt => a < b,
        }
    }
}

/// A binary atomic proposition `lhs (=|<=|<) rhs`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Relation {
    pub kind: RelKind,
    pub lhs: Term,
    pub rhs: Term,
}

impl Relation {
    pub fn new(kind: RelKind, lhs: Term, rhs: Term) -> Self {
        Relation { kind, lhs, rhs }
    }

    pub fn eq(lhs: Term, rhs: Term) -> Self {
        Relation::new(RelKind::Eq, lhs, rhs)
    }

    pub fn node_count(&self) -> usize {
        self.lhs.node_count() + self.rhs.node_count()
    }

    pub fn depth(&self) -> usize {
        self.lhs.depth().max(self.rhs.depth())
    }

    pub fn is_ground(&self) -> bool {
        self.lhs.is_ground() && self.rhs.is_ground()
    }

    pub fn collect_vars<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        self.lhs.collect_vars(out);
        self.rhs.collect_vars(out);
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.lhs, self.kind.symbol(), self.rhs)
    }
}

/// A variable with its finite inclusive integer domain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarDecl {
    pub name: Ident,
    pub lo: i64,
    pub hi: i64,
}

impl VarDecl {
    pub fn new(name: &str, lo: i64, hi: i64) -> Self {
        VarDecl { name: name.into(), lo, hi }
    }

    pub fn size(&self) -> u128 {
        (self.hi as i128 - self.lo as i128 + 1).max(0) as u128
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Hypothesis {
    pub name: Ident,
    pub rel: Relation,
}

/// `thm name (vars)* (hyps)* : goal`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Statement {
    pub name: Ident,
    pub vars: Vec<VarDecl>,
    pub hyps: Vec<Hypothesis>,
    pub goal: Relation,
}

impl Statement {
    /// Relations in part order: hypotheses first, goal last.
    pub fn parts(&self) -> impl Iterator<Item = &Relation> {
        self.hyps.iter().map(|h| &h.rel).chain(core::iter::once(&self.goal))
    }

    pub fn node_count(&self) -> usize {
        self.parts().map(Relation::node_count).sum()
    }

    /// Canonical text; equal strings iff structurally equal statements.
    pub fn canonical(&self) -> String {
        alloc::format!("{self}")
    }

    pub fn with_name(&self, name: &str) -> Statement {
        Statement { name: name.into(), ..self.clone() }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "thm {}", self.name)?;
        for v in &self.vars {
            write!(f, " ({}:{}..{})", v.name, v.lo, v.hi)?;
        }
        for h in &self.hyps {
            write!(f, " ({}: {})", h.name, h.rel)?;
        }
        write!(f, " : {}", self.goal)
    }
}

/// Size bounds of the language.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub literal_min: i64,
    pub literal_max: i64,
    pub max_depth: usize,
    pub max_nodes: usize,
    pub max_exponent: u8,
    /// Bound on the domain product enumerated by the truth oracle.
    pub max_assignments: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            literal_min: -1_000_000,
            literal_max: 1_000_000,
            max_depth: 12,
            max_nodes: 64,
            max_exponent: 4,
            max_assignments: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("variable `{0}` is not declared")]
    Undeclared(Ident),
    #[error("variable `{0}` declared twice")]
    DuplicateVar(Ident),
    #[error("empty domain for `{0}`")]
    EmptyDomain(Ident),
    #[error("exponent {0} exceeds the maximum {1}")]
    ExponentTooLarge(u8, u8),
    #[error("literal {0} outside the allowed range")]
    LiteralOutOfRange(i64),
    #[error("term depth {0} exceeds the maximum {1}")]
    TooDeep(usize, usize),
    #[error("term has {0} nodes, more than the maximum {1}")]
    TooLarge(usize, usize),
}

impl Limits {
    pub fn check_term(&self, t: &Term) -> Result<(), ValidationError> {
        let depth = t.depth();
        if depth > self.max_depth {
            return Err(ValidationError::TooDeep(depth, self.max_depth));
        }
        let nodes = t.node_count();
        if nodes > self.max_nodes {
            return Err(ValidationError::TooLarge(nodes, self.max_nodes));
        }
        let (lo, hi, e) = t.literal_extremes();
        if e > self.max_exponent {
            return Err(ValidationError::ExponentTooLarge(e, self.max_exponent));
        }
        if lo < self.literal_min {
            return Err(ValidationError::LiteralOutOfRange(lo));
        }
        if hi > self.literal_max {
            return Err(ValidationError::LiteralOutOfRange(hi));
        }
        Ok(())
    }

    pub fn check_relation(&self, r: &Relation) -> Result<(), ValidationError> {
        self.check_term(&r.lhs)?;
        self.check_term(&r.rhs)
    }

    pub fn check_statement(&self, s: &Statement) -> Result<(), ValidationError> {
        let mut declared = BTreeSet::new();
        for v in &s.vars {
            if !declared.insert(v.name.as_str()) {
                return Err(ValidationError::DuplicateVar(v.name.clone()));
            }
            if v.lo > v.hi {
                return Err(ValidationError::EmptyDomain(v.name.clone()));
            }
        }
        let mut used = BTreeSet::new();
        for r in s.parts() {
            self.check_relation(r)?;
            r.collect_vars(&mut used);
        }
        if let Some(v) = used.iter().find(|v| !declared.contains(*v)) {
            return Err(ValidationError::Undeclared((*v).into()));
        }
        Ok(())
    }
}
