//! Rewriting categories for a small decidable theorem language.
//!
//! Statements over bounded integer arithmetic are the objects; arrows are
//! sequences of semantics-preserving rule applications. On top of that sit
//! stochastic provers, the proof-distribution pushforward along arrows, and
//! the `(K, N)` rewriting ensemble together with its closed-form success
//! formulas and PASS@k estimators.
//!
//! The crate is `no_std` (with `alloc`); file formats, experiments and the
//! command line live in the companion `rwcat` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod category;
pub mod corpus;
pub mod ensemble;
pub mod functor;
pub mod hash;
pub mod parse;
pub mod passk;
pub mod prover;
pub mod rules;
pub mod sampler;
pub mod statement;
pub mod tactic;
pub mod term;
pub mod truth;

pub use category::{Arrow, Lemma, RewriteError, RewritingCategory, RuleApplication, Target};
pub use parse::{parse_statement, ParseError};
pub use rules::{RewriteRule, RuleSet};
pub use statement::{Hypothesis, Limits, RelKind, Relation, Statement, VarDecl};
pub use tactic::{Direction, Goal, Position, ProofState, Side, Tactic, TacticSeq};
pub use term::{Atom, Node, Term};
pub use truth::decide_truth;
