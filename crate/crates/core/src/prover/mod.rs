//! Stochastic provers over fixed-length tactic sequences.
//!
//! Every prover samples exactly `L` tactics. Once the proof state is
//! `Empty` (or `Error`) the only menu entry is `Skip`, so the sampled
//! sequences of length `L` form a product space and all exact quantities
//! below are finite sums.

mod policy;
mod search;
mod synthetic;

use alloc::boxed::Box;
use alloc::string::String;

use rand::RngCore;

use crate::category::RewritingCategory;
use crate::functor::{DistributionError, ProofDistribution};
use crate::statement::Statement;
use crate::tactic::{ProofState, Tactic, TacticSeq};

pub use policy::{FeatureSource, MenuEntry, Policy, PolicyProver, TextFeatures};
pub use search::{find_proof, SearchOutcome};
pub use synthetic::{SyntheticMode, SyntheticProver};

/// Default work bound for exact computations.
pub const DEFAULT_BUDGET: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProverError {
    #[error("exact computation exceeds the budget of {0}")]
    Budget(usize),
    #[error("this prover has no enumerable proof distribution")]
    NotEnumerable,
    #[error(transparent)]
    Distribution(#[from] DistributionError),
}

pub trait Prover: Sync {
    fn label(&self) -> String;

    /// Number of tactics per sampled sequence.
    fn length(&self) -> usize;

    /// Per-statement state (menus, caches) for `root`.
    fn session<'a>(&'a self, category: &'a RewritingCategory, root: &Statement) -> Box<dyn ProverSession + 'a>;
}

pub trait ProverSession {
    fn root(&self) -> &Statement;

    /// A sequence of exactly `length` tactics.
    fn sample_proof(&mut self, length: usize, rng: &mut dyn RngCore) -> TacticSeq;

    /// Probability that a sampled sequence of `length` tactics proves the root.
    fn success_probability(&mut self, length: usize, budget: usize) -> Result<f64, ProverError>;

    /// Exact law of the sampled sequences of `length` tactics.
    fn proof_distribution(&mut self, length: usize, budget: usize) -> Result<ProofDistribution, ProverError>;

    /// The weighted tactic menu at `state`.
    fn tactic_menu(&mut self, state: &ProofState) -> alloc::vec::Vec<(Tactic, f64)>;
}

/// Convenience wrapper around a session.
pub fn success_probability_exact(prover: &dyn Prover, category: &RewritingCategory, t: &Statement) -> Result<f64, ProverError> {
    prover.session(category, t).success_probability(prover.length(), DEFAULT_BUDGET)
}

pub fn proof_distribution(
    prover: &dyn Prover,
    category: &RewritingCategory,
    t: &Statement,
    length: usize,
) -> Result<ProofDistribution, ProverError> {
    prover.session(category, t).proof_distribution(length, DEFAULT_BUDGET)
}

/// Monte Carlo success estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub successes: u64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Estimate {
        let p = successes as f64 / trials as f64;
        Estimate { mean: p, stderr: libm::sqrt(p * (1.0 - p) / trials as f64), successes, trials }
    }
}

/// Mean of `n` verified samples. `n` must be positive.
pub fn success_probability_mc(
    session: &mut dyn ProverSession,
    category: &RewritingCategory,
    length: usize,
    n: u64,
    rng: &mut dyn RngCore,
) -> Estimate {
    assert!(n >= 1, "at least one attempt is required");
    let root = session.root().clone();
    let mut hits = 0u64;
    for _ in 0..n {
        let p = session.sample_proof(length, rng);
        if category.verify_proof(&root, &p) {
            hits += 1;
        }
    }
    Estimate::from_counts(hits, n)
}
