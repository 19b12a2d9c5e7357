//! A prover with a prescribed success rate per statement.
//!
//! In hash mode the nominal rate is `g(hash64(text) ^ seed)` where `g`
//! applies the SplitMix64 finalizer and scales the top 53 bits to
//! `[0, 1)`; in table mode it is looked up by
//! canonical text (absent statements get 0). A sampled attempt returns a
//! real proof found by bounded search with that probability and `Skip`s
//! otherwise, so the realized rate is the nominal rate when a proof of
//! at most `L` tactics exists and 0 when none does.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::search::{find_proof, SearchOutcome};
use super::{Prover, ProverError, ProverSession};
use crate::category::RewritingCategory;
use crate::functor::ProofDistribution;
use crate::hash::{hash64, mix64, unit_interval};
use crate::statement::Statement;
use crate::tactic::{ProofState, Tactic, TacticSeq};

#[derive(Clone, Debug, PartialEq)]
pub enum SyntheticMode {
    Hash { seed: u64 },
    Table(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticProver {
    pub mode: SyntheticMode,
    pub length: usize,
    pub search_budget: usize,
}

impl SyntheticProver {
    pub fn hashed(seed: u64, length: usize) -> Self {
        SyntheticProver { mode: SyntheticMode::Hash { seed }, length, search_budget: 20_000 }
    }

    pub fn table(table: BTreeMap<String, f64>, length: usize) -> Self {
        SyntheticProver { mode: SyntheticMode::Table(table), length, search_budget: 20_000 }
    }

    /// The prescribed rate for `t`, before the provability gate.
    pub fn nominal(&self, t: &Statement) -> f64 {
        let text = t.canonical();
        match &self.mode {
            SyntheticMode::Hash { seed } => unit_interval(mix64(hash64(&text) ^ seed)),
            SyntheticMode::Table(m) => m.get(&text).copied().unwrap_or(0.0).clamp(0.0, 1.0),
        }
    }
}

impl Prover for SyntheticProver {
    fn label(&self) -> String {
        match self.mode {
            SyntheticMode::Hash { .. } => "synthetic-hash".into(),
            SyntheticMode::Table(_) => "synthetic-table".into(),
        }
    }

    fn length(&self) -> usize {
        self.length
    }

    fn session<'a>(&'a self, category: &'a RewritingCategory, root: &Statement) -> Box<dyn ProverSession + 'a> {
        let witness = match find_proof(category, root, self.length, self.search_budget) {
            SearchOutcome::Found(p) => Some(p),
            _ => None,
        };
        Box::new(SyntheticSession { root: root.clone(), rate: self.nominal(root), witness })
    }
}

struct SyntheticSession {
    root: Statement,
    rate: f64,
    witness: Option<TacticSeq>,
}

fn padded(seq: &[Tactic], length: usize) -> TacticSeq {
    let mut v: Vec<Tactic> = seq.iter().take(length).cloned().collect();
    v.resize(length, Tactic::Skip);
    TacticSeq(v)
}

impl ProverSession for SyntheticSession {
    fn root(&self) -> &Statement {
        &self.root
    }

    fn sample_proof(&mut self, length: usize, rng: &mut dyn RngCore) -> TacticSeq {
        let u: f64 = rng.random();
        match &self.witness {
            Some(w) if u < self.rate && w.len() <= length => padded(&w.0, length),
            _ => padded(&[], length),
        }
    }

    fn success_probability(&mut self, length: usize, _budget: usize) -> Result<f64, ProverError> {
        Ok(match &self.witness {
            Some(w) if w.len() <= length => self.rate,
            _ => 0.0,
        })
    }

    fn proof_distribution(&mut self, _length: usize, _budget: usize) -> Result<ProofDistribution, ProverError> {
        Err(ProverError::NotEnumerable)
    }

    fn tactic_menu(&mut self, _state: &ProofState) -> Vec<(Tactic, f64)> {
        alloc::vec![(Tactic::Skip, 1.0)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_statement;
    use crate::rules::RuleSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hash_rate_is_deterministic_and_in_range() {
        let p = SyntheticProver::hashed(3, 4);
        let t = parse_statement("thm a (x:0..3) (h0: x + 1 = 3) : 3 = x + 1").unwrap();
        let g = p.nominal(&t);
        assert_eq!(g, SyntheticProver::hashed(3, 4).nominal(&t));
        assert!((0.0..1.0).contains(&g));
        assert_ne!(g, SyntheticProver::hashed(4, 4).nominal(&t));
        let c = RewritingCategory::new(RuleSet::default_rules());
        assert_eq!(p.session(&c, &t).success_probability(4, 0).unwrap(), g);
    }

    #[test]
    fn table_mode_and_unprovable_statements() {
        let c = RewritingCategory::new(RuleSet::default_rules());
        let t = parse_statement("thm g : 2 * 3 = 6").unwrap();
        let mut m = BTreeMap::new();
        m.insert(t.canonical(), 1.0);
        let p = SyntheticProver::table(m, 2);
        let mut s = p.session(&c, &t);
        assert_eq!(s.success_probability(2, 0).unwrap(), 1.0);
        let proof = s.sample_proof(2, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(c.verify_proof(&t, &proof));
        let u = parse_statement("thm n (x:0..3) : x <= 3").unwrap();
        let mut m = BTreeMap::new();
        m.insert(u.canonical(), 1.0);
        let p = SyntheticProver::table(m, 2);
        assert_eq!(p.session(&c, &u).success_probability(2, 0).unwrap(), 0.0);
        assert!(matches!(p.session(&c, &u).proof_distribution(2, 0), Err(ProverError::NotEnumerable)));
    }
}
