//! Softmax menu provers: a sequential next-tactic prover whose weights
//! read the current proof state, and a text-conditioned prover whose
//! weights read the surface form of the original statement.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::rc::Rc;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::{Prover, ProverError, ProverSession};
use crate::category::RewritingCategory;
use crate::functor::ProofDistribution;
use crate::hash::{hash64, mix64, unit_interval};
use crate::parse::statement_tokens;
use crate::statement::{Relation, Statement};
use crate::tactic::{ProofState, Tactic, TacticKind, TacticSeq};
use crate::term::{Node, Term};

/// Where the feature-hashed part of the logits is read from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    /// The current proof state.
    State,
    /// The text of the statement the session was opened on.
    Root,
}

/// Menu weighting shared by both softmax provers.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub kind_enabled: [bool; 8],
    pub kind_weights: [f64; 8],
    pub rule_weights: BTreeMap<String, f64>,
    pub feature_amplitude: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for Policy {
    fn default() -> Self {
        let mut kind_weights = [0.0; 8];
        kind_weights[TacticKind::CloseRefl.index()] = 3.0;
        kind_weights[TacticKind::CloseEval.index()] = 3.0;
        kind_weights[TacticKind::CloseHyp.index()] = 3.0;
        kind_weights[TacticKind::Fold.index()] = 1.0;
        kind_weights[TacticKind::UseHyp.index()] = 1.0;
        Policy {
            kind_enabled: [true; 8],
            kind_weights,
            rule_weights: BTreeMap::new(),
            feature_amplitude: 0.75,
            epsilon: 1e-6,
            seed: 0,
        }
    }
}

impl Policy {
    /// Only the given kinds, all with weight zero.
    pub fn only(kinds: &[TacticKind]) -> Policy {
        let mut kind_enabled = [false; 8];
        for k in kinds {
            kind_enabled[k.index()] = true;
        }
        Policy { kind_enabled, kind_weights: [0.0; 8], feature_amplitude: 0.0, ..Policy::default() }
    }
}

/// Hashed surface features of a statement: operator counts per side,
/// the leading token of each side, and a fingerprint of hypothesis order.
#[derive(Clone, Debug, PartialEq)]
pub struct TextFeatures(pub Vec<(u64, f64)>);

fn op_counts(t: &Term, c: &mut [u32; 5]) {
    match t {
        Node::Leaf(_) => {}
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) => {
            c[match t {
                Node::Add(..) => 0,
                Node::Sub(..) => 1,
                _ => 2,
            }] += 1;
            op_counts(a, c);
            op_counts(b, c);
        }
        Node::Neg(a) => {
            c[3] += 1;
            op_counts(a, c);
        }
        Node::Pow(a, _) => {
            c[4] += 1;
            op_counts(a, c);
        }
    }
}

fn leading_token(t: &Term) -> String {
    let s = t.to_string();
    s.split(' ').next().unwrap_or("").to_string()
}

impl TextFeatures {
    pub fn of(stmt: &Statement) -> TextFeatures {
        let mut out = Vec::new();
        let n = stmt.hyps.len();
        let parts: Vec<(String, &Relation)> = stmt
            .hyps
            .iter()
            .enumerate()
            .map(|(i, h)| (alloc::format!("hyp{i}"), &h.rel))
            .chain(core::iter::once(("goal".to_string(), &stmt.goal)))
            .collect();
        for (label, rel) in &parts {
            for (side, t) in [("lhs", &rel.lhs), ("rhs", &rel.rhs)] {
                let mut c = [0u32; 5];
                op_counts(t, &mut c);
                for (op, count) in ["add", "sub", "mul", "neg", "pow"].iter().zip(c) {
                    if count > 0 {
                        out.push((hash64(&alloc::format!("ops/{label}/{side}/{op}")), count as f64));
                    }
                }
                out.push((hash64(&alloc::format!("lead/{label}/{side}/{}", leading_token(t))), 1.0));
            }
            out.push((hash64(&alloc::format!("rel/{label}/{}", rel.kind.symbol())), 1.0));
        }
        if n > 0 {
            let order: Vec<String> = stmt.hyps.iter().map(|h| h.rel.to_string()).collect();
            out.push((hash64(&alloc::format!("order/{}", order.join("|"))), 1.0));
        }
        let toks = statement_tokens(stmt);
        out.push((hash64("length"), toks.len() as f64 / 16.0));
        TextFeatures(out)
    }

    fn score(&self, seed: u64, tactic_key: u64) -> f64 {
        let mut s = 0.0;
        for &(f, v) in &self.0 {
            let sign = 2.0 * unit_interval(mix64(f ^ tactic_key ^ seed)) - 1.0;
            s += v * sign;
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MenuEntry {
    pub tactic: Tactic,
    pub prob: f64,
    pub next: ProofState,
}

/// A softmax prover; see [`FeatureSource`] for the two flavours.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyProver {
    pub name: String,
    pub source: FeatureSource,
    pub policy: Policy,
    pub length: usize,
}

impl PolicyProver {
    pub fn sequential(length: usize) -> PolicyProver {
        PolicyProver { name: "sequential".into(), source: FeatureSource::State, policy: Policy::default(), length }
    }

    pub fn text_conditioned(length: usize) -> PolicyProver {
        PolicyProver { name: "text".into(), source: FeatureSource::Root, policy: Policy::default(), length }
    }

    pub fn with_policy(mut self, policy: Policy) -> PolicyProver {
        self.policy = policy;
        self
    }
}

impl Prover for PolicyProver {
    fn label(&self) -> String {
        self.name.clone()
    }

    fn length(&self) -> usize {
        self.length
    }

    fn session<'a>(&'a self, category: &'a RewritingCategory, root: &Statement) -> Box<dyn ProverSession + 'a> {
        let root_features = match self.source {
            FeatureSource::Root => Some(TextFeatures::of(root)),
            FeatureSource::State => None,
        };
        Box::new(PolicySession {
            prover: self,
            category,
            root: root.clone(),
            root_features,
            menus: BTreeMap::new(),
            tactic_keys: BTreeMap::new(),
        })
    }
}

struct PolicySession<'a> {
    prover: &'a PolicyProver,
    category: &'a RewritingCategory,
    root: Statement,
    root_features: Option<TextFeatures>,
    menus: BTreeMap<ProofState, Rc<Vec<MenuEntry>>>,
    tactic_keys: BTreeMap<Tactic, u64>,
}

impl PolicySession<'_> {
    fn menu(&mut self, state: &ProofState) -> Rc<Vec<MenuEntry>> {
        if let Some(m) = self.menus.get(state) {
            return m.clone();
        }
        let m = Rc::new(self.build_menu(state));
        self.menus.insert(state.clone(), m.clone());
        m
    }

    fn build_menu(&mut self, state: &ProofState) -> Vec<MenuEntry> {
        let skip_only = || alloc::vec![MenuEntry { tactic: Tactic::Skip, prob: 1.0, next: state.clone() }];
        if !matches!(state, ProofState::Open(_)) {
            return skip_only();
        }
        let enabled = &self.prover.policy.kind_enabled;
        let valid: Vec<(Tactic, ProofState)> =
            self.category.enumerate_tactics(state).into_iter().filter(|(t, _)| enabled[t.kind().index()]).collect();
        if valid.is_empty() {
            return skip_only();
        }
        let probs = self.probabilities(state, valid.iter().map(|(t, _)| t));
        valid.into_iter().zip(probs).map(|((tactic, next), prob)| MenuEntry { tactic, prob, next }).collect()
    }

    /// Menu probabilities of `tactics`, the valid enabled tactics at `state`.
    fn probabilities<'t>(&mut self, state: &ProofState, tactics: impl ExactSizeIterator<Item = &'t Tactic>) -> Vec<f64> {
        let policy = &self.prover.policy;
        let state_features = match (&self.root_features, state) {
            (None, ProofState::Open(g)) => Some(TextFeatures::of(&g.decompile("state"))),
            _ => None,
        };
        let features = state_features.as_ref().or(self.root_features.as_ref()).expect("one feature source");
        let n = tactics.len() as f64;
        let logits: Vec<f64> = tactics
            .map(|t| {
                let key = match self.tactic_keys.get(t) {
                    Some(&k) => k,
                    None => *self.tactic_keys.entry(t.clone()).or_insert_with(|| hash64(&t.to_string())),
                };
                let rule = t.rule().and_then(|r| policy.rule_weights.get(r)).copied().unwrap_or(0.0);
                policy.kind_weights[t.kind().index()] + rule + policy.feature_amplitude * features.score(policy.seed, key)
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| libm::exp(l - max)).collect();
        let z: f64 = exps.iter().sum();
        let eps = policy.epsilon;
        let raw: Vec<f64> = exps.iter().map(|e| (1.0 - eps) * e / z + eps / n).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    /// Success with one tactic left: the mass of the closing tactics.
    fn last_step(&mut self, state: &ProofState) -> f64 {
        if let Some(m) = self.menus.get(state) {
            return m.iter().filter(|e| e.next == ProofState::Empty).map(|e| e.prob).sum();
        }
        let enabled = &self.prover.policy.kind_enabled;
        let valid: Vec<Tactic> = self.category.valid_tactics(state).into_iter().filter(|t| enabled[t.kind().index()]).collect();
        if valid.is_empty() {
            return 0.0;
        }
        let probs = self.probabilities(state, valid.iter());
        let mut acc = 0.0;
        for (t, p) in valid.iter().zip(probs) {
            // Valid closing tactics always close.
            if matches!(t, Tactic::CloseRefl | Tactic::CloseEval | Tactic::CloseHyp(_)) {
                acc += p;
            }
        }
        acc
    }

    fn success(&mut self, state: &ProofState, remaining: usize, memo: &mut BTreeMap<(ProofState, usize), f64>, budget: usize) -> Result<f64, ProverError> {
        match state {
            ProofState::Empty => return Ok(1.0),
            ProofState::Error => return Ok(0.0),
            ProofState::Open(_) if remaining == 0 => return Ok(0.0),
            ProofState::Open(_) => {}
        }
        let key = (state.clone(), remaining);
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        if memo.len() >= budget {
            return Err(ProverError::Budget(budget));
        }
        let acc = if remaining == 1 {
            self.last_step(state)
        } else {
            let menu = self.menu(state);
            let mut acc = 0.0;
            for e in menu.iter() {
                acc += e.prob * self.success(&e.next, remaining - 1, memo, budget)?;
            }
            acc
        };
        memo.insert(key, acc);
        Ok(acc)
    }

    fn enumerate(
        &mut self,
        state: &ProofState,
        remaining: usize,
        prefix: &mut Vec<Tactic>,
        mass: f64,
        out: &mut BTreeMap<TacticSeq, f64>,
        budget: usize,
    ) -> Result<(), ProverError> {
        if remaining == 0 {
            if out.len() >= budget {
                return Err(ProverError::Budget(budget));
            }
            out.insert(TacticSeq(prefix.clone()), mass);
            return Ok(());
        }
        let menu = self.menu(state);
        for e in menu.iter() {
            prefix.push(e.tactic.clone());
            self.enumerate(&e.next, remaining - 1, prefix, mass * e.prob, out, budget)?;
            prefix.pop();
        }
        Ok(())
    }
}

impl ProverSession for PolicySession<'_> {
    fn root(&self) -> &Statement {
        &self.root
    }

    fn sample_proof(&mut self, length: usize, rng: &mut dyn RngCore) -> TacticSeq {
        let mut state = ProofState::compile(&self.root);
        let mut out = Vec::with_capacity(length);
        for _ in 0..length {
            let menu = self.menu(&state);
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut pick = menu.len() - 1;
            for (i, e) in menu.iter().enumerate() {
                acc += e.prob;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            out.push(menu[pick].tactic.clone());
            state = menu[pick].next.clone();
        }
        TacticSeq(out)
    }

    fn success_probability(&mut self, length: usize, budget: usize) -> Result<f64, ProverError> {
        let mut memo = BTreeMap::new();
        let start = ProofState::compile(&self.root);
        self.success(&start, length, &mut memo, budget)
    }

    fn proof_distribution(&mut self, length: usize, budget: usize) -> Result<ProofDistribution, ProverError> {
        let mut out = BTreeMap::new();
        let start = ProofState::compile(&self.root);
        self.enumerate(&start, length, &mut Vec::new(), 1.0, &mut out, budget)?;
        Ok(ProofDistribution::new(length, out)?)
    }

    fn tactic_menu(&mut self, state: &ProofState) -> Vec<(Tactic, f64)> {
        self.menu(state).iter().map(|e| (e.tactic.clone(), e.prob)).collect()
    }
}
