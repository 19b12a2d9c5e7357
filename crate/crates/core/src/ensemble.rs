//! The (K, N) rewriting ensemble: running it, and its exact expected
//! success under explicit subset laws and under an i.i.d. prior.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::category::{Arrow, RewriteError, RewritingCategory};
use crate::hash::derive_seed;
use crate::passk::binomial;
use crate::prover::{Prover, ProverSession};
use crate::sampler::{SamplerError, VariantSampler};
use crate::statement::Statement;
use crate::tactic::TacticSeq;

pub const EXACT_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EnsembleError {
    #[error("need 1 <= K <= N, got K = {k}, N = {n}")]
    Budget { k: usize, n: usize },
    #[error("{0} does not divide {1}")]
    NotDivisor(usize, usize),
    #[error("K = {0} exceeds K' = {1}")]
    Order(usize, usize),
    #[error("prior weights must be positive and sum to 1, values in [0, 1]")]
    BadPrior,
    #[error("subset index out of range")]
    BadSubset,
    #[error("too many subsets to enumerate")]
    TooMany,
    #[error("lifted proof does not verify the seed")]
    Lift,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    /// Give the `N - K*floor(N/K)` leftover attempts to the first variant.
    pub leftover_to_first: bool,
}

impl EnsembleConfig {
    pub fn new(k: usize, n: usize, seed: u64) -> Result<Self, EnsembleError> {
        if k == 0 || k > n {
            return Err(EnsembleError::Budget { k, n });
        }
        Ok(EnsembleConfig { k, n, seed, leftover_to_first: false })
    }

    pub fn per_variant(&self) -> usize {
        self.n / self.k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantRecord {
    pub statement: Statement,
    pub arrow: Arrow,
    pub attempts: usize,
    pub successes: usize,
    /// First successful attempt, lifted to the seed.
    pub lifted: Option<TacticSeq>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleOutcome {
    pub seed: Statement,
    pub variants: Vec<VariantRecord>,
    pub proof: Option<TacticSeq>,
}

impl EnsembleOutcome {
    pub fn success(&self) -> bool {
        self.proof.is_some()
    }
}

/// Runs ensembles for one prover while caching its per-statement sessions.
pub struct EnsembleRunner<'a> {
    pub category: &'a RewritingCategory,
    pub prover: &'a dyn Prover,
    sessions: BTreeMap<String, Box<dyn ProverSession + 'a>>,
}

impl<'a> EnsembleRunner<'a> {
    pub fn new(category: &'a RewritingCategory, prover: &'a dyn Prover) -> Self {
        EnsembleRunner { category, prover, sessions: BTreeMap::new() }
    }

    fn session(&mut self, t: &Statement) -> &mut Box<dyn ProverSession + 'a> {
        let (cat, prover) = (self.category, self.prover);
        self.sessions.entry(t.canonical()).or_insert_with(|| prover.session(cat, t))
    }

    /// Sample `K` variants once, spend `floor(N/K)` attempts on each with
    /// independent streams keyed by (seed, variant, attempt), and lift the
    /// first success back to `seed`.
    pub fn run(&mut self, seed: &Statement, sampler: &dyn VariantSampler, cfg: &EnsembleConfig) -> Result<EnsembleOutcome, EnsembleError> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[0]));
        let set = sampler.sample(seed, cfg.k, &mut rng)?;
        let base = cfg.per_variant();
        let leftover = cfg.n - base * cfg.k;
        let length = self.prover.length();
        let mut variants = Vec::with_capacity(set.len());
        let mut proof = None;
        for (i, v) in set.variants.into_iter().enumerate() {
            let attempts = if cfg.leftover_to_first && i == 0 { base + leftover } else { base };
            let mut successes = 0;
            let mut lifted = None;
            for j in 0..attempts {
                let mut stream = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[1, i as u64, j as u64]));
                let p = self.session(&v.statement).sample_proof(length, &mut stream);
                if self.category.verify_proof(&v.statement, &p) {
                    successes += 1;
                    if lifted.is_none() {
                        let l = self.category.lift_proof(&v.arrow, &p).map_err(|_| EnsembleError::Lift)?;
                        if !self.category.verify_proof(seed, &l) {
                            return Err(EnsembleError::Lift);
                        }
                        lifted = Some(l);
                    }
                }
            }
            if proof.is_none() {
                proof = lifted.clone();
            }
            variants.push(VariantRecord { statement: v.statement, arrow: v.arrow, attempts, successes, lifted });
        }
        Ok(EnsembleOutcome { seed: seed.clone(), variants, proof })
    }
}

/// One-shot [`EnsembleRunner::run`].
pub fn run_ensemble(
    category: &RewritingCategory,
    prover: &dyn Prover,
    seed: &Statement,
    sampler: &dyn VariantSampler,
    cfg: &EnsembleConfig,
) -> Result<EnsembleOutcome, EnsembleError> {
    EnsembleRunner::new(category, prover).run(seed, sampler, cfg)
}

/// `x^e` by repeated squaring.
pub fn powu(mut x: f64, mut e: u64) -> f64 {
    let mut acc = 1.0;
    while e > 0 {
        if e & 1 == 1 {
            acc *= x;
        }
        x *= x;
        e >>= 1;
    }
    acc
}

/// Law of the sampled K-subset of a finite class.
#[derive(Clone, Debug, PartialEq)]
pub enum SubsetLaw {
    /// Uniform over K-subsets.
    Uniform,
    /// Member `seed` always, plus a uniform (K-1)-subset of the rest.
    Anchored(usize),
    /// Explicit subsets with probabilities.
    Explicit(Vec<(Vec<usize>, f64)>),
}

/// All K-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `e_k(f) / C(n, k)` for every `k <= kmax`, via the normalized recurrence
/// `m_k(j) = ((j-k)/j) m_k(j-1) + (k/j) f_j m_{k-1}(j-1)`.
pub fn normalized_elementary(f: &[f64], kmax: usize) -> Vec<f64> {
    let mut m = alloc::vec![0.0; kmax + 1];
    m[0] = 1.0;
    for (j1, &fj) in f.iter().enumerate() {
        let j = (j1 + 1) as f64;
        for k in (1..=kmax.min(j1 + 1)).rev() {
            let kf = k as f64;
            let keep = if k <= j1 { ((j - kf) / j) * m[k] } else { 0.0 };
            m[k] = keep + (kf / j) * fj * m[k - 1];
        }
    }
    m
}

/// `1 - E[prod_{i in S} (1 - s_i)^{floor(N/K)}]` for the sampled set `S`.
/// Sets smaller than `K` (the whole class when `K >= n`) are used as is.
pub fn expected_success_exact(success: &[f64], law: &SubsetLaw, k: usize, n_budget: usize) -> Result<f64, EnsembleError> {
    if k == 0 || k > n_budget {
        return Err(EnsembleError::Budget { k, n: n_budget });
    }
    let q = (n_budget / k) as u64;
    let f: Vec<f64> = success.iter().map(|s| powu(1.0 - s, q)).collect();
    let n = f.len();
    let miss = match law {
        SubsetLaw::Uniform => {
            let kk = k.min(n);
            normalized_elementary(&f, kk)[kk]
        }
        SubsetLaw::Anchored(a) => {
            if *a >= n {
                return Err(EnsembleError::BadSubset);
            }
            let rest: Vec<f64> = f.iter().enumerate().filter(|(i, _)| i != a).map(|(_, &x)| x).collect();
            let kk = (k - 1).min(rest.len());
            f[*a] * normalized_elementary(&rest, kk)[kk]
        }
        SubsetLaw::Explicit(sets) => {
            let mut acc = 0.0;
            for (set, w) in sets {
                let mut prod = 1.0;
                for &i in set {
                    prod *= *f.get(i).ok_or(EnsembleError::BadSubset)?;
                }
                acc += w * prod;
            }
            acc
        }
    };
    Ok(1.0 - miss)
}

/// The explicit form of a law, by enumeration.
pub fn enumerate_law(n: usize, law: &SubsetLaw, k: usize, max_sets: u128) -> Result<Vec<(Vec<usize>, f64)>, EnsembleError> {
    match law {
        SubsetLaw::Explicit(v) => Ok(v.clone()),
        SubsetLaw::Uniform => {
            let kk = k.min(n);
            let total = binomial(n as u64, kk as u64).ok_or(EnsembleError::TooMany)?;
            if total > max_sets {
                return Err(EnsembleError::TooMany);
            }
            let w = 1.0 / total as f64;
            Ok(k_subsets(n, kk).into_iter().map(|s| (s, w)).collect())
        }
        SubsetLaw::Anchored(a) => {
            let others: Vec<usize> = (0..n).filter(|i| i != a).collect();
            let kk = (k - 1).min(others.len());
            let total = binomial(others.len() as u64, kk as u64).ok_or(EnsembleError::TooMany)?;
            if total > max_sets {
                return Err(EnsembleError::TooMany);
            }
            let w = 1.0 / total as f64;
            Ok(k_subsets(others.len(), kk)
                .into_iter()
                .map(|s| {
                    let mut set = alloc::vec![*a];
                    set.extend(s.into_iter().map(|i| others[i]));
                    (set, w)
                })
                .collect())
        }
    }
}

/// Discrete distribution of per-variant success probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Prior {
    atoms: Vec<(f64, f64)>,
}

impl Prior {
    /// `(value, weight)` atoms; weights positive and summing to 1.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Prior, EnsembleError> {
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let ok = !atoms.is_empty()
            && atoms.iter().all(|&(v, w)| (0.0..=1.0).contains(&v) && w > 0.0)
            && libm::fabs(total - 1.0) <= EXACT_TOLERANCE;
        if ok {
            Ok(Prior { atoms })
        } else {
            Err(EnsembleError::BadPrior)
        }
    }

    pub fn point(s: f64) -> Result<Prior, EnsembleError> {
        Prior::new(alloc::vec![(s, 1.0)])
    }

    pub fn uniform(values: &[f64]) -> Result<Prior, EnsembleError> {
        let w = 1.0 / values.len() as f64;
        Prior::new(values.iter().map(|&v| (v, w)).collect())
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn is_constant(&self) -> bool {
        self.atoms.iter().all(|a| a.0 == self.atoms[0].0)
    }

    /// `E[(1 - S)^e]`.
    pub fn miss_moment(&self, e: u64) -> f64 {
        self.atoms.iter().map(|&(v, w)| w * powu(1.0 - v, e)).sum()
    }

    /// `E[(1 - S)^{floor(N/K)}]^K`.
    pub fn ensemble_miss(&self, k: usize, n: usize) -> Result<f64, EnsembleError> {
        if k == 0 || k > n {
            return Err(EnsembleError::Budget { k, n });
        }
        Ok(powu(self.miss_moment((n / k) as u64), k as u64))
    }
}

/// `1 - E[(1 - S)^{floor(N/K)}]^K` for i.i.d. per-variant rates.
pub fn prior_expected_success(prior: &Prior, k: usize, n: usize) -> Result<f64, EnsembleError> {
    Ok(1.0 - prior.ensemble_miss(k, n)?)
}

pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|&d| n.is_multiple_of(d)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HolderReport {
    /// `E[X^{N/K'}]^{K'}`
    pub lhs: f64,
    /// `E[X^{N/K}]^K`
    pub rhs: f64,
    pub pass: bool,
    /// Strict inequality is predicted.
    pub strict_expected: bool,
    pub strict: bool,
}

/// `E[X^{N/K'}]^{K'} <= E[X^{N/K}]^K` for `X = 1 - S`, divisors `K <= K'`.
pub fn check_holder(prior: &Prior, n: usize, k: usize, k2: usize) -> Result<HolderReport, EnsembleError> {
    for d in [k, k2] {
        if d == 0 || !n.is_multiple_of(d) {
            return Err(EnsembleError::NotDivisor(d, n));
        }
    }
    if k > k2 {
        return Err(EnsembleError::Order(k, k2));
    }
    let lhs = prior.ensemble_miss(k2, n)?;
    let rhs = prior.ensemble_miss(k, n)?;
    Ok(HolderReport {
        lhs,
        rhs,
        pass: lhs <= rhs + EXACT_TOLERANCE,
        strict_expected: !prior.is_constant() && k < k2,
        strict: lhs < rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_prior_values() {
        let p = Prior::uniform(&[0.0, 1.0]).unwrap();
        assert_eq!(prior_expected_success(&p, 1, 4).unwrap(), 0.5);
        assert_eq!(prior_expected_success(&p, 4, 4).unwrap(), 0.9375);
        let point = Prior::point(0.3).unwrap();
        let v = prior_expected_success(&point, 3, 7).unwrap();
        assert!((v - (1.0 - 0.7f64.powi(6))).abs() < 1e-15);
    }

    #[test]
    fn holder_cases() {
        let p = Prior::uniform(&[0.1, 0.9]).unwrap();
        let r = check_holder(&p, 12, 2, 6).unwrap();
        assert!(r.pass && r.strict && r.strict_expected);
        let same = check_holder(&p, 12, 3, 3).unwrap();
        assert_eq!(same.lhs, same.rhs);
        let c = Prior::point(0.4).unwrap();
        for (a, b) in [(1, 2), (2, 4), (3, 12)] {
            let r = check_holder(&c, 12, a, b).unwrap();
            assert!(r.pass && !r.strict_expected);
            assert!((r.lhs - r.rhs).abs() < 1e-15);
        }
        assert!(check_holder(&p, 12, 5, 6).is_err());
        assert!(check_holder(&p, 12, 6, 2).is_err());
    }

    #[test]
    fn half_half_class() {
        let v = expected_success_exact(&[0.5, 0.5], &SubsetLaw::Uniform, 2, 4).unwrap();
        assert_eq!(v, 0.9375);
        assert_eq!(expected_success_exact(&[1.0, 1.0, 1.0], &SubsetLaw::Uniform, 2, 4).unwrap(), 1.0);
    }

    #[test]
    fn closed_forms_match_enumeration() {
        let s = [0.05, 0.3, 0.7, 0.2, 0.9, 0.0];
        for k in 1..=6 {
            for n in [k, 2 * k, 3 * k + 1] {
                for law in [SubsetLaw::Uniform, SubsetLaw::Anchored(2)] {
                    let closed = expected_success_exact(&s, &law, k, n).unwrap();
                    let sets = enumerate_law(s.len(), &law, k, 1000).unwrap();
                    let brute = expected_success_exact(&s, &SubsetLaw::Explicit(sets), k, n).unwrap();
                    assert!((closed - brute).abs() < 1e-12, "k={k} n={n} {closed} {brute}");
                }
            }
        }
    }

    #[test]
    fn subsets_and_divisors() {
        assert_eq!(k_subsets(4, 2).len(), 6);
        assert_eq!(k_subsets(3, 0), alloc::vec![Vec::<usize>::new()]);
        assert!(k_subsets(2, 3).is_empty());
        assert_eq!(divisors(12), alloc::vec![1, 2, 3, 4, 6, 12]);
        assert_eq!(powu(0.5, 10), 0.5f64.powi(10));
    }

    #[test]
    fn bad_priors() {
        assert!(Prior::new(alloc::vec![(0.5, 0.5)]).is_err());
        assert!(Prior::new(alloc::vec![(1.5, 1.0)]).is_err());
        assert!(Prior::new(Vec::new()).is_err());
    }
}
