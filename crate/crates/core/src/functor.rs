//! Proof distributions and the pushforward along arrow realizations.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::category::{Arrow, RewriteError, RewritingCategory};
use crate::prover::{Prover, ProverError, DEFAULT_BUDGET};
use crate::statement::Statement;
use crate::tactic::{Tactic, TacticSeq};

/// Tolerance on total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Deviation tolerance of the law checks.
pub const LAW_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DistributionError {
    #[error("sequence `{0}` has non-positive or non-finite mass")]
    NonPositive(TacticSeq),
    #[error("total mass {0} differs from 1")]
    NotNormalized(f64),
    #[error("sequence longer than the truncation length")]
    TooLong,
    #[error("prefix of length {0} exceeds the truncation length {1}")]
    PrefixTooLong(usize, usize),
    #[error("no sequence starts with the prefix")]
    NoMass,
}

/// Kahan–Babuška summation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = sum + x;
        if libm::fabs(sum) >= libm::fabs(x) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A strictly positive, normalized distribution over tactic sequences of
/// length at most `length`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofDistribution {
    length: usize,
    mass: BTreeMap<TacticSeq, f64>,
}

impl ProofDistribution {
    pub fn new(length: usize, mass: BTreeMap<TacticSeq, f64>) -> Result<Self, DistributionError> {
        for (seq, &p) in &mass {
            if !(p > 0.0 && p.is_finite()) {
                return Err(DistributionError::NonPositive(seq.clone()));
            }
            if seq.len() > length {
                return Err(DistributionError::TooLong);
            }
        }
        let total = stable_sum(mass.values().copied());
        if libm::fabs(total - 1.0) > MASS_TOLERANCE {
            return Err(DistributionError::NotNormalized(total));
        }
        Ok(ProofDistribution { length, mass })
    }

    /// Normalize positive weights into a distribution.
    pub fn from_weights(length: usize, weights: BTreeMap<TacticSeq, f64>) -> Result<Self, DistributionError> {
        let total = stable_sum(weights.values().copied());
        if !(total > 0.0 && total.is_finite()) {
            return Err(DistributionError::NoMass);
        }
        let mass = weights.into_iter().map(|(k, w)| (k, w / total)).collect();
        ProofDistribution::new(length, mass)
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn prob(&self, seq: &TacticSeq) -> f64 {
        self.mass.get(seq).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TacticSeq, f64)> {
        self.mass.iter().map(|(k, &v)| (k, v))
    }

    pub fn total(&self) -> f64 {
        stable_sum(self.mass.values().copied())
    }

    pub fn min_mass(&self) -> f64 {
        self.mass.values().copied().fold(f64::INFINITY, f64::min)
    }

    /// Condition on sequences starting with `prefix` and strip it.
    pub fn pushforward(&self, prefix: &[Tactic]) -> Result<ProofDistribution, DistributionError> {
        let m = prefix.len();
        if m > self.length {
            return Err(DistributionError::PrefixTooLong(m, self.length));
        }
        if m == 0 {
            return Ok(self.clone());
        }
        // Extensions of a prefix are contiguous in lexicographic order.
        let kept: Vec<(TacticSeq, f64)> = self
            .mass
            .range(TacticSeq(prefix.to_vec())..)
            .take_while(|(k, _)| k.starts_with(prefix))
            .map(|(k, &v)| (TacticSeq(k.0[m..].to_vec()), v))
            .collect();
        let total = stable_sum(kept.iter().map(|(_, v)| *v));
        if !(total > 0.0) {
            return Err(DistributionError::NoMass);
        }
        let mass = kept.into_iter().map(|(k, v)| (k, v / total)).collect();
        ProofDistribution::new(self.length - m, mass)
    }

    /// Sup-norm distance over the union of supports.
    pub fn linf(&self, other: &ProofDistribution) -> f64 {
        let mut d = 0.0f64;
        let (mut a, mut b) = (self.mass.iter().peekable(), other.mass.iter().peekable());
        loop {
            let gap = match (a.peek(), b.peek()) {
                (None, None) => return d,
                (Some(&(_, &x)), None) => {
                    a.next();
                    x
                }
                (None, Some(&(_, &y))) => {
                    b.next();
                    y
                }
                (Some(&(ka, &x)), Some(&(kb, &y))) => match ka.cmp(kb) {
                    core::cmp::Ordering::Less => {
                        a.next();
                        x
                    }
                    core::cmp::Ordering::Greater => {
                        b.next();
                        y
                    }
                    core::cmp::Ordering::Equal => {
                        a.next();
                        b.next();
                        libm::fabs(x - y)
                    }
                },
            };
            d = d.max(gap);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctorialityReport {
    pub identity_deviation: f64,
    pub composition_deviation: f64,
    pub pass: bool,
}

/// Identity and composition laws of the pushforward on `nu` for the
/// composable prefixes `t` then `t2`.
pub fn check_functoriality(nu: &ProofDistribution, t: &[Tactic], t2: &[Tactic]) -> Result<FunctorialityReport, DistributionError> {
    let identity_deviation = nu.pushforward(&[])?.linf(nu);
    let mut joined = t.to_vec();
    joined.extend_from_slice(t2);
    let direct = nu.pushforward(&joined)?;
    let stepwise = nu.pushforward(t)?.pushforward(t2)?;
    let composition_deviation = direct.linf(&stepwise);
    Ok(FunctorialityReport {
        identity_deviation,
        composition_deviation,
        pass: identity_deviation <= LAW_TOLERANCE && composition_deviation <= LAW_TOLERANCE,
    })
}

/// Extremes of success rates over a class.
#[derive(Clone, Debug, PartialEq)]
pub struct Spread<T> {
    pub min: f64,
    pub max: f64,
    pub argmin: T,
    pub argmax: T,
}

impl<T> Spread<T> {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Spread of the values; the first extremal item wins ties.
pub fn spread<T: Clone>(items: &[(T, f64)]) -> Option<Spread<T>> {
    let first = items.first()?;
    let mut out = Spread { min: first.1, max: first.1, argmin: first.0.clone(), argmax: first.0.clone() };
    for (t, v) in &items[1..] {
        if *v < out.min {
            out.min = *v;
            out.argmin = t.clone();
        }
        if *v > out.max {
            out.max = *v;
            out.argmax = t.clone();
        }
    }
    Some(out)
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquivarianceReport {
    pub deviation: f64,
    pub prefix_len: usize,
    pub pass: bool,
}

/// Distance between the prover's law on `a.dst` at length `L - m` and the
/// pushforward of its law on `a.src` at length `L` along `realize(a)`.
pub fn check_proof_equivariance(
    prover: &dyn Prover,
    category: &RewritingCategory,
    a: &Arrow,
    length: usize,
) -> Result<EquivarianceReport, CheckError> {
    let prefix = a.realize()?;
    let m = prefix.len();
    if m > length {
        return Err(DistributionError::PrefixTooLong(m, length).into());
    }
    let src = prover.session(category, &a.src).proof_distribution(length, DEFAULT_BUDGET)?;
    let pushed = src.pushforward(&prefix.0)?;
    let dst = prover.session(category, &a.dst).proof_distribution(length - m, DEFAULT_BUDGET)?;
    let deviation = pushed.linf(&dst);
    Ok(EquivarianceReport { deviation, prefix_len: m, pass: deviation <= LAW_TOLERANCE })
}

/// Extremes of the exact success rate over `class`.
pub fn invariance_spread<'s>(
    prover: &dyn Prover,
    category: &RewritingCategory,
    class: impl IntoIterator<Item = &'s Statement>,
) -> Result<Option<Spread<Statement>>, CheckError> {
    let mut rates = Vec::new();
    for t in class {
        let s = prover.session(category, t).success_probability(prover.length(), DEFAULT_BUDGET)?;
        rates.push((t.clone(), s));
    }
    Ok(spread(&rates))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn a() -> Tactic {
        Tactic::CloseRefl
    }

    fn b() -> Tactic {
        Tactic::Skip
    }

    fn six_atoms() -> ProofDistribution {
        let seqs = [vec![a()], vec![b()], vec![a(), a()], vec![a(), b()], vec![b(), a()], vec![b(), b()]];
        let w = seqs.into_iter().map(|s| (TacticSeq(s), 1.0)).collect();
        ProofDistribution::from_weights(2, w).unwrap()
    }

    #[test]
    fn pushforward_renormalizes_prefixed_atoms() {
        let nu = six_atoms();
        let p = nu.pushforward(&[a()]).unwrap();
        assert_eq!(p.len(), 3);
        for s in [vec![], vec![a()], vec![b()]] {
            assert!((p.prob(&TacticSeq(s)) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p.length(), 1);
    }

    #[test]
    fn identity_and_composition() {
        let nu = six_atoms();
        assert_eq!(nu.pushforward(&[]).unwrap(), nu);
        let r = check_functoriality(&nu, &[a()], &[b()]).unwrap();
        assert!(r.pass);
        assert_eq!(r.identity_deviation, 0.0);
        assert!(nu.pushforward(&[a(), a(), a()]).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut m = BTreeMap::new();
        m.insert(TacticSeq(vec![a()]), 0.7);
        assert!(matches!(ProofDistribution::new(1, m.clone()), Err(DistributionError::NotNormalized(_))));
        m.insert(TacticSeq(vec![b()]), 0.0);
        assert!(matches!(ProofDistribution::new(1, m.clone()), Err(DistributionError::NonPositive(_))));
        let mut long = BTreeMap::new();
        long.insert(TacticSeq(vec![a(), a()]), 1.0);
        assert!(matches!(ProofDistribution::new(1, long), Err(DistributionError::TooLong)));
    }

    #[test]
    fn linf_and_spread() {
        let nu = six_atoms();
        let mut w = BTreeMap::new();
        w.insert(TacticSeq(vec![a()]), 1.0);
        let point = ProofDistribution::from_weights(2, w).unwrap();
        assert!((nu.linf(&point) - 5.0 / 6.0).abs() < 1e-15);
        let s = spread(&[("a", 0.2), ("b", 0.9), ("c", 0.2)]).unwrap();
        assert_eq!((s.argmin, s.argmax), ("a", "b"));
        assert!((s.range() - 0.7).abs() < 1e-15);
        assert!(spread::<u8>(&[]).is_none());
    }

    #[test]
    fn compensated_sum() {
        let xs = vec![1e16, 1.0, -1e16];
        assert_eq!(stable_sum(xs), 1.0);
    }
}

#[cfg(test)]
mod prover_checks {
    use super::*;
    use crate::category::{Lemma, RuleApplication, Target};
    use crate::parse::parse_statement;
    use crate::prover::{PolicyProver, SyntheticProver};
    use crate::rules::RuleSet;
    use crate::tactic::{Direction, Position, Side};
    use alloc::collections::BTreeMap;

    fn witness() -> (RewritingCategory, Statement, Arrow) {
        let c = RewritingCategory::new(RuleSet::default_rules()).generated(&["add_comm", "eq_comm"]).unwrap();
        let t = parse_statement("thm w (x:0..3) (h0: x + 1 = 3) : x = 2").unwrap();
        let step = RuleApplication { lemma: Lemma::Rule("add_comm".into()), dir: Direction::Fwd, target: Target::Hyp(0), pos: Position::term(Side::Lhs, &[]) };
        let a = c.arrow(&t, alloc::vec![step]).unwrap();
        (c, t, a)
    }

    #[test]
    fn sequential_is_equivariant_text_is_not() {
        let (c, t, a) = witness();
        let seq = check_proof_equivariance(&PolicyProver::sequential(2), &c, &a, 2).unwrap();
        assert!(seq.pass, "{seq:?}");
        let text = check_proof_equivariance(&PolicyProver::text_conditioned(2), &c, &a, 2).unwrap();
        assert!(text.deviation > 0.01, "{text:?}");
        let id = check_proof_equivariance(&PolicyProver::text_conditioned(2), &c, &Arrow::identity(&t), 2).unwrap();
        assert_eq!(id.deviation, 0.0);
    }

    #[test]
    fn spreads() {
        let (c, t, _) = witness();
        let class = c.equivalence_class(&t, 1).unwrap();
        assert_eq!(class.len(), 4);
        let text = invariance_spread(&PolicyProver::text_conditioned(4), &c, class.statements()).unwrap().unwrap();
        assert!(text.range() > 0.0);
        let table: BTreeMap<_, _> = class.statements().map(|s| (s.canonical(), 0.4)).collect();
        let flat = invariance_spread(&SyntheticProver::table(table, 6), &c, class.statements()).unwrap().unwrap();
        assert_eq!(flat.range(), 0.0);
    }
}
