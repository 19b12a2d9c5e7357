//! Variant samplers: rewrite exploration per part, weighted combination,
//! surprise ranking and top-K selection; plus a uniform sampler over a
//! bounded equivalence class.

mod surprise;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::category::{compose, Arrow, EquivalenceClass, Growth, RewriteError, RewritingCategory, RuleApplication, Target};
use crate::statement::{Relation, Statement};

pub use surprise::{ModelError, SurpriseModel, BOS, UNK};

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub breadth: usize,
    pub depth: usize,
    pub draws: usize,
    pub growth: Growth,
    pub include_seed: bool,
    pub k: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig { breadth: 15, depth: 2, draws: 20, growth: Growth::Strict, include_seed: true, k: 8 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub statement: Statement,
    pub arrow: Arrow,
    pub surprise: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantSet {
    pub seed: Statement,
    /// In selection order.
    pub variants: Vec<Variant>,
    /// Fewer distinct variants than requested were available.
    pub short: bool,
}

impl VariantSet {
    pub fn len(&self) -> usize {
        self.variants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variants.is_empty()
    }

    pub fn statements(&self) -> impl Iterator<Item = &Statement> {
        self.variants.iter().map(|v| &v.statement)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SamplerError {
    #[error("K must be at least 1")]
    ZeroK,
    #[error("seed is not a member of the class")]
    NotInClass,
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

pub trait VariantSampler {
    fn name(&self) -> String;

    /// `k` variants reachable from `seed`, each with its arrow.
    fn sample(&self, seed: &Statement, k: usize, rng: &mut dyn RngCore) -> Result<VariantSet, SamplerError>;
}

/// Rewrites of one part of the seed, in discovery order.
#[derive(Clone, Debug, PartialEq)]
pub struct PartVariants {
    pub target: Target,
    pub original: Relation,
    pub variants: Vec<(Relation, Vec<RuleApplication>)>,
}

fn targets(t: &Statement) -> Vec<Target> {
    let mut v: Vec<Target> = (0..t.hyps.len()).map(Target::Hyp).collect();
    v.push(Target::Goal);
    v
}

fn part_of(t: &Statement, target: Target) -> &Relation {
    match target {
        Target::Goal => &t.goal,
        Target::Hyp(i) => &t.hyps[i].rel,
    }
}

/// Rewrite chains per part: the top `breadth` rewrites of each part,
/// recursively to `depth`, deduplicated by text.
pub fn explore(category: &RewritingCategory, t: &Statement, cfg: &SamplerConfig) -> Vec<PartVariants> {
    let cat = category.clone().with_growth(cfg.growth);
    targets(t)
        .into_iter()
        .map(|target| {
            let original = part_of(t, target).clone();
            let mut seen: BTreeSet<String> = BTreeSet::new();
            seen.insert(original.to_string());
            let mut variants = Vec::new();
            let mut level: Vec<(Statement, Vec<RuleApplication>)> = alloc::vec![(t.clone(), Vec::new())];
            for _ in 0..cfg.depth {
                let mut next = Vec::new();
                for (stmt, steps) in &level {
                    for (a, dst) in cat.neighbors_at(stmt, target, cfg.breadth) {
                        let rel = part_of(&dst, target).clone();
                        if !seen.insert(rel.to_string()) {
                            continue;
                        }
                        let mut chain = steps.clone();
                        chain.push(a);
                        variants.push((rel, chain.clone()));
                        next.push((dst, chain));
                    }
                }
                level = next;
            }
            PartVariants { target, original, variants }
        })
        .collect()
}

/// Index `i` in `0..=n` drawn with probability proportional to `1/(i+1)`.
pub fn harmonic_index(n: usize, rng: &mut dyn RngCore) -> usize {
    let total: f64 = (0..=n).map(|i| 1.0 / (i + 1) as f64).sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for i in 0..=n {
        acc += 1.0 / (i + 1) as f64;
        if u < acc {
            return i;
        }
    }
    n
}

/// `draws` independent combinations of one rewrite (or the original) per
/// part, deduplicated by canonical text, in first-drawn order.
pub fn combine(t: &Statement, parts: &[PartVariants], draws: usize, rng: &mut dyn RngCore) -> Vec<(Statement, Arrow)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for _ in 0..draws {
        let mut stmt = t.clone();
        let mut steps = Vec::new();
        for p in parts {
            let i = harmonic_index(p.variants.len(), rng);
            if i == 0 {
                continue;
            }
            let (rel, chain) = &p.variants[i - 1];
            match p.target {
                Target::Goal => stmt.goal = rel.clone(),
                Target::Hyp(h) => stmt.hyps[h].rel = rel.clone(),
            }
            steps.extend(chain.iter().cloned());
        }
        if seen.insert(stmt.canonical()) {
            out.push((stmt.clone(), Arrow { src: t.clone(), dst: stmt, steps }));
        }
    }
    out
}

fn by_score(a: &Variant, b: &Variant) -> core::cmp::Ordering {
    a.surprise.total_cmp(&b.surprise).then_with(|| a.statement.canonical().cmp(&b.statement.canonical()))
}

/// Explore, combine, rank by (surprise, text) and keep the `k` best, the
/// seed first when `include_seed` is set.
pub fn select(
    category: &RewritingCategory,
    model: &SurpriseModel,
    t: &Statement,
    cfg: &SamplerConfig,
    rng: &mut dyn RngCore,
) -> Result<VariantSet, SamplerError> {
    if cfg.k == 0 {
        return Err(SamplerError::ZeroK);
    }
    let parts = explore(category, t, cfg);
    let seed_text = t.canonical();
    let mut cands: Vec<Variant> = combine(t, &parts, cfg.draws, rng)
        .into_iter()
        .filter(|(s, _)| s.canonical() != seed_text)
        .map(|(statement, arrow)| Variant { surprise: model.surprise(&statement), statement, arrow })
        .collect();
    cands.sort_by(by_score);
    let mut variants = Vec::new();
    if cfg.include_seed {
        variants.push(Variant { statement: t.clone(), arrow: Arrow::identity(t), surprise: model.surprise(t) });
    }
    let room = cfg.k - variants.len();
    variants.extend(cands.into_iter().take(room));
    Ok(VariantSet { seed: t.clone(), short: variants.len() < cfg.k, variants })
}

/// The candidate pool: every distinct combined rewrite other than the seed.
pub fn candidate_pool(category: &RewritingCategory, t: &Statement, cfg: &SamplerConfig, rng: &mut dyn RngCore) -> Vec<(Statement, Arrow)> {
    let parts = explore(category, t, cfg);
    let seed_text = t.canonical();
    combine(t, &parts, cfg.draws, rng).into_iter().filter(|(s, _)| s.canonical() != seed_text).collect()
}

/// Explore-combine-select as a [`VariantSampler`].
pub struct RankedSampler<'a> {
    pub category: &'a RewritingCategory,
    pub model: &'a SurpriseModel,
    pub config: SamplerConfig,
}

impl VariantSampler for RankedSampler<'_> {
    fn name(&self) -> String {
        "ranked".into()
    }

    fn sample(&self, seed: &Statement, k: usize, rng: &mut dyn RngCore) -> Result<VariantSet, SamplerError> {
        let cfg = SamplerConfig { k, ..self.config.clone() };
        select(self.category, self.model, seed, &cfg, rng)
    }
}

/// Uniform K-subsets of a bounded equivalence class. With `anchored`, the
/// seed is always included and the other `K - 1` are uniform.
pub struct ExhaustiveSampler<'a> {
    pub category: &'a RewritingCategory,
    pub class: EquivalenceClass,
    pub anchored: bool,
    index: BTreeMap<String, usize>,
}

impl<'a> ExhaustiveSampler<'a> {
    pub fn new(category: &'a RewritingCategory, class: EquivalenceClass, anchored: bool) -> Self {
        let index = class.members.iter().enumerate().map(|(i, (s, _))| (s.canonical(), i)).collect();
        ExhaustiveSampler { category, class, anchored, index }
    }

    pub fn from_root(category: &'a RewritingCategory, root: &Statement, depth: usize, anchored: bool) -> Result<Self, SamplerError> {
        Ok(ExhaustiveSampler::new(category, category.equivalence_class(root, depth)?, anchored))
    }

    pub fn position(&self, t: &Statement) -> Option<usize> {
        self.index.get(&t.canonical()).copied()
    }

    /// Arrow from member `from` to member `to`.
    pub fn arrow_between(&self, from: usize, to: usize) -> Result<Arrow, SamplerError> {
        let back = self.category.invert(&self.class.members[from].1)?;
        Ok(compose(&back, &self.class.members[to].1)?)
    }

    /// Member indices of one draw.
    pub fn draw_indices(&self, seed: usize, k: usize, rng: &mut dyn RngCore) -> Vec<usize> {
        let n = self.class.len();
        let mut pool: Vec<usize> = (0..n).filter(|&i| !(self.anchored && i == seed)).collect();
        let want = if self.anchored { k.saturating_sub(1) } else { k }.min(pool.len());
        for i in 0..want {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(want);
        if self.anchored {
            pool.insert(0, seed);
        }
        pool
    }
}

impl VariantSampler for ExhaustiveSampler<'_> {
    fn name(&self) -> String {
        if self.anchored { "exhaustive-anchored" } else { "exhaustive" }.into()
    }

    fn sample(&self, seed: &Statement, k: usize, rng: &mut dyn RngCore) -> Result<VariantSet, SamplerError> {
        if k == 0 {
            return Err(SamplerError::ZeroK);
        }
        let s = self.position(seed).ok_or(SamplerError::NotInClass)?;
        let variants = self
            .draw_indices(s, k, rng)
            .into_iter()
            .map(|i| {
                let mut arrow = self.arrow_between(s, i)?;
                arrow.src = seed.clone();
                if i == s {
                    arrow = Arrow::identity(seed);
                }
                Ok(Variant { statement: self.class.members[i].0.clone(), arrow, surprise: 0.0 })
            })
            .collect::<Result<Vec<_>, SamplerError>>()?;
        Ok(VariantSet { seed: seed.clone(), short: variants.len() < k, variants })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_statement;
    use crate::rules::RuleSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn comm() -> RewritingCategory {
        RewritingCategory::new(RuleSet::default_rules()).generated(&["add_comm", "eq_comm"]).unwrap()
    }

    fn seed() -> Statement {
        parse_statement("thm w (x:0..3) (h0: x + 1 = 3) : x = 2").unwrap()
    }

    #[test]
    fn explore_depth_zero_and_breadth_one() {
        let c = comm();
        let cfg = SamplerConfig { depth: 0, ..SamplerConfig::default() };
        assert!(explore(&c, &seed(), &cfg).iter().all(|p| p.variants.is_empty()));
        let cfg = SamplerConfig { breadth: 1, depth: 1, ..SamplerConfig::default() };
        let parts = explore(&c, &seed(), &cfg);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].variants.len(), 1);
        assert_eq!(parts[1].variants.len(), 1);
        assert_eq!(parts[1].variants[0].0.to_string(), "2 = x");
    }

    #[test]
    fn combined_arrows_replay() {
        let c = RewritingCategory::new(RuleSet::default_rules());
        let cfg = SamplerConfig::default();
        let parts = explore(&c, &seed(), &cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let out = combine(&seed(), &parts, 20, &mut rng);
        assert!(!out.is_empty());
        for (s, a) in &out {
            c.check_arrow(a).unwrap();
            assert_eq!(&a.dst, s);
        }
    }

    #[test]
    fn no_variants_gives_seed_only() {
        let c = comm();
        let t = parse_statement("thm g : 2 = 2").unwrap();
        let parts = explore(&c, &t, &SamplerConfig::default());
        let out = combine(&t, &parts, 20, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, t);
    }

    #[test]
    fn harmonic_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 60_000;
        let hits = (0..n).filter(|_| harmonic_index(1, &mut rng) == 1).count();
        let p = hits as f64 / n as f64;
        let sigma = (1.0 / 3.0 * 2.0 / 3.0 / n as f64).sqrt();
        assert!((p - 1.0 / 3.0).abs() < 4.0 * sigma);
    }

    #[test]
    fn select_k1_is_seed() {
        let c = comm();
        let m = SurpriseModel::uniform(3, Vec::new()).unwrap();
        let cfg = SamplerConfig { k: 1, ..SamplerConfig::default() };
        let v = select(&c, &m, &seed(), &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.variants[0].statement, seed());
    }

    #[test]
    fn exhaustive_sampler_arrows_and_sizes() {
        let c = comm();
        let s = ExhaustiveSampler::from_root(&c, &seed(), 1, false).unwrap();
        assert_eq!(s.class.len(), 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let all = s.sample(&seed(), 10, &mut rng).unwrap();
        assert_eq!(all.len(), 4);
        let member = s.class.members[1].0.clone();
        for v in s.sample(&member, 3, &mut rng).unwrap().variants {
            c.check_arrow(&v.arrow).unwrap();
            assert_eq!(v.arrow.src, member);
        }
        let anchored = ExhaustiveSampler::from_root(&c, &seed(), 1, true).unwrap();
        let one = anchored.sample(&member, 1, &mut rng).unwrap();
        assert_eq!(one.variants[0].statement, member);
    }
}
