//! Random statements that are true by construction.
//!
//! Each statement starts from a reflexive goal, a goal copied from a
//! satisfiable hypothesis, or a ground goal with its computed value. Random
//! rule chains then rewrite its parts and extra hypotheses may be inserted;
//! both steps keep the statement true.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore};

use crate::category::{RewritingCategory, Target};
use crate::statement::{Hypothesis, RelKind, Relation, Statement, VarDecl};
use crate::term::Term;
use crate::truth::decide_truth;

const VAR_NAMES: [&str; 3] = ["x", "y", "z"];

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub size: usize,
    pub max_vars: usize,
    /// Domains are `lo..hi` with `0 <= lo <= domain_lo_max`, `hi - lo` in `2..=domain_width_max`.
    pub domain_lo_max: i64,
    pub domain_width_max: i64,
    pub max_literal: i64,
    /// Node count of freshly drawn terms.
    pub term_nodes: (usize, usize),
    /// Maximum length of each rewrite chain.
    pub chain: usize,
    pub hyp_insert: f64,
    /// Relative weights of reflexive, hypothesis and ground starts.
    pub mix: [u32; 3],
    /// Statement node cap during chains.
    pub max_nodes: usize,
    /// Attempts allowed per requested statement.
    pub attempts_per_item: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            size: 200,
            max_vars: 2,
            domain_lo_max: 2,
            domain_width_max: 4,
            max_literal: 5,
            term_nodes: (3, 5),
            chain: 3,
            hyp_insert: 0.25,
            mix: [5, 3, 2],
            max_nodes: 12,
            attempts_per_item: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CorpusError {
    #[error("generation budget exhausted after {attempts} attempts with {made} of {wanted} statements")]
    Budget { attempts: usize, made: usize, wanted: usize },
    #[error("generated a false statement: {0}")]
    False(String),
    #[error("mix weights are all zero")]
    EmptyMix,
}

/// `size` distinct true statements, named `c000`, `c001`, ...
pub fn generate_corpus(category: &RewritingCategory, cfg: &CorpusConfig, rng: &mut dyn RngCore) -> Result<Vec<Statement>, CorpusError> {
    if cfg.mix.iter().all(|&w| w == 0) {
        return Err(CorpusError::EmptyMix);
    }
    let mut out = Vec::with_capacity(cfg.size);
    let mut seen = BTreeSet::new();
    let budget = cfg.size.saturating_mul(cfg.attempts_per_item);
    let mut attempts = 0;
    while out.len() < cfg.size {
        if attempts >= budget {
            return Err(CorpusError::Budget { attempts, made: out.len(), wanted: cfg.size });
        }
        attempts += 1;
        let Some(t) = draw_statement(category, cfg, rng) else {
            continue;
        };
        let t = t.with_name(&format!("c{:03}", out.len()));
        if category.limits.check_statement(&t).is_err() {
            continue;
        }
        match decide_truth(&t, &category.limits) {
            Ok(true) => {}
            Ok(false) => return Err(CorpusError::False(t.canonical())),
            Err(_) => continue,
        }
        if seen.insert(t.with_name("_").canonical()) {
            out.push(t);
        }
    }
    Ok(out)
}

fn draw_statement(category: &RewritingCategory, cfg: &CorpusConfig, rng: &mut dyn RngCore) -> Option<Statement> {
    let nvars = rng.random_range(1..=cfg.max_vars.clamp(1, VAR_NAMES.len()));
    let vars: Vec<VarDecl> = VAR_NAMES[..nvars]
        .iter()
        .map(|n| {
            let lo = rng.random_range(0..=cfg.domain_lo_max);
            VarDecl::new(n, lo, lo + rng.random_range(2..=cfg.domain_width_max.max(2)))
        })
        .collect();
    let total: u32 = cfg.mix.iter().sum();
    let mut pick = rng.random_range(0..total);
    let mut kind = 0;
    while pick >= cfg.mix[kind] {
        pick -= cfg.mix[kind];
        kind += 1;
    }
    let mut hyps = Vec::new();
    let goal = match kind {
        0 => {
            let t = random_term(cfg, &vars, true, rng);
            Relation::eq(t.clone(), t)
        }
        1 => {
            let rel = satisfiable_relation(cfg, &vars, rng)?;
            hyps.push(rel.clone());
            rel
        }
        _ => {
            let t = random_term(cfg, &[], false, rng);
            let v = i64::try_from(t.eval_ground().ok()?).ok()?;
            let (kind, rhs) = match rng.random_range(0..3) {
                0 => (RelKind::Eq, v),
                1 => (RelKind::Le, v + rng.random_range(0..=2)),
                _ => (RelKind::Lt, v + rng.random_range(1..=3)),
            };
            Relation::new(kind, t, Term::lit(rhs))
        }
    };
    let mut t = Statement { name: "_".into(), vars: vars.clone(), hyps: Vec::new(), goal };
    t.hyps = hyps.into_iter().map(|rel| Hypothesis { name: "h".into(), rel }).collect();
    if rng.random_bool(cfg.hyp_insert.clamp(0.0, 1.0)) {
        let v = &vars[rng.random_range(0..vars.len())];
        let c = rng.random_range(v.lo..=v.hi);
        let rel = Relation::new(RelKind::Le, Term::var(&v.name), Term::lit(c));
        let at = rng.random_range(0..=t.hyps.len());
        t.hyps.insert(at, Hypothesis { name: "h".into(), rel });
    }
    for (i, h) in t.hyps.iter_mut().enumerate() {
        h.name = format!("h{i}");
    }
    let targets: Vec<Target> = core::iter::once(Target::Goal).chain((0..t.hyps.len()).map(Target::Hyp)).collect();
    for target in targets {
        let steps = rng.random_range(0..=cfg.chain);
        for _ in 0..steps {
            let options: Vec<Statement> = category
                .neighbors_at(&t, target, usize::MAX)
                .into_iter()
                .map(|(_, s)| s)
                .filter(|s| s.node_count() <= cfg.max_nodes)
                .collect();
            if options.is_empty() {
                break;
            }
            t = options[rng.random_range(0..options.len())].clone();
        }
    }
    Some(t)
}

fn random_term(cfg: &CorpusConfig, vars: &[VarDecl], need_var: bool, rng: &mut dyn RngCore) -> Term {
    let (lo, hi) = cfg.term_nodes;
    let target = rng.random_range(lo.max(1)..=hi.max(lo.max(1)));
    loop {
        let t = grow(target, cfg, vars, rng);
        let mut used = BTreeSet::new();
        t.collect_vars(&mut used);
        if !need_var || vars.is_empty() || !used.is_empty() {
            return t;
        }
    }
}

/// A random tree with about `nodes` nodes; binary nodes only, so the count is odd.
fn grow(nodes: usize, cfg: &CorpusConfig, vars: &[VarDecl], rng: &mut dyn RngCore) -> Term {
    if nodes < 3 {
        if !vars.is_empty() && rng.random_bool(0.6) {
            return Term::var(&vars[rng.random_range(0..vars.len())].name);
        }
        return Term::lit(rng.random_range(0..=cfg.max_literal));
    }
    let inner = nodes - 1;
    let left = 1 + 2 * rng.random_range(0..=(inner - 2) / 2);
    let a = grow(left, cfg, vars, rng);
    let b = grow(inner - left, cfg, vars, rng);
    match rng.random_range(0..5) {
        0 | 1 => Term::add(a, b),
        2 | 3 => Term::mul(a, b),
        _ => Term::sub(a, b),
    }
}

/// `e = v` or `e <= v` with `v` the value of `e` at a random point of the domain.
fn satisfiable_relation(cfg: &CorpusConfig, vars: &[VarDecl], rng: &mut dyn RngCore) -> Option<Relation> {
    let e = random_term(cfg, vars, true, rng);
    let point: Vec<(String, i128)> = vars.iter().map(|v| (v.name.clone(), rng.random_range(v.lo..=v.hi) as i128)).collect();
    let env = |n: &str| point.iter().find(|p| p.0 == n).map(|p| p.1);
    let v = i64::try_from(e.eval(&env).ok()?).ok()?;
    let kind = if rng.random_bool(0.75) { RelKind::Eq } else { RelKind::Le };
    Some(Relation::new(kind, e, Term::lit(v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::RuleSet;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cat() -> RewritingCategory {
        RewritingCategory::new(RuleSet::default_rules())
    }

    #[test]
    fn empty_and_true() {
        let c = cat();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let none = generate_corpus(&c, &CorpusConfig { size: 0, ..CorpusConfig::default() }, &mut rng).unwrap();
        assert!(none.is_empty());
        let cfg = CorpusConfig { size: 60, ..CorpusConfig::default() };
        let corpus = generate_corpus(&c, &cfg, &mut rng).unwrap();
        assert_eq!(corpus.len(), 60);
        for t in &corpus {
            assert_eq!(decide_truth(t, &c.limits), Ok(true), "{t}");
        }
        let texts: BTreeSet<String> = corpus.iter().map(|t| t.with_name("_").canonical()).collect();
        assert_eq!(texts.len(), 60);
    }

    #[test]
    fn seeded_output_repeats() {
        let c = cat();
        let cfg = CorpusConfig { size: 20, ..CorpusConfig::default() };
        let a = generate_corpus(&c, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = generate_corpus(&c, &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn budget_error() {
        let c = cat();
        let cfg = CorpusConfig { size: 10_000, max_vars: 1, domain_lo_max: 0, domain_width_max: 2, max_literal: 0, term_nodes: (1, 1), chain: 0, hyp_insert: 0.0, attempts_per_item: 1, ..CorpusConfig::default() };
        assert!(matches!(generate_corpus(&c, &cfg, &mut ChaCha8Rng::seed_from_u64(3)), Err(CorpusError::Budget { .. })));
    }
}
