//! Category and functor laws, the equivariance audit and the documented
//! non-invariance witness.

use std::collections::BTreeMap;

use anyhow::{anyhow, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rwcat_core::functor::{check_functoriality, check_proof_equivariance, invariance_spread, ProofDistribution};
use rwcat_core::hash::derive_seed;
use rwcat_core::prover::{FeatureSource, Prover};
use rwcat_core::{decide_truth, parse_statement, Arrow, Direction, Lemma, Position, RewritingCategory, RuleApplication, Side, Statement, Target};

use super::{Lab, Outcome};
use crate::formats::{csv, jsonl, num};

/// `t` under theorem and hypothesis renamings: distinct texts, equal states.
pub fn renamed(t: &Statement) -> Vec<Statement> {
    let a = t.with_name(&format!("{}_r", t.name));
    let mut b = t.with_name(&format!("{}_s", t.name));
    for (i, h) in b.hyps.iter_mut().enumerate() {
        h.name = format!("a{i}");
    }
    let mut out = vec![t.clone(), a];
    if !t.hyps.is_empty() {
        out.push(b);
    }
    out
}

/// A random walk of `steps` single rewrites from `t`; shorter if stuck.
pub fn random_arrow(cat: &RewritingCategory, t: &Statement, steps: usize, rng: &mut dyn RngCore) -> Arrow {
    let mut cur = Arrow::identity(t);
    for _ in 0..steps {
        let options = cat.neighbors(&cur.dst, usize::MAX);
        if options.is_empty() {
            break;
        }
        let (a, dst) = options[rng.random_range(0..options.len())].clone();
        cur.steps.push(a);
        cur.dst = dst;
    }
    cur
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub seed: String,
    pub class_size: usize,
    pub text_deviation: f64,
    pub sequential_deviation: f64,
    pub text_spread: f64,
    pub sequential_spread: f64,
    pub deviation_length: usize,
    pub spread_length: usize,
}

const WITNESS: &str = "thm w (x:0..3) (h0: x + 1 = 3) : x = 2";

/// The seed `x + 1 = 3 ⊢ x = 2` under `{add_comm, eq_comm}` at depth 1,
/// with the arrow commuting the hypothesis' left side. Deviations are at
/// `L = 2`, spreads at `L = 4`.
pub fn witness(lab: &Lab) -> Result<WitnessReport> {
    let cat = lab.library.generated(&["add_comm", "eq_comm"])?;
    let t = parse_statement(WITNESS)?;
    let step = RuleApplication { lemma: Lemma::Rule("add_comm".into()), dir: Direction::Fwd, target: Target::Hyp(0), pos: Position::term(Side::Lhs, &[]) };
    let arrow = cat.arrow(&t, vec![step])?;
    let p = &lab.config.prover;
    let (dl, sl) = (2, 4);
    let text = rwcat_core::prover::PolicyProver { length: dl, ..p.policy_prover(FeatureSource::Root)? };
    let seq = rwcat_core::prover::PolicyProver { length: dl, ..p.policy_prover(FeatureSource::State)? };
    let text_dev = check_proof_equivariance(&text, &cat, &arrow, dl)?.deviation;
    let seq_dev = check_proof_equivariance(&seq, &cat, &arrow, dl)?.deviation;
    let class = cat.equivalence_class(&t, 1)?;
    let range = |prover: &dyn Prover| -> Result<f64> {
        Ok(invariance_spread(prover, &cat, class.statements())?.map(|s| s.range()).unwrap_or(0.0))
    };
    let text4 = rwcat_core::prover::PolicyProver { length: sl, ..text.clone() };
    let seq4 = rwcat_core::prover::PolicyProver { length: sl, ..seq.clone() };
    Ok(WitnessReport {
        seed: t.canonical(),
        class_size: class.len(),
        text_deviation: text_dev,
        sequential_deviation: seq_dev,
        text_spread: range(&text4)?,
        sequential_spread: range(&seq4)?,
        deviation_length: dl,
        spread_length: sl,
    })
}

#[derive(Serialize)]
struct AuditRecord {
    check: String,
    arrow_id: usize,
    deviation: f64,
    pass: bool,
}

pub(super) fn equivariance_audit(lab: &Lab) -> Result<Outcome> {
    let cfg = &lab.config.experiment;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[3]));
    let seq = lab.sequential_prover()?;
    let text = lab.text_prover()?;
    let max_len = cfg.audit_max_len.max(2);
    let mut records = Vec::new();
    let mut rows = Vec::new();
    let (mut worst_seq, mut text_over) = (0.0f64, 0);
    let mut id = 0;
    while id < cfg.audit_arrows {
        let t = &lab.corpus[rng.random_range(0..lab.corpus.len())];
        let m = rng.random_range(1..max_len);
        let arrow = random_arrow(&lab.library, t, m, &mut rng);
        if arrow.is_identity() {
            continue;
        }
        let length = rng.random_range(arrow.len() + 1..=max_len);
        let s = check_proof_equivariance(seq.as_ref(), &lab.library, &arrow, length)?;
        let x = check_proof_equivariance(text.as_ref(), &lab.library, &arrow, length)?;
        worst_seq = worst_seq.max(s.deviation);
        text_over += (x.deviation > 0.01) as usize;
        records.push(AuditRecord { check: "equivariance/sequential".into(), arrow_id: id, deviation: s.deviation, pass: s.pass });
        records.push(AuditRecord { check: "equivariance/text".into(), arrow_id: id, deviation: x.deviation, pass: x.pass });
        let steps: Vec<String> = arrow.steps.iter().map(|a| a.to_string()).collect();
        rows.push(vec![id.to_string(), arrow.src.canonical(), steps.join("; "), length.to_string(), format!("{:e}", s.deviation), format!("{:e}", x.deviation)]);
        id += 1;
    }
    let mut out = Outcome::default();
    out.check("sequential-equivariance", worst_seq <= rwcat_core::functor::LAW_TOLERANCE, format!("max deviation {worst_seq:e} over {id} arrows"));

    let mut state_rows = Vec::new();
    let mut equal = true;
    for t in lab.corpus.iter().take(20) {
        let group = renamed(t);
        let rates: Vec<f64> = group.iter().map(|m| lab.rate(seq.as_ref(), m)).collect::<Result<_>>()?;
        let same = rates.iter().all(|r| r.to_bits() == rates[0].to_bits());
        equal &= same;
        state_rows.push(vec![t.canonical(), group.len().to_string(), num(rates[0]), same.to_string()]);
    }
    out.check("state-invariance", equal, format!("{} renaming groups, rates bitwise equal", state_rows.len()));

    let w = witness(lab)?;
    out.check("witness-text-deviation", w.text_deviation > 0.01, format!("text deviation {:.6} at L={}", w.text_deviation, w.deviation_length));
    out.check("witness-text-spread", w.text_spread > 0.0, format!("text spread {:e} at L={} over {} members", w.text_spread, w.spread_length, w.class_size));
    out.check("witness-sequential-deviation", w.sequential_deviation <= rwcat_core::functor::LAW_TOLERANCE, format!("{:e}", w.sequential_deviation));
    out.file("equivariance.jsonl", jsonl(&records));
    out.file("equivariance.csv", csv(&["arrow_id", "source", "steps", "length", "sequential_deviation", "text_deviation"], &rows));
    out.file("state_invariance.csv", csv(&["statement", "renamings", "rate", "equal"], &state_rows));
    out.file("witness.json", serde_json::to_string_pretty(&w)? + "\n");
    out.file("audit_summary.csv", csv(&["arrows", "max_sequential_deviation", "text_over_0.01"], &[vec![id.to_string(), format!("{worst_seq:e}"), text_over.to_string()]]));
    Ok(out)
}

pub(super) fn category_laws(lab: &Lab) -> Result<Outcome> {
    let cfg = &lab.config.experiment;
    let cat = &lab.library;
    let limits = cat.limits;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[4]));
    let mut out = Outcome::default();
    let (mut assoc, mut ident, mut replay, mut inverse, mut truth) = (0, 0, 0, 0, 0);
    let triples = 100;
    for _ in 0..triples {
        let t = &lab.corpus[rng.random_range(0..lab.corpus.len())];
        let a = random_arrow(cat, t, rng.random_range(0..=2), &mut rng);
        let b = random_arrow(cat, &a.dst, rng.random_range(0..=2), &mut rng);
        let c = random_arrow(cat, &b.dst, rng.random_range(0..=2), &mut rng);
        let left = cat.compose(&cat.compose(&a, &b)?, &c)?;
        let right = cat.compose(&a, &cat.compose(&b, &c)?)?;
        assoc += (left == right) as usize;
        let ia = cat.compose(&Arrow::identity(&a.src), &a)? == a && cat.compose(&a, &Arrow::identity(&a.dst))? == a;
        ident += ia as usize;
        replay += (cat.check_arrow(&left).is_ok() && cat.check_arrow(&right).is_ok()) as usize;
        let inv = cat.invert(&left)?;
        inverse += (cat.invert(&inv)? == left && cat.replay(&left.src, &cat.compose(&left, &inv)?.steps)? == left.src) as usize;
        let preserved = [&a, &b, &c].iter().all(|x| decide_truth(&x.src, &limits).ok() == decide_truth(&x.dst, &limits).ok());
        truth += preserved as usize;
    }
    out.check("associativity", assoc == triples, format!("{assoc}/{triples} triples"));
    out.check("identity", ident == triples, format!("{ident}/{triples}"));
    out.check("composite-replay", replay == triples, format!("{replay}/{triples}"));
    out.check("inverse", inverse == triples, format!("{inverse}/{triples}"));
    out.check("semantics-preserved", truth == triples, format!("{truth}/{triples} triples"));

    let seq = lab.sequential_prover()?;
    let text = lab.text_prover()?;
    let length = lab.config.prover.length.max(2);
    let mut cache: BTreeMap<(usize, bool), ProofDistribution> = BTreeMap::new();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut passed = 0;
    let instances = 100;
    for k in 0..instances {
        let idx = rng.random_range(0..lab.corpus.len().min(25));
        let t = &lab.corpus[idx];
        let use_text = k % 2 == 1;
        let t1 = random_arrow(cat, t, 1, &mut rng);
        let t2 = random_arrow(cat, &t1.dst, 1, &mut rng);
        if !cache.contains_key(&(idx, use_text)) {
            let p: &dyn Prover = if use_text { text.as_ref() } else { seq.as_ref() };
            cache.insert((idx, use_text), p.session(cat, t).proof_distribution(length, cfg.exact_budget)?);
        }
        let nu = &cache[&(idx, use_text)];
        let (p1, p2) = (t1.realize()?, t2.realize()?);
        let r = check_functoriality(nu, &p1.0, &p2.0).map_err(|e| anyhow!("instance {k}: {e}"))?;
        worst = worst.max(r.composition_deviation).max(r.identity_deviation);
        passed += r.pass as usize;
        rows.push(vec![k.to_string(), t.canonical(), if use_text { "text" } else { "sequential" }.into(), p1.to_string(), p2.to_string(), format!("{:e}", r.identity_deviation), format!("{:e}", r.composition_deviation)]);
    }
    out.check("functor-composition", passed == instances, format!("{passed}/{instances} instances, max deviation {worst:e}"));
    out.file("functor_laws.csv", csv(&["instance", "statement", "prover", "first", "second", "identity_deviation", "composition_deviation"], &rows));
    out.file(
        "category_laws.csv",
        csv(&["law", "holds", "of"], &[
            vec!["associativity".into(), assoc.to_string(), triples.to_string()],
            vec!["identity".into(), ident.to_string(), triples.to_string()],
            vec!["composite-replay".into(), replay.to_string(), triples.to_string()],
            vec!["inverse".into(), inverse.to_string(), triples.to_string()],
            vec!["semantics-preserved".into(), truth.to_string(), triples.to_string()],
        ]),
    );
    Ok(out)
}
