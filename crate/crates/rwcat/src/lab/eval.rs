//! Ensemble evaluation modes, run-versus-exact consistency, PASS@k checks.

use anyhow::{bail, Result};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use rwcat_core::ensemble::{expected_success_exact, EnsembleConfig, EnsembleRunner, SubsetLaw};
use rwcat_core::hash::{derive_seed, hash64};
use rwcat_core::passk::{pass_at_k, pass_ens_at_k};
use rwcat_core::prover::Prover;
use rwcat_core::sampler::{candidate_pool, select, ExhaustiveSampler, SamplerConfig};
use rwcat_core::{Arrow, Statement};

use super::{Lab, Outcome};
use crate::config::ConsistencyCell;
use crate::formats::{csv, num};

pub const MODES: [&str; 4] = ["seed", "random", "controlled", "test-time"];

/// Exact rate and recorded attempt successes of one variant.
#[derive(Clone, Copy, Debug)]
struct Record {
    rate: f64,
    successes: u64,
}

struct StatementData {
    seed: Record,
    pool: Vec<Record>,
    online: Vec<Record>,
}

/// Exact rate plus `attempts` recorded samples; successful attempts are
/// lifted to `seed` and logged.
fn record(lab: &Lab, prover: &dyn Prover, seed: &Statement, v: &Statement, arrow: &Arrow, attempts: usize, key: u64) -> Result<Record> {
    let mut session = prover.session(&lab.library, v);
    let rate = session.success_probability(prover.length(), lab.config.experiment.exact_budget)?;
    let salt = hash64(&v.canonical());
    let mut successes = 0;
    for j in 0..attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(key, &[salt, j as u64]));
        let p = session.sample_proof(prover.length(), &mut rng);
        if lab.library.verify_proof(v, &p) {
            if successes == 0 {
                lab.record_proof(seed, &lab.library.lift_proof(arrow, &p)?);
            }
            successes += 1;
        }
    }
    Ok(Record { rate, successes })
}

fn miss_exact(r: &Record, attempts: usize) -> f64 {
    rwcat_core::ensemble::powu(1.0 - r.rate, attempts as u64)
}

fn miss_recorded(r: &Record, n: usize, attempts: usize) -> Result<f64> {
    Ok(1.0 - pass_at_k(n as u64, r.successes, attempts as u64)?)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, var.sqrt())
}

pub(super) fn ensemble_eval(lab: &Lab) -> Result<Outcome> {
    let exp = &lab.config.experiment;
    let k = exp.ensemble_k;
    let budgets = exp.budgets.clone();
    for &n in &budgets {
        if n % k != 0 {
            bail!("budget {n} is not a multiple of the ensemble size {k}");
        }
    }
    let recorded = budgets.iter().copied().max().unwrap_or(k);
    let prover = lab.prover()?;
    let scfg = SamplerConfig { k, include_seed: true, ..lab.config.sampler.config()? };
    let data: Vec<Result<StatementData>> = lab
        .corpus
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let key = derive_seed(exp.seed, &[12, i as u64]);
            let pool = candidate_pool(&lab.library, t, &scfg, &mut ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[10, i as u64])));
            let online = select(&lab.library, &lab.model, t, &scfg, &mut ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[11, i as u64])))?;
            let seed = record(lab, prover.as_ref(), t, t, &Arrow::identity(t), recorded, key)?;
            let pool = pool.iter().map(|(s, a)| record(lab, prover.as_ref(), t, s, a, recorded, key)).collect::<Result<Vec<_>>>()?;
            let online = online.variants.iter().map(|v| record(lab, prover.as_ref(), t, &v.statement, &v.arrow, recorded, key)).collect::<Result<Vec<_>>>()?;
            Ok(StatementData { seed, pool, online })
        })
        .collect();
    let data: Vec<StatementData> = data.into_iter().collect::<Result<_>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[13]));
    let nb = budgets.len();
    // [budget][metric: 0 exact, 1 recorded] selection means
    let mut random = vec![[Vec::new(), Vec::new()]; nb];
    let mut controlled = vec![[Vec::new(), Vec::new()]; nb];
    for _ in 0..exp.selections {
        let mut sums_r = vec![[0.0; 2]; nb];
        let mut sums_c = vec![[0.0; 2]; nb];
        for d in &data {
            let one = pick_one(&d.pool, &mut rng).unwrap_or(d.seed);
            let several = pick_several(&d.pool, k, &mut rng).unwrap_or_else(|| vec![d.seed; k]);
            for (b, &n) in budgets.iter().enumerate() {
                sums_r[b][0] += 1.0 - miss_exact(&one, n);
                sums_r[b][1] += 1.0 - miss_recorded(&one, recorded, n)?;
                let (mut me, mut mr) = (1.0, 1.0);
                for r in &several {
                    me *= miss_exact(r, n / k);
                    mr *= miss_recorded(r, recorded, n / k)?;
                }
                sums_c[b][0] += 1.0 - me;
                sums_c[b][1] += 1.0 - mr;
            }
        }
        let m = data.len() as f64;
        for b in 0..nb {
            for x in 0..2 {
                random[b][x].push(sums_r[b][x] / m);
                controlled[b][x].push(sums_c[b][x] / m);
            }
        }
    }

    let mut rows = Vec::new();
    let mut out = Outcome::default();
    for (b, &n) in budgets.iter().enumerate() {
        let mut seed = [0.0; 2];
        let mut online = [0.0; 2];
        for d in &data {
            seed[0] += 1.0 - miss_exact(&d.seed, n);
            seed[1] += pass_at_k(recorded as u64, d.seed.successes, n as u64)?;
            let slots: Vec<Record> = (0..k).map(|j| d.online[j % d.online.len()]).collect();
            online[0] += 1.0 - slots.iter().map(|r| miss_exact(r, n / k)).product::<f64>();
            let pairs: Vec<(u64, u64)> = slots.iter().map(|r| (recorded as u64, r.successes)).collect();
            online[1] += pass_ens_at_k(&pairs, n as u64)?;
        }
        let m = data.len() as f64;
        for (x, metric) in ["exact", "recorded"].iter().enumerate() {
            let (rm, rs) = mean_std(&random[b][x]);
            let (cm, cs) = mean_std(&controlled[b][x]);
            let vals = [(seed[x] / m, 0.0), (rm, rs), (cm, cs), (online[x] / m, 0.0)];
            for (mode, (v, s)) in MODES.iter().zip(vals) {
                rows.push(vec![n.to_string(), mode.to_string(), num(v), num(s), metric.to_string(), exp.selections.to_string()]);
            }
            out.check(&format!("controlled>=random/{metric}/N={n}"), cm >= rm, format!("controlled {cm:.6} vs random {rm:.6}"));
            out.check(&format!("test-time>=random/{metric}/N={n}"), vals[3].0 >= rm, format!("test-time {:.6} vs random {rm:.6}", vals[3].0));
        }
    }
    let detail: Vec<Vec<String>> = data
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mean = |v: &[Record]| if v.is_empty() { 0.0 } else { v.iter().map(|r| r.rate).sum::<f64>() / v.len() as f64 };
            vec![i.to_string(), d.pool.len().to_string(), d.online.len().to_string(), num(d.seed.rate), num(mean(&d.pool)), num(mean(&d.online))]
        })
        .collect();
    out.file("passk.csv", csv(&["k", "mode", "value", "std", "metric", "selections"], &rows));
    out.file("eval_statements.csv", csv(&["statement", "pool", "online", "seed_rate", "pool_mean_rate", "online_mean_rate"], &detail));
    Ok(out)
}

fn pick_one(pool: &[Record], rng: &mut dyn RngCore) -> Option<Record> {
    (!pool.is_empty()).then(|| pool[rng.random_range(0..pool.len())])
}

/// `k` without replacement, or with replacement when the pool is smaller.
fn pick_several(pool: &[Record], k: usize, rng: &mut dyn RngCore) -> Option<Vec<Record>> {
    if pool.is_empty() {
        return None;
    }
    if pool.len() < k {
        return Some((0..k).map(|_| pool[rng.random_range(0..pool.len())]).collect());
    }
    let mut idx: Vec<usize> = (0..pool.len()).collect();
    for i in 0..k {
        let j = rng.random_range(i..idx.len());
        idx.swap(i, j);
    }
    Some(idx[..k].iter().map(|&i| pool[i]).collect())
}

const CELL_SHAPES: [(usize, usize); 10] = [(1, 1), (2, 2), (2, 4), (3, 3), (2, 5), (3, 6), (4, 4), (2, 3), (3, 7), (4, 8)];

/// The first ten corpus statements whose depth-1 class has two or more
/// members and a mean exact rate in `[0.02, 0.98]`, paired with fixed
/// `(K, N)` shapes.
pub fn pick_consistency_cells(lab: &Lab) -> Result<Vec<ConsistencyCell>> {
    let prover = lab.prover()?;
    let mut cells = Vec::new();
    for (i, t) in lab.corpus.iter().enumerate() {
        if cells.len() == CELL_SHAPES.len() {
            break;
        }
        let class = lab.classes.equivalence_class(t, 1)?;
        if class.len() < 2 {
            continue;
        }
        let rates: Vec<f64> = class.statements().map(|m| lab.rate(prover.as_ref(), m)).collect::<Result<_>>()?;
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        if (0.02..=0.98).contains(&mean) {
            let (k, n) = CELL_SHAPES[cells.len()];
            cells.push(ConsistencyCell { statement: i, k, n });
        }
    }
    Ok(cells)
}

pub fn consistency_cells(lab: &Lab) -> Result<Vec<ConsistencyCell>> {
    if lab.config.experiment.consistency_cells.is_empty() {
        pick_consistency_cells(lab)
    } else {
        Ok(lab.config.experiment.consistency_cells.clone())
    }
}

pub(super) fn consistency(lab: &Lab) -> Result<Outcome> {
    let exp = &lab.config.experiment;
    let reps = exp.consistency_reps;
    let cells = consistency_cells(lab)?;
    let prover = lab.prover()?;
    let results: Vec<Result<Vec<String>>> = cells
        .par_iter()
        .enumerate()
        .map(|(c, cell)| {
            let t = lab.corpus.get(cell.statement).ok_or_else(|| anyhow::anyhow!("cell {c}: no statement {}", cell.statement))?;
            let class = lab.classes.equivalence_class(t, 1)?;
            let rates: Vec<f64> = class.statements().map(|m| lab.rate(prover.as_ref(), m)).collect::<Result<_>>()?;
            let sampler = ExhaustiveSampler::new(&lab.classes, class, true);
            let anchor = sampler.position(t).expect("root is a member");
            let exact = expected_success_exact(&rates, &SubsetLaw::Anchored(anchor), cell.k, cell.n)?;
            let mut runner = EnsembleRunner::new(&lab.library, prover.as_ref());
            let mut hits = 0u64;
            for r in 0..reps {
                let cfg = EnsembleConfig::new(cell.k, cell.n, derive_seed(exp.seed, &[20, c as u64, r as u64]))?;
                let o = runner.run(t, &sampler, &cfg)?;
                if let Some(p) = &o.proof {
                    lab.record_proof(t, p);
                    hits += 1;
                }
            }
            let freq = hits as f64 / reps as f64;
            let sigma = (exact * (1.0 - exact) / reps as f64).sqrt();
            let pass = if sigma == 0.0 { freq == exact } else { (freq - exact).abs() <= 3.0 * sigma };
            Ok(vec![c.to_string(), t.canonical(), rates.len().to_string(), cell.k.to_string(), cell.n.to_string(), num(exact), num(freq), format!("{sigma:e}"), pass.to_string()])
        })
        .collect();
    let rows: Vec<Vec<String>> = results.into_iter().collect::<Result<_>>()?;
    let mut out = Outcome::default();
    let ok = rows.iter().filter(|r| r[8] == "true").count();
    out.check("cells-found", rows.len() == CELL_SHAPES.len() || !exp.consistency_cells.is_empty(), format!("{} cells", rows.len()));
    out.check("run-vs-exact-3sigma", ok == rows.len(), format!("{ok}/{} cells within 3 sigma at {reps} repetitions", rows.len()));
    out.file("consistency.csv", csv(&["cell", "statement", "class_size", "k", "n", "exact", "empirical", "sigma", "pass"], &rows));
    Ok(out)
}

/// Fraction of trials in which `k` of `n` attempts, drawn without
/// replacement, include one of the first `c`.
fn subsample_hits(n: usize, c: usize, k: usize, trials: usize, rng: &mut dyn RngCore) -> u64 {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut hits = 0;
    for _ in 0..trials {
        let mut hit = false;
        for i in 0..k {
            let j = rng.random_range(i..n);
            idx.swap(i, j);
            hit |= idx[i] < c;
        }
        hits += hit as u64;
    }
    hits
}

pub(super) fn pass_at_k_suite(lab: &Lab) -> Result<Outcome> {
    let exp = &lab.config.experiment;
    let mut out = Outcome::default();
    let a = pass_at_k(4, 2, 2)?;
    let b = pass_ens_at_k(&[(4, 2), (4, 2)], 4)?;
    out.check("worked-pass-at-k", a == 5.0 / 6.0, format!("{a}"));
    out.check("worked-pass-ens", b == 35.0 / 36.0, format!("{b}"));
    let trials = 100_000;
    let cases = [(4usize, 2usize, 2usize), (10, 3, 4), (20, 1, 5), (64, 5, 8), (64, 0, 8), (16, 16, 3)];
    let mut rows = Vec::new();
    let mut ok = true;
    for (i, &(n, c, k)) in cases.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[30, i as u64]));
        let hits = subsample_hits(n, c, k, trials, &mut rng);
        let p = pass_at_k(n as u64, c as u64, k as u64)?;
        let f = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let pass = if sigma == 0.0 { f == p } else { (f - p).abs() <= 3.0 * sigma };
        ok &= pass;
        rows.push(vec![format!("pass@k({n},{c},{k})"), num(p), num(f), format!("{sigma:e}"), pass.to_string()]);
    }
    let ens: [(&[(u64, u64)], u64); 2] = [(&[(4, 2), (4, 2)], 4), (&[(8, 1), (8, 3), (8, 0), (8, 2)], 8)];
    for (i, (pairs, k)) in ens.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(exp.seed, &[31, i as u64]));
        let per = (*k as usize) / pairs.len();
        let mut hits = 0u64;
        for _ in 0..trials {
            let any = pairs.iter().any(|&(n, c)| subsample_hits(n as usize, c as usize, per, 1, &mut rng) == 1);
            hits += any as u64;
        }
        let p = pass_ens_at_k(pairs, *k)?;
        let f = hits as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        let pass = if sigma == 0.0 { f == p } else { (f - p).abs() <= 3.0 * sigma };
        ok &= pass;
        rows.push(vec![format!("pass_ens@{k}({pairs:?})"), num(p), num(f), format!("{sigma:e}"), pass.to_string()]);
    }
    out.check("subsampling-3sigma", ok, format!("{} estimators at {trials} trials", rows.len()));
    out.file("passk_mc.csv", csv(&["estimator", "exact", "empirical", "sigma", "pass"], &rows));
    Ok(out)
}
