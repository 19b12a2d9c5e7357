//! Divisor-chain monotonicity for priors, and gap decay of the anchored
//! exhaustive ensemble over bounded classes.

use anyhow::Result;
use rayon::prelude::*;

use rwcat_core::ensemble::{check_holder, divisors, expected_success_exact, prior_expected_success, Prior, SubsetLaw, EXACT_TOLERANCE};

use super::{Lab, Outcome};
use crate::formats::{csv, num};

fn prior_label(p: &Prior) -> String {
    let atoms: Vec<String> = p.atoms().iter().map(|(v, w)| format!("{v}:{w:.4}")).collect();
    format!("{{{}}}", atoms.join(" "))
}

pub(super) fn monotonicity(lab: &Lab) -> Result<Outcome> {
    let cfg = &lab.config.experiment;
    let mut out = Outcome::default();
    let mut chain_rows = Vec::new();
    let mut holder_rows = Vec::new();
    let (mut monotone, mut strict, mut holder_ok, mut corollary) = (true, true, true, true);
    let mut notes = Vec::new();
    for atoms in &cfg.priors {
        let prior = Prior::new(atoms.iter().map(|a| (a[0], a[1])).collect())?;
        let label = prior_label(&prior);
        for &n in &cfg.n_list {
            let ds = divisors(n);
            let mut chain = Vec::new();
            for &k in &ds {
                let s = prior_expected_success(&prior, k, n)?;
                let miss = prior.ensemble_miss(k, n)?;
                chain_rows.push(vec![label.clone(), n.to_string(), k.to_string(), num(s), format!("{miss:e}")]);
                chain.push((k, s, miss));
            }
            for w in chain.windows(2) {
                let ((k, s, _), (k2, s2, _)) = (w[0], w[1]);
                let h = check_holder(&prior, n, k, k2)?;
                holder_rows.push(vec![
                    label.clone(),
                    n.to_string(),
                    k.to_string(),
                    k2.to_string(),
                    format!("{:e}", h.lhs),
                    format!("{:e}", h.rhs),
                    h.pass.to_string(),
                    h.strict_expected.to_string(),
                    h.strict.to_string(),
                ]);
                holder_ok &= h.pass;
                monotone &= s2 >= s - EXACT_TOLERANCE;
                if h.strict_expected && !h.strict {
                    strict = false;
                    notes.push(format!("{label} N={n} K={k}->{k2} not strict"));
                }
                if !h.strict_expected && h.lhs != h.rhs && (h.lhs - h.rhs).abs() > EXACT_TOLERANCE {
                    strict = false;
                    notes.push(format!("{label} N={n} K={k}->{k2} constant prior but unequal"));
                }
            }
            let base = chain[0].1;
            corollary &= chain.iter().all(|c| c.1 >= base - EXACT_TOLERANCE);
        }
    }
    let half = Prior::uniform(&[0.0, 1.0])?;
    let (w1, w4) = (prior_expected_success(&half, 1, 4)?, prior_expected_success(&half, 4, 4)?);
    out.check("divisor-chain-monotone", monotone, format!("{} chain links", holder_rows.len()));
    out.check("strict-iff-nonconstant", strict, if notes.is_empty() { "strict for non-constant priors, equality for constant ones".into() } else { notes.join("; ") });
    out.check("holder", holder_ok, "every adjacent divisor pair");
    out.check("corollary-k1", corollary, "K = 1 is the minimum of every chain");
    out.check("worked-value", w1 == 0.5 && w4 == 0.9375, format!("K=1: {w1}, K=4: {w4}"));
    out.file("monotonicity.csv", csv(&["prior", "n", "k", "expected_success", "miss"], &chain_rows));
    out.file("holder.csv", csv(&["prior", "n", "k", "k2", "lhs", "rhs", "pass", "strict_expected", "strict"], &holder_rows));
    Ok(out)
}

/// `(K, n(K), gap)` rows for one class: `gap` is the spread over anchors of
/// the exact anchored-ensemble success.
pub fn gap_curve(rates: &[f64], ks: &[usize], exponent: u32) -> Result<Vec<(usize, usize, f64)>> {
    let mut rows = Vec::new();
    for &k in ks {
        let n = k.pow(exponent).max(k);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in 0..rates.len() {
            let v = expected_success_exact(rates, &SubsetLaw::Anchored(a), k, n)?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        rows.push((k, n, hi - lo));
    }
    Ok(rows)
}

pub(super) fn limit_invariance(lab: &Lab) -> Result<Outcome> {
    let cfg = &lab.config.experiment;
    let prover = lab.prover()?;
    let mut jobs = Vec::new();
    for (i, t) in lab.corpus.iter().enumerate() {
        for &d in &cfg.class_depths {
            jobs.push((i, t, d));
        }
    }
    let results: Vec<Result<(usize, usize, usize, f64, Vec<(usize, usize, f64)>)>> = jobs
        .par_iter()
        .map(|&(i, t, d)| {
            let class = lab.classes.equivalence_class(t, d)?;
            let rates: Vec<f64> = class.statements().map(|m| lab.rate(prover.as_ref(), m)).collect::<Result<_>>()?;
            let size = rates.len();
            let ks: Vec<usize> = if cfg.k_sweep.is_empty() {
                (1..=size).collect()
            } else {
                let mut v: Vec<usize> = cfg.k_sweep.iter().copied().filter(|&k| k >= 1 && k < size).collect();
                v.push(size);
                v
            };
            let range = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max) - rates.iter().copied().fold(f64::INFINITY, f64::min);
            Ok((i, d, size, range, gap_curve(&rates, &ks, cfg.n_exponent)?))
        })
        .collect();
    let mut out = Outcome::default();
    let mut gap_rows = Vec::new();
    let mut class_rows = Vec::new();
    let (mut worst, mut monotone_classes, mut classes) = (0.0f64, 0, 0);
    for r in results {
        let (i, d, size, range, curve) = r?;
        let last = curve.last().map(|c| c.2).unwrap_or(0.0);
        let monotone = curve.windows(2).all(|w| w[1].2 <= w[0].2 + 1e-12);
        worst = worst.max(last);
        classes += 1;
        monotone_classes += monotone as usize;
        for (k, n, g) in &curve {
            gap_rows.push(vec![i.to_string(), d.to_string(), size.to_string(), k.to_string(), n.to_string(), format!("{g:e}")]);
        }
        class_rows.push(vec![i.to_string(), d.to_string(), size.to_string(), num(range), format!("{:e}", curve[0].2), format!("{last:e}"), monotone.to_string()]);
    }
    out.check(
        "full-class-gap",
        worst <= cfg.limit_tolerance,
        format!("largest gap at K = |class| over {classes} classes: {worst:e} (tolerance {:e})", cfg.limit_tolerance),
    );
    out.file("limit_gaps.csv", csv(&["statement", "depth", "class_size", "k", "n", "gap"], &gap_rows));
    out.file(
        "limit_classes.csv",
        csv(&["statement", "depth", "class_size", "rate_range", "gap_k1", "gap_full", "non_increasing"], &class_rows),
    );
    out.file("limit_summary.csv", csv(&["classes", "non_increasing", "worst_full_gap"], &[vec![classes.to_string(), monotone_classes.to_string(), format!("{worst:e}")]]));
    Ok(out)
}
