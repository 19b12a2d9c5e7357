//! Success-rate spread over classes for the text and sequential provers.

use anyhow::Result;
use rayon::prelude::*;

use rwcat_core::prover::Prover;
use rwcat_core::Statement;

use super::laws::renamed;
use super::{Lab, Outcome};
use crate::formats::{csv, num};

fn range(lab: &Lab, prover: &dyn Prover, members: &[Statement]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for m in members {
        let s = lab.rate(prover, m)?;
        lo = lo.min(s);
        hi = hi.max(s);
    }
    Ok((lo, hi))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub(super) fn run(lab: &Lab) -> Result<Outcome> {
    let depth = lab.config.experiment.spread_depth;
    let text = lab.text_prover()?;
    let seq = lab.sequential_prover()?;
    let provers: [&dyn Prover; 2] = [text.as_ref(), seq.as_ref()];
    let rows: Vec<Result<Vec<Vec<String>>>> = lab
        .corpus
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let class: Vec<Statement> = lab.classes.equivalence_class(t, depth)?.statements().cloned().collect();
            let same_state = renamed(t);
            let mut rows = Vec::new();
            for p in provers {
                for (family, members) in [("class", &class), ("state-equal", &same_state)] {
                    let (lo, hi) = range(lab, p, members)?;
                    rows.push(vec![i.to_string(), family.into(), members.len().to_string(), p.label(), num(lo), num(hi), format!("{:e}", hi - lo)]);
                }
            }
            Ok(rows)
        })
        .collect();
    let mut all = Vec::new();
    for r in rows {
        all.extend(r?);
    }
    let ranges = |prover: &str, family: &str| -> Vec<f64> {
        all.iter().filter(|r| r[3] == prover && r[1] == family && r[2] != "1").map(|r| r[6].parse::<f64>().expect("own output")).collect()
    };
    let mut out = Outcome::default();
    let text_class = ranges(&text.label(), "class");
    let seq_class = ranges(&seq.label(), "class");
    let seq_same = ranges(&seq.label(), "state-equal");
    let text_same = ranges(&text.label(), "state-equal");
    let (mt, ms) = (median(text_class.clone()), median(seq_class.clone()));
    out.check("text-median-range-positive", mt > 0.0, format!("median range {mt:e} over {} classes with 2+ members", text_class.len()));
    out.check(
        "sequential-state-equal-zero",
        seq_same.iter().all(|&r| r == 0.0),
        format!("{} state-equal classes, max range {:e}", seq_same.len(), seq_same.iter().copied().fold(0.0, f64::max)),
    );
    let w = super::laws::witness(lab)?;
    out.check("witness-spread-positive", w.text_spread > 0.0, format!("text spread {:e} on the documented class", w.text_spread));
    let summary = vec![
        vec![text.label(), "class".into(), text_class.len().to_string(), format!("{mt:e}"), text_class.iter().filter(|&&r| r > 0.0).count().to_string()],
        vec![seq.label(), "class".into(), seq_class.len().to_string(), format!("{ms:e}"), seq_class.iter().filter(|&&r| r > 0.0).count().to_string()],
        vec![text.label(), "state-equal".into(), text_same.len().to_string(), format!("{:e}", median(text_same.clone())), text_same.iter().filter(|&&r| r > 0.0).count().to_string()],
        vec![seq.label(), "state-equal".into(), seq_same.len().to_string(), format!("{:e}", median(seq_same.clone())), seq_same.iter().filter(|&&r| r > 0.0).count().to_string()],
    ];
    out.file("spread.csv", csv(&["statement", "family", "members", "prover", "min", "max", "range"], &all));
    out.file("spread_summary.csv", csv(&["prover", "family", "classes", "median_range", "positive"], &summary));
    Ok(out)
}
