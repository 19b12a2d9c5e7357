//! Text formats: corpora, surprise models, variant sets and rate tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};

use rwcat_core::parse::parse_statement_with;
use rwcat_core::sampler::{SurpriseModel, VariantSet};
use rwcat_core::{Limits, Statement};

pub const MODEL_HEADER: &str = "rwcat-surprise 1";
pub const VARIANTS_HEADER: &str = "rwcat-variants 1";

/// One statement per line; blank lines and `#` comments are skipped.
pub fn read_corpus(text: &str, limits: &Limits) -> Result<Vec<Statement>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_statement_with(line, limits).with_context(|| format!("corpus line {}", i + 1))?);
    }
    Ok(out)
}

pub fn write_corpus(corpus: &[Statement]) -> String {
    let mut s = format!("# {} statements\n", corpus.len());
    for t in corpus {
        s.push_str(&t.canonical());
        s.push('\n');
    }
    s
}

/// ```text
/// rwcat-surprise 1
/// order <n>
/// alpha <f64>
/// vocab <count>
/// <token>            (one per line)
/// counts <count>
/// <c> <tok> ... <tok>
/// ```
pub fn write_model(m: &SurpriseModel) -> String {
    let mut s = String::new();
    writeln!(s, "{MODEL_HEADER}").unwrap();
    writeln!(s, "order {}", m.order()).unwrap();
    writeln!(s, "alpha {}", m.alpha()).unwrap();
    writeln!(s, "vocab {}", m.vocab().len()).unwrap();
    for w in m.vocab() {
        writeln!(s, "{w}").unwrap();
    }
    let counts = m.counts();
    writeln!(s, "counts {}", counts.len()).unwrap();
    for (gram, c) in counts {
        writeln!(s, "{c} {}", gram.join(" ")).unwrap();
    }
    s
}

pub fn read_model(text: &str) -> Result<SurpriseModel> {
    let mut lines = text.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, &str)> { lines.next().map(|(i, l)| (i + 1, l)).with_context(|| format!("model file ends before {what}")) };
    let (_, header) = next("the header")?;
    if header != MODEL_HEADER {
        bail!("not a surprise model (expected `{MODEL_HEADER}`)");
    }
    let field = |line: (usize, &str), key: &str| -> Result<String> {
        let (n, l) = line;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .map(str::to_string)
            .with_context(|| format!("model line {n}: expected `{key} <value>`"))
    };
    let order: usize = field(next("order")?, "order")?.parse().context("model order")?;
    let alpha: f64 = field(next("alpha")?, "alpha")?.parse().context("model alpha")?;
    let nv: usize = field(next("vocab")?, "vocab")?.parse().context("vocabulary size")?;
    let mut vocab = Vec::with_capacity(nv);
    for _ in 0..nv {
        vocab.push(next("a vocabulary entry")?.1.to_string());
    }
    let nc: usize = field(next("counts")?, "counts")?.parse().context("count total")?;
    let mut counts = Vec::with_capacity(nc);
    for _ in 0..nc {
        let (n, l) = next("a count line")?;
        let mut it = l.split(' ');
        let c: u64 = it.next().unwrap_or("").parse().with_context(|| format!("model line {n}: bad count"))?;
        counts.push((it.map(str::to_string).collect(), c));
    }
    Ok(SurpriseModel::from_parts(order, alpha, vocab, counts)?)
}

/// ```text
/// rwcat-variants 1
/// seed <statement>
/// short <bool>
/// <index>\t<surprise>\t<statement>\t<arrow steps joined by "; ">
/// ```
pub fn write_variant_set(v: &VariantSet) -> String {
    let mut s = String::new();
    writeln!(s, "{VARIANTS_HEADER}").unwrap();
    writeln!(s, "seed {}", v.seed).unwrap();
    writeln!(s, "short {}", v.short).unwrap();
    for (i, var) in v.variants.iter().enumerate() {
        let steps: Vec<String> = var.arrow.steps.iter().map(|a| a.to_string()).collect();
        writeln!(s, "{i}\t{:.12}\t{}\t{}", var.surprise, var.statement, steps.join("; ")).unwrap();
    }
    s
}

/// `<rate>\t<statement>` per line, keyed by canonical text.
pub fn read_rate_table(text: &str, limits: &Limits) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (rate, stmt) = line.split_once('\t').with_context(|| format!("table line {}: expected `<rate>\\t<statement>`", i + 1))?;
        let rate: f64 = rate.trim().parse().with_context(|| format!("table line {}: bad rate", i + 1))?;
        if !(0.0..=1.0).contains(&rate) {
            bail!("table line {}: rate {rate} outside [0, 1]", i + 1);
        }
        let t = parse_statement_with(stmt, limits).with_context(|| format!("table line {}", i + 1))?;
        out.insert(t.canonical(), rate);
    }
    Ok(out)
}

/// CSV text from a header and rows.
pub fn csv(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// One JSON object per line.
pub fn jsonl<T: serde::Serialize>(records: &[T]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("record serializes"));
        s.push('\n');
    }
    s
}

/// Fixed-precision float text for result files.
pub fn num(x: f64) -> String {
    format!("{x:.12}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rwcat_core::parse_statement;

    #[test]
    fn corpus_round_trip() {
        let text = "# c\n\nthm a (x:0..3) (h0: x + 1 = 3) : x = 2\nthm b () : 1 + 1 = 2\n";
        let c = read_corpus(text, &Limits::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(read_corpus(&write_corpus(&c), &Limits::default()).unwrap(), c);
        let err = read_corpus("thm a : x = ", &Limits::default()).unwrap_err();
        assert!(format!("{err:#}").contains("line 1"));
    }

    #[test]
    fn model_round_trip() {
        let c = vec![parse_statement("thm a (x:0..3) (h0: x + 1 = 3) : x = 2").unwrap(), parse_statement("thm b () : 1 + 1 = 2").unwrap()];
        let m = SurpriseModel::train(3, 0.5, &c).unwrap();
        let text = write_model(&m);
        let back = read_model(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(write_model(&back), text);
        assert!(read_model("nope").is_err());
    }

    #[test]
    fn rate_table() {
        let t = read_rate_table("0.25\tthm a () : 1 = 1\n", &Limits::default()).unwrap();
        assert_eq!(t.values().copied().collect::<Vec<_>>(), vec![0.25]);
        assert!(read_rate_table("1.5\tthm a () : 1 = 1\n", &Limits::default()).is_err());
    }

    #[test]
    fn csv_quotes() {
        assert_eq!(csv(&["a", "b"], &[vec!["1".into(), "x, y".into()]]), "a,b\n1,\"x, y\"\n");
    }
}
