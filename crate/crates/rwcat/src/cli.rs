//! Command-line surface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use rwcat_core::corpus::generate_corpus;
use rwcat_core::ensemble::{EnsembleConfig, EnsembleRunner};
use rwcat_core::hash::derive_seed;
use rwcat_core::parse::parse_statement_with;
use rwcat_core::prover::{find_proof, SearchOutcome};
use rwcat_core::sampler::{ExhaustiveSampler, RankedSampler, VariantSampler};
use rwcat_core::Statement;

use crate::config::Config;
use crate::formats;
use crate::lab::{Lab, Outcome, KINDS};
use crate::manifest::{RunManifest, RunWriter};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "rwcat", version, about = "Rewriting categories, stochastic provers and rewriting ensembles")]
pub struct Cli {
    /// Configuration file, or `default`.
    #[arg(long, global = true, default_value = "default")]
    pub config: String,
    /// Root seed for experiments and ensembles (the corpus seed for `gen-corpus`).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory receiving run directories.
    #[arg(long, global = true, default_value = "runs")]
    pub out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Cmd {
    /// Generate a corpus of true statements.
    GenCorpus {
        #[arg(long)]
        size: Option<usize>,
    },
    /// List one-step rewrites and the bounded class of a statement.
    Rewrite {
        /// Statement text, or the name of a corpus statement.
        statement: String,
        #[arg(long, default_value_t = 1)]
        depth: usize,
    },
    /// Exact success rate, sampled attempts and a searched proof.
    Prove {
        statement: String,
        #[arg(long, default_value_t = 64)]
        attempts: usize,
    },
    /// One (K, N) rewriting ensemble run.
    Ensemble {
        statement: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        /// `ranked` or `exhaustive`.
        #[arg(long)]
        sampler: Option<String>,
    },
    /// Run an experiment suite.
    Simulate {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(KINDS))]
        kind: String,
    },
    /// Summarize a run directory.
    Report { dir: PathBuf },
    /// Re-execute a run from its manifest and compare results.
    Rerun { dir: PathBuf },
}

impl Cmd {
    /// The arguments that reproduce this command.
    pub fn argv(&self) -> Vec<String> {
        let mut v = Vec::new();
        let opt = |v: &mut Vec<String>, name: &str, x: Option<String>| {
            if let Some(x) = x {
                v.push(format!("--{name}"));
                v.push(x);
            }
        };
        match self {
            Cmd::GenCorpus { size } => {
                v.push("gen-corpus".into());
                opt(&mut v, "size", size.map(|s| s.to_string()));
            }
            Cmd::Rewrite { statement, depth } => {
                v.extend(["rewrite".into(), statement.clone()]);
                opt(&mut v, "depth", Some(depth.to_string()));
            }
            Cmd::Prove { statement, attempts } => {
                v.extend(["prove".into(), statement.clone()]);
                opt(&mut v, "attempts", Some(attempts.to_string()));
            }
            Cmd::Ensemble { statement, k, n, sampler } => {
                v.extend(["ensemble".into(), statement.clone()]);
                opt(&mut v, "k", k.map(|x| x.to_string()));
                opt(&mut v, "n", n.map(|x| x.to_string()));
                opt(&mut v, "sampler", sampler.clone());
            }
            Cmd::Simulate { kind } => v.extend(["simulate".into(), kind.clone()]),
            Cmd::Report { dir } => v.extend(["report".into(), dir.display().to_string()]),
            Cmd::Rerun { dir } => v.extend(["rerun".into(), dir.display().to_string()]),
        }
        v
    }
}

/// Parse and run; returns the exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(j).build_global();
    }
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.cmd {
        Cmd::Report { dir } => report(dir),
        Cmd::Rerun { dir } => rerun(dir, &cli.out),
        cmd => {
            let (mut config, base) = Config::load(&cli.config)?;
            apply_seed(&mut config, cmd, cli.seed);
            let (dir, m) = execute(cmd, config, base.as_deref(), cli.seed, &cli.out)?;
            println!("{}", dir.display());
            Ok(if m.status == "pass" { EXIT_OK } else { EXIT_CHECK })
        }
    }
}

fn apply_seed(config: &mut Config, cmd: &Cmd, seed: Option<u64>) {
    if let Some(s) = seed {
        if matches!(cmd, Cmd::GenCorpus { .. }) {
            config.corpus.seed = s;
        } else {
            config.experiment.seed = s;
            config.ensemble.seed = s;
        }
    }
}

fn seeds(config: &Config) -> BTreeMap<String, u64> {
    [
        ("corpus", config.corpus.seed),
        ("experiment", config.experiment.seed),
        ("ensemble", config.ensemble.seed),
        ("prover", config.prover.seed),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// A statement given as text or as a corpus name.
fn statement(lab: &Lab, text: &str) -> Result<Statement> {
    if text.trim_start().starts_with("thm") {
        return Ok(parse_statement_with(text, &lab.config.limits())?);
    }
    lab.corpus.iter().find(|s| s.name == text).cloned().with_context(|| format!("no corpus statement named `{text}`"))
}

/// Run `cmd` into a fresh directory under `out`.
pub fn execute(cmd: &Cmd, config: Config, base: Option<&Path>, seed: Option<u64>, out: &Path) -> Result<(PathBuf, RunManifest)> {
    let started = crate::manifest::now();
    let mut snapshot = config.clone();
    snapshot.rules.file = "rules.txt".into();
    let mut inputs: Vec<(&str, String)> = Vec::new();
    let outcome = if let Cmd::GenCorpus { size } = cmd {
        let library = config.library(base)?;
        let mut cfg = config.corpus.generator();
        if let Some(s) = size {
            cfg.size = *s;
            snapshot.corpus.size = *s;
        }
        let corpus = generate_corpus(&library, &cfg, &mut ChaCha8Rng::seed_from_u64(config.corpus.seed))?;
        inputs.push(("rules.txt", library.rules.to_text()));
        let mut o = Outcome::default();
        o.check("generated", corpus.len() == cfg.size, format!("{} statements", corpus.len()));
        o.file("corpus.txt", formats::write_corpus(&corpus));
        o.file("checks.jsonl", formats::jsonl(&o.checks));
        o
    } else {
        let lab = Lab::new(config, base)?;
        inputs.push(("rules.txt", lab.rules_text.clone()));
        inputs.push(("corpus.txt", lab.corpus_text.clone()));
        inputs.push(("model.txt", lab.model_text.clone()));
        snapshot.corpus.file = "corpus.txt".into();
        snapshot.model.file = "model.txt".into();
        if !lab.config.prover.table.is_empty() {
            let path = crate::config::resolve(base, &lab.config.prover.table);
            inputs.push(("table.txt", std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?));
            snapshot.prover.table = "table.txt".into();
        }
        let o = match cmd {
            Cmd::Simulate { kind } => lab.run(kind)?,
            Cmd::Rewrite { statement: s, depth } => rewrite(&lab, &statement(&lab, s)?, *depth)?,
            Cmd::Prove { statement: s, attempts } => prove(&lab, &statement(&lab, s)?, *attempts)?,
            Cmd::Ensemble { statement: s, k, n, sampler } => ensemble(&lab, &statement(&lab, s)?, *k, *n, sampler.as_deref())?,
            _ => unreachable!("handled by dispatch"),
        };
        if !matches!(cmd, Cmd::Simulate { .. }) {
            lab.finish(o)
        } else {
            o
        }
    };
    let mut w = RunWriter::create(out, cmd.argv(), seed, seeds(&snapshot), started)?;
    let config_text = snapshot.to_toml();
    w.input("config.toml", &config_text)?;
    for (name, text) in &inputs {
        w.input(name, text)?;
    }
    w.set_config(config_text);
    for (name, text) in &outcome.files {
        w.result(name, text)?;
    }
    w.finish(if outcome.passed() { "pass" } else { "fail" })
}

fn rewrite(lab: &Lab, t: &Statement, depth: usize) -> Result<Outcome> {
    let rows: Vec<Vec<String>> = lab.library.neighbors(t, usize::MAX).into_iter().map(|(a, s)| vec![a.to_string(), s.canonical()]).collect();
    let class = lab.classes.equivalence_class(t, depth)?;
    let members: Vec<Vec<String>> = class
        .members
        .iter()
        .map(|(s, a)| vec![s.canonical(), a.steps.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")])
        .collect();
    let mut o = Outcome::default();
    o.check("class-contains-seed", class.contains(t), format!("{} members at depth {depth}", class.len()));
    o.file("neighbors.csv", formats::csv(&["step", "statement"], &rows));
    o.file("class.csv", formats::csv(&["statement", "arrow"], &members));
    Ok(o)
}

fn prove(lab: &Lab, t: &Statement, attempts: usize) -> Result<Outcome> {
    let prover = lab.prover()?;
    let mut session = prover.session(&lab.library, t);
    let exact = session.success_probability(prover.length(), lab.config.experiment.exact_budget)?;
    let mut successes = 0;
    let mut first = None;
    for j in 0..attempts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(lab.config.experiment.seed, &[40, j as u64]));
        let p = session.sample_proof(prover.length(), &mut rng);
        if lab.library.verify_proof(t, &p) {
            lab.record_proof(t, &p);
            successes += 1;
            first.get_or_insert(p);
        }
    }
    let searched = match find_proof(&lab.library, t, prover.length().max(4), lab.config.prover.search_budget) {
        SearchOutcome::Found(p) => {
            lab.record_proof(t, &p);
            json!({"found": p.to_string(), "length": p.0.len()})
        }
        SearchOutcome::Exhausted => json!({"found": null, "exhausted": true}),
        SearchOutcome::Budget => json!({"found": null, "exhausted": false}),
    };
    let report = json!({
        "statement": t.canonical(),
        "prover": prover.label(),
        "length": prover.length(),
        "exact_success": exact,
        "attempts": attempts,
        "successes": successes,
        "first_proof": first.map(|p| p.to_string()),
        "search": searched,
    });
    let mut o = Outcome::default();
    o.file("prove.json", serde_json::to_string_pretty(&report)? + "\n");
    Ok(o)
}

fn ensemble(lab: &Lab, t: &Statement, k: Option<usize>, n: Option<usize>, sampler: Option<&str>) -> Result<Outcome> {
    let e = &lab.config.ensemble;
    let mut cfg = EnsembleConfig::new(k.unwrap_or(e.k), n.unwrap_or(e.n), e.seed)?;
    cfg.leftover_to_first = e.leftover_to_first;
    let prover = lab.prover()?;
    let ranked;
    let exhaustive;
    let sampler: &dyn VariantSampler = match sampler.unwrap_or(&e.sampler) {
        "ranked" => {
            ranked = RankedSampler { category: &lab.library, model: &lab.model, config: lab.config.sampler.config()? };
            &ranked
        }
        "exhaustive" => {
            exhaustive = ExhaustiveSampler::from_root(&lab.classes, t, lab.config.sampler.depth, true)?;
            &exhaustive
        }
        other => bail!("unknown sampler `{other}`; expected ranked or exhaustive"),
    };
    let outcome = EnsembleRunner::new(&lab.library, prover.as_ref()).run(t, sampler, &cfg)?;
    if let Some(p) = &outcome.proof {
        lab.record_proof(t, p);
    }
    let variants: Vec<_> = outcome
        .variants
        .iter()
        .map(|v| {
            json!({
                "statement": v.statement.canonical(),
                "arrow": v.arrow.steps.iter().map(ToString::to_string).collect::<Vec<_>>(),
                "attempts": v.attempts,
                "successes": v.successes,
                "lifted": v.lifted.as_ref().map(ToString::to_string),
            })
        })
        .collect();
    let report = json!({
        "seed": t.canonical(),
        "prover": prover.label(),
        "sampler": sampler.name(),
        "k": cfg.k,
        "n": cfg.n,
        "per_variant": cfg.per_variant(),
        "variants": variants,
        "proof": outcome.proof.as_ref().map(ToString::to_string),
    });
    let mut o = Outcome::default();
    o.file("ensemble.json", serde_json::to_string_pretty(&report)? + "\n");
    Ok(o)
}

fn report(dir: &Path) -> Result<i32> {
    let m = RunManifest::read(dir)?;
    println!("run      {}", dir.display());
    println!("command  {}", m.command.join(" "));
    println!("version  {} {}", m.tool, m.version);
    println!("started  {}", m.started);
    println!("finished {}", m.finished);
    let mut intact = true;
    for (name, want) in &m.results {
        let got = std::fs::read(dir.join("results").join(name)).map(|b| crate::manifest::sha256(&b)).unwrap_or_default();
        if &got != want {
            println!("modified {name}");
            intact = false;
        }
    }
    if let Ok(text) = std::fs::read_to_string(dir.join("results/checks.jsonl")) {
        for line in text.lines() {
            let c: serde_json::Value = serde_json::from_str(line)?;
            let mark = if c["pass"].as_bool() == Some(true) { "PASS" } else { "FAIL" };
            println!("{mark} {} {}", c["check"].as_str().unwrap_or(""), c["detail"].as_str().unwrap_or(""));
        }
    }
    println!("status   {}", m.status);
    Ok(if m.status == "pass" && intact { EXIT_OK } else { EXIT_CHECK })
}

/// Re-execute a recorded run from its own inputs; returns the new run
/// directory with the recorded and the fresh manifest.
pub fn replay(dir: &Path, out: &Path) -> Result<(PathBuf, RunManifest, RunManifest)> {
    let m = RunManifest::read(dir)?;
    m.verify_inputs(dir)?;
    let config: Config = toml::from_str(&m.config).context("parsing the recorded configuration")?;
    let argv = std::iter::once("rwcat".to_string()).chain(m.command.iter().cloned());
    let cli = Cli::try_parse_from(argv).context("parsing the recorded command")?;
    if matches!(cli.cmd, Cmd::Report { .. } | Cmd::Rerun { .. }) {
        bail!("recorded command is not a run");
    }
    let inputs = dir.join("inputs");
    let (new_dir, again) = execute(&cli.cmd, config, Some(&inputs), m.seed, out)?;
    Ok((new_dir, m, again))
}

fn rerun(dir: &Path, out: &Path) -> Result<i32> {
    let (new_dir, m, again) = replay(dir, out)?;
    println!("{}", new_dir.display());
    if again.results == m.results {
        println!("identical: {} result files", m.results.len());
        Ok(EXIT_OK)
    } else {
        for name in m.results.keys().chain(again.results.keys()) {
            if m.results.get(name) != again.results.get(name) {
                println!("differs {name}");
            }
        }
        Ok(EXIT_CHECK)
    }
}
