//! Experiment suites over a loaded configuration.

mod eval;
mod laws;
mod limit;
mod spread;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rwcat_core::corpus::generate_corpus;
use rwcat_core::prover::{FeatureSource, Prover};
use rwcat_core::sampler::SurpriseModel;
use rwcat_core::{decide_truth, RewritingCategory, Statement, TacticSeq};

use crate::config::{resolve, Config};
use crate::formats;

pub use eval::{consistency_cells, pick_consistency_cells, MODES};
pub use laws::{random_arrow, renamed, witness, WitnessReport};
pub use limit::gap_curve;

/// Suite names accepted by `simulate`.
pub const KINDS: [&str; 8] = [
    "invariance-spread",
    "limit-invariance",
    "monotonicity",
    "ensemble-eval",
    "equivariance-audit",
    "category-laws",
    "consistency",
    "pass-at-k",
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub check: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(check: &str, pass: bool, detail: impl Into<String>) -> Check {
        Check { check: check.into(), pass, detail: detail.into() }
    }
}

/// Result files (name, contents) and pass/fail checks of one suite.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn file(&mut self, name: &str, contents: String) {
        self.files.push((name.into(), contents));
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check::new(name, pass, detail));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.check == name)
    }

    pub fn contents(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|f| f.0 == name).map(|f| f.1.as_str())
    }
}

#[derive(Debug, Default)]
struct SoundLog {
    proofs: u64,
    failures: Vec<String>,
}

/// Loaded artifacts plus caches shared by the suites.
pub struct Lab {
    pub config: Config,
    pub base: Option<PathBuf>,
    /// Every rule of the library as a generator.
    pub library: RewritingCategory,
    /// The category spanned by `rules.generators`.
    pub classes: RewritingCategory,
    pub corpus: Vec<Statement>,
    pub corpus_text: String,
    pub rules_text: String,
    pub model: SurpriseModel,
    pub model_text: String,
    rates: Mutex<BTreeMap<(String, String), f64>>,
    sound: Mutex<SoundLog>,
}

impl Lab {
    pub fn new(config: Config, base: Option<&Path>) -> Result<Lab> {
        let library = config.library(base)?;
        let classes = config.class_category(base)?;
        let limits = config.limits();
        let corpus = if config.corpus.file.is_empty() {
            let mut rng = ChaCha8Rng::seed_from_u64(config.corpus.seed);
            generate_corpus(&library, &config.corpus.generator(), &mut rng)?
        } else {
            let path = resolve(base, &config.corpus.file);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading corpus {}", path.display()))?;
            formats::read_corpus(&text, &limits)?
        };
        let model = if config.model.file.is_empty() {
            SurpriseModel::train(config.model.order, config.model.alpha, &corpus)?
        } else {
            let path = resolve(base, &config.model.file);
            formats::read_model(&std::fs::read_to_string(&path).with_context(|| format!("reading model {}", path.display()))?)?
        };
        Ok(Lab {
            corpus_text: formats::write_corpus(&corpus),
            rules_text: library.rules.to_text(),
            model_text: formats::write_model(&model),
            base: base.map(Path::to_path_buf),
            config,
            library,
            classes,
            corpus,
            model,
            rates: Mutex::new(BTreeMap::new()),
            sound: Mutex::new(SoundLog::default()),
        })
    }

    /// The configured prover.
    pub fn prover(&self) -> Result<Box<dyn Prover>> {
        let p = &self.config.prover;
        Ok(match p.kind.as_str() {
            "text" => Box::new(p.policy_prover(FeatureSource::Root)?),
            "sequential" => Box::new(p.policy_prover(FeatureSource::State)?),
            "synthetic" => {
                let table = if p.table.is_empty() {
                    None
                } else {
                    let path = resolve(self.base.as_deref(), &p.table);
                    let text = std::fs::read_to_string(&path).with_context(|| format!("reading rate table {}", path.display()))?;
                    Some(formats::read_rate_table(&text, &self.config.limits())?)
                };
                Box::new(p.synthetic(table))
            }
            other => bail!("unknown prover kind `{other}`"),
        })
    }

    pub fn text_prover(&self) -> Result<Box<dyn Prover>> {
        Ok(Box::new(self.config.prover.policy_prover(FeatureSource::Root)?))
    }

    pub fn sequential_prover(&self) -> Result<Box<dyn Prover>> {
        Ok(Box::new(self.config.prover.policy_prover(FeatureSource::State)?))
    }

    /// Exact success rate at the prover's own length, cached by (prover, text).
    pub fn rate(&self, prover: &dyn Prover, t: &Statement) -> Result<f64> {
        let key = (prover.label(), t.canonical());
        if let Some(&v) = self.rates.lock().expect("rate cache").get(&key) {
            return Ok(v);
        }
        let v = prover.session(&self.library, t).success_probability(prover.length(), self.config.experiment.exact_budget)?;
        self.rates.lock().expect("rate cache").insert(key, v);
        Ok(v)
    }

    /// Record a proof reported for `seed`; it must verify and `seed` must be true.
    pub fn record_proof(&self, seed: &Statement, proof: &TacticSeq) {
        let ok = self.library.verify_proof(seed, proof) && decide_truth(seed, &self.library.limits) == Ok(true);
        let mut log = self.sound.lock().expect("soundness log");
        log.proofs += 1;
        if !ok {
            log.failures.push(format!("{seed} <- {proof}"));
        }
    }

    /// Proofs recorded so far and the ones that failed.
    pub fn soundness(&self) -> (u64, Vec<String>) {
        let log = self.sound.lock().expect("soundness log");
        (log.proofs, log.failures.clone())
    }

    /// Add the soundness check and `checks.jsonl` to a finished outcome.
    pub fn finish(&self, mut out: Outcome) -> Outcome {
        let (n, bad) = self.soundness();
        let detail = match bad.first() {
            None => format!("{n} proofs, all verify a true seed"),
            Some(b) => format!("{} of {n} proofs fail, first: {b}", bad.len()),
        };
        out.check("soundness", bad.is_empty(), detail);
        out.file("soundness.csv", formats::csv(&["proofs", "failures"], &[vec![n.to_string(), bad.len().to_string()]]));
        out.file("checks.jsonl", formats::jsonl(&out.checks));
        out
    }

    pub fn run(&self, kind: &str) -> Result<Outcome> {
        let out = match kind {
            "invariance-spread" => spread::run(self)?,
            "limit-invariance" => limit::limit_invariance(self)?,
            "monotonicity" => limit::monotonicity(self)?,
            "ensemble-eval" => eval::ensemble_eval(self)?,
            "equivariance-audit" => laws::equivariance_audit(self)?,
            "category-laws" => laws::category_laws(self)?,
            "consistency" => eval::consistency(self)?,
            "pass-at-k" => eval::pass_at_k_suite(self)?,
            other => bail!("unknown suite `{other}`; expected one of {}", KINDS.join(", ")),
        };
        Ok(self.finish(out))
    }
}
