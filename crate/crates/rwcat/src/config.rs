//! Run configuration: one TOML document with sections `language`,
//! `rules`, `corpus`, `prover`, `sampler`, `model`, `ensemble` and
//! `experiment`. Every key has a default, so `[section]` headers alone
//! form a valid file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use rwcat_core::category::Growth;
use rwcat_core::corpus::CorpusConfig;
use rwcat_core::prover::{FeatureSource, Policy, PolicyProver, SyntheticProver};
use rwcat_core::sampler::SamplerConfig;
use rwcat_core::tactic::TacticKind;
use rwcat_core::{Limits, RewritingCategory, RuleSet};

pub const DEFAULT_TOML: &str = include_str!("../../../configs/default.toml");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub language: LanguageConfig,
    pub rules: RulesConfig,
    pub corpus: CorpusSection,
    pub prover: ProverConfig,
    pub sampler: SamplerSection,
    pub model: ModelConfig,
    pub ensemble: EnsembleSection,
    pub experiment: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LanguageConfig {
    pub literal_min: i64,
    pub literal_max: i64,
    pub max_depth: usize,
    pub max_nodes: usize,
    pub max_exponent: u8,
    pub max_assignments: u64,
}

impl Default for LanguageConfig {
    fn default() -> Self {
        let l = Limits::default();
        LanguageConfig {
            literal_min: l.literal_min,
            literal_max: l.literal_max,
            max_depth: l.max_depth,
            max_nodes: l.max_nodes,
            max_exponent: l.max_exponent,
            max_assignments: l.max_assignments as u64,
        }
    }
}

impl LanguageConfig {
    pub fn limits(&self) -> Limits {
        Limits {
            literal_min: self.literal_min,
            literal_max: self.literal_max,
            max_depth: self.max_depth,
            max_nodes: self.max_nodes,
            max_exponent: self.max_exponent,
            max_assignments: self.max_assignments as u128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RulesConfig {
    /// Rule file; empty for the built-in library.
    pub file: String,
    /// Generators of the category whose classes are studied.
    pub generators: Vec<String>,
    pub hyp_rewrites: bool,
}

impl Default for RulesConfig {
    fn default() -> Self {
        RulesConfig {
            file: String::new(),
            generators: ["add_comm", "mul_comm", "add_assoc", "mul_assoc", "eq_comm"].map(String::from).to_vec(),
            hyp_rewrites: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    /// Corpus file; empty to generate from the fields below.
    pub file: String,
    pub size: usize,
    pub seed: u64,
    pub max_vars: usize,
    pub domain_lo_max: i64,
    pub domain_width_max: i64,
    pub max_literal: i64,
    pub term_nodes_min: usize,
    pub term_nodes_max: usize,
    pub chain: usize,
    pub hyp_insert: f64,
    pub mix_reflexive: u32,
    pub mix_hypothesis: u32,
    pub mix_ground: u32,
    pub max_nodes: usize,
    pub attempts_per_item: usize,
}

impl Default for CorpusSection {
    fn default() -> Self {
        let c = CorpusConfig::default();
        CorpusSection {
            file: String::new(),
            size: c.size,
            seed: 7,
            max_vars: c.max_vars,
            domain_lo_max: c.domain_lo_max,
            domain_width_max: c.domain_width_max,
            max_literal: c.max_literal,
            term_nodes_min: c.term_nodes.0,
            term_nodes_max: c.term_nodes.1,
            chain: c.chain,
            hyp_insert: c.hyp_insert,
            mix_reflexive: c.mix[0],
            mix_hypothesis: c.mix[1],
            mix_ground: c.mix[2],
            max_nodes: c.max_nodes,
            attempts_per_item: c.attempts_per_item,
        }
    }
}

impl CorpusSection {
    pub fn generator(&self) -> CorpusConfig {
        CorpusConfig {
            size: self.size,
            max_vars: self.max_vars,
            domain_lo_max: self.domain_lo_max,
            domain_width_max: self.domain_width_max,
            max_literal: self.max_literal,
            term_nodes: (self.term_nodes_min, self.term_nodes_max),
            chain: self.chain,
            hyp_insert: self.hyp_insert,
            mix: [self.mix_reflexive, self.mix_hypothesis, self.mix_ground],
            max_nodes: self.max_nodes,
            attempts_per_item: self.attempts_per_item,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProverConfig {
    /// `text`, `sequential` or `synthetic`.
    pub kind: String,
    pub length: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub feature_amplitude: f64,
    /// Per tactic kind, by kind name; missing kinds keep their default.
    pub kind_weights: BTreeMap<String, f64>,
    pub rule_weights: BTreeMap<String, f64>,
    /// Tactic kinds left out of the menu.
    pub disabled: Vec<String>,
    /// Synthetic prover: rate table file (`<rate>\t<statement>`), empty for hash mode.
    pub table: String,
    pub search_budget: usize,
}

impl Default for ProverConfig {
    fn default() -> Self {
        let p = Policy::default();
        ProverConfig {
            kind: "text".into(),
            length: 3,
            epsilon: p.epsilon,
            seed: p.seed,
            feature_amplitude: p.feature_amplitude,
            kind_weights: BTreeMap::new(),
            rule_weights: BTreeMap::new(),
            disabled: Vec::new(),
            table: String::new(),
            search_budget: 20_000,
        }
    }
}

impl ProverConfig {
    pub fn policy(&self) -> Result<Policy> {
        let mut p = Policy { epsilon: self.epsilon, seed: self.seed, feature_amplitude: self.feature_amplitude, ..Policy::default() };
        for (name, w) in &self.kind_weights {
            let k = TacticKind::from_name(name).with_context(|| format!("unknown tactic kind `{name}`"))?;
            p.kind_weights[k.index()] = *w;
        }
        for name in &self.disabled {
            let k = TacticKind::from_name(name).with_context(|| format!("unknown tactic kind `{name}`"))?;
            p.kind_enabled[k.index()] = false;
        }
        p.rule_weights = self.rule_weights.clone();
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            bail!("prover.epsilon must lie in (0, 1)");
        }
        Ok(p)
    }

    /// The policy prover of the given flavour with this section's weights.
    pub fn policy_prover(&self, source: FeatureSource) -> Result<PolicyProver> {
        let base = match source {
            FeatureSource::Root => PolicyProver::text_conditioned(self.length),
            FeatureSource::State => PolicyProver::sequential(self.length),
        };
        Ok(base.with_policy(self.policy()?))
    }

    pub fn synthetic(&self, table: Option<BTreeMap<String, f64>>) -> SyntheticProver {
        let mut p = match table {
            Some(t) => SyntheticProver::table(t, self.length),
            None => SyntheticProver::hashed(self.seed, self.length),
        };
        p.search_budget = self.search_budget;
        p
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub breadth: usize,
    pub depth: usize,
    pub draws: usize,
    /// `strict` or `loose`.
    pub growth: String,
    pub include_seed: bool,
    pub k: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let s = SamplerConfig::default();
        SamplerSection { breadth: s.breadth, depth: s.depth, draws: s.draws, growth: "strict".into(), include_seed: s.include_seed, k: s.k }
    }
}

impl SamplerSection {
    pub fn config(&self) -> Result<SamplerConfig> {
        Ok(SamplerConfig {
            breadth: self.breadth,
            depth: self.depth,
            draws: self.draws,
            growth: parse_growth(&self.growth)?,
            include_seed: self.include_seed,
            k: self.k,
        })
    }
}

pub fn parse_growth(s: &str) -> Result<Growth> {
    match s {
        "strict" => Ok(Growth::Strict),
        "loose" => Ok(Growth::Loose),
        other => bail!("growth must be `strict` or `loose`, got `{other}`"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub order: usize,
    pub alpha: f64,
    /// Model file; empty to train on the corpus.
    pub file: String,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { order: 3, alpha: 0.5, file: String::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub k: usize,
    pub n: usize,
    pub seed: u64,
    pub leftover_to_first: bool,
    /// `ranked` or `exhaustive`.
    pub sampler: String,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection { k: 8, n: 32, seed: 42, leftover_to_first: false, sampler: "ranked".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Class depths for the invariance and limit studies.
    pub class_depths: Vec<usize>,
    pub spread_depth: usize,
    /// Values of `K` for the limit sweep; empty for `1..=|class|`.
    pub k_sweep: Vec<usize>,
    /// `n(K) = K^n_exponent`.
    pub n_exponent: u32,
    pub limit_tolerance: f64,
    pub priors: Vec<Vec<[f64; 2]>>,
    pub n_list: Vec<usize>,
    pub budgets: Vec<usize>,
    pub selections: usize,
    pub ensemble_k: usize,
    pub audit_arrows: usize,
    pub audit_max_len: usize,
    pub consistency_reps: usize,
    pub consistency_cells: Vec<ConsistencyCell>,
    pub exact_budget: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistencyCell {
    /// Index into the corpus.
    pub statement: usize,
    pub k: usize,
    pub n: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let point = |s: f64| vec![[s, 1.0]];
        ExperimentConfig {
            seed: 2024,
            class_depths: vec![1, 2],
            spread_depth: 1,
            k_sweep: Vec::new(),
            n_exponent: 2,
            limit_tolerance: 1e-9,
            priors: vec![
                point(0.0),
                point(0.3),
                point(1.0),
                vec![[0.1, 0.5], [0.9, 0.5]],
                vec![[0.0, 1.0 / 3.0], [0.5, 1.0 / 3.0], [1.0, 1.0 / 3.0]],
                vec![[0.0, 0.5], [1.0, 0.5]],
            ],
            n_list: vec![4, 8, 12, 24, 64],
            budgets: vec![8, 32, 64],
            selections: 2000,
            ensemble_k: 8,
            audit_arrows: 50,
            audit_max_len: 3,
            consistency_reps: 10_000,
            consistency_cells: Vec::new(),
            exact_budget: rwcat_core::prover::DEFAULT_BUDGET,
        }
    }
}

impl Config {
    pub fn builtin() -> Config {
        toml::from_str(DEFAULT_TOML).expect("built-in configuration parses")
    }

    /// `default` names the built-in configuration.
    pub fn load(spec: &str) -> Result<(Config, Option<PathBuf>)> {
        if spec == "default" {
            return Ok((Config::builtin(), None));
        }
        let path = PathBuf::from(spec);
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Config = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Ok((cfg, path.parent().map(Path::to_path_buf)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn limits(&self) -> Limits {
        self.language.limits()
    }

    /// The full rule library (from `rules.file` relative to `base`) as a
    /// category limited to `language`.
    pub fn library(&self, base: Option<&Path>) -> Result<RewritingCategory> {
        let rules = if self.rules.file.is_empty() {
            RuleSet::default_rules()
        } else {
            let path = resolve(base, &self.rules.file);
            let text = std::fs::read_to_string(&path).with_context(|| format!("reading rules {}", path.display()))?;
            RuleSet::parse(&text).with_context(|| format!("parsing rules {}", path.display()))?
        };
        Ok(RewritingCategory::new(rules).with_limits(self.limits()).with_hyp_rewrites(self.rules.hyp_rewrites))
    }

    /// The category generated by `rules.generators`, with all of the library as tactics.
    pub fn class_category(&self, base: Option<&Path>) -> Result<RewritingCategory> {
        let lib = self.library(base)?;
        let ids: Vec<&str> = self.rules.generators.iter().map(String::as_str).collect();
        Ok(lib.generated(&ids)?)
    }
}

pub fn resolve(base: Option<&Path>, file: &str) -> PathBuf {
    let p = PathBuf::from(file);
    match base {
        Some(b) if p.is_relative() => b.join(p),
        _ => p,
    }
}
