//! Additively smoothed n-gram model over statement tokens.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::parse::statement_tokens;
use crate::statement::Statement;

pub const BOS: &str = "<s>";
pub const UNK: &str = "<unk>";

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("n-gram order must be at least 1")]
    Order,
    #[error("smoothing constant must be positive")]
    Smoothing,
    #[error("n-gram of length {0} does not match the order {1}")]
    GramLength(usize, usize),
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
}

/// `p(w | h) = (c(h w) + alpha) / (c(h) + alpha |V|)` with `h` the previous
/// `order - 1` tokens, padded with `<s>`. `V` holds every training token
/// plus `<unk>`; `<s>` only appears in contexts.
#[derive(Clone, Debug, PartialEq)]
pub struct SurpriseModel {
    order: usize,
    alpha: f64,
    vocab: Vec<String>,
    index: BTreeMap<String, u32>,
    grams: BTreeMap<Vec<u32>, u64>,
    contexts: BTreeMap<Vec<u32>, u64>,
}

impl SurpriseModel {
    pub fn train<'a>(order: usize, alpha: f64, corpus: impl IntoIterator<Item = &'a Statement>) -> Result<Self, ModelError> {
        let token_lists: Vec<Vec<String>> = corpus.into_iter().map(statement_tokens).collect();
        let mut words: BTreeSet<String> = token_lists.iter().flatten().cloned().collect();
        words.insert(UNK.to_string());
        words.remove(BOS);
        let mut model = SurpriseModel::from_parts(order, alpha, words.into_iter().collect(), Vec::new())?;
        for toks in &token_lists {
            let ids = model.encode(toks);
            for gram in model.grams_of(&ids) {
                *model.grams.entry(gram).or_insert(0) += 1;
            }
        }
        model.rebuild_contexts();
        Ok(model)
    }

    /// Rebuild a model from its vocabulary and n-gram counts (token text).
    pub fn from_parts(order: usize, alpha: f64, vocab: Vec<String>, counts: Vec<(Vec<String>, u64)>) -> Result<Self, ModelError> {
        if order == 0 {
            return Err(ModelError::Order);
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(ModelError::Smoothing);
        }
        let mut vocab = vocab;
        if !vocab.iter().any(|w| w == UNK) {
            vocab.push(UNK.to_string());
        }
        let mut index: BTreeMap<String, u32> = vocab.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        let bos = vocab.len() as u32;
        index.insert(BOS.to_string(), bos);
        let mut model = SurpriseModel { order, alpha, vocab, index, grams: BTreeMap::new(), contexts: BTreeMap::new() };
        for (gram, c) in counts {
            if gram.len() != order {
                return Err(ModelError::GramLength(gram.len(), order));
            }
            let ids = gram
                .iter()
                .map(|w| model.index.get(w).copied().ok_or_else(|| ModelError::UnknownToken(w.clone())))
                .collect::<Result<Vec<_>, _>>()?;
            *model.grams.entry(ids).or_insert(0) += c;
        }
        model.rebuild_contexts();
        Ok(model)
    }

    /// A model with no counts: uniform over `vocab ∪ {<unk>}`.
    pub fn uniform(order: usize, vocab: Vec<String>) -> Result<Self, ModelError> {
        SurpriseModel::from_parts(order, 1.0, vocab, Vec::new())
    }

    fn rebuild_contexts(&mut self) {
        self.contexts.clear();
        for (g, &c) in &self.grams {
            *self.contexts.entry(g[..g.len() - 1].to_vec()).or_insert(0) += c;
        }
    }

    fn encode(&self, toks: &[String]) -> Vec<u32> {
        let unk = self.index[UNK];
        toks.iter().map(|t| if t == BOS { unk } else { self.index.get(t).copied().unwrap_or(unk) }).collect()
    }

    fn grams_of(&self, ids: &[u32]) -> Vec<Vec<u32>> {
        let bos = self.index[BOS];
        let mut padded = alloc::vec![bos; self.order - 1];
        padded.extend_from_slice(ids);
        padded.windows(self.order).map(|w| w.to_vec()).collect()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Predictable tokens, `<unk>` included.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// N-gram counts as token text, in a fixed order.
    pub fn counts(&self) -> Vec<(Vec<String>, u64)> {
        let name = |id: u32| {
            if id as usize == self.vocab.len() {
                BOS.to_string()
            } else {
                self.vocab[id as usize].clone()
            }
        };
        self.grams.iter().map(|(g, &c)| (g.iter().map(|&i| name(i)).collect(), c)).collect()
    }

    /// Natural-log probability of the token sequence, per token.
    pub fn token_log_probs(&self, toks: &[String]) -> Vec<f64> {
        let v = self.vocab.len() as f64;
        let ids = self.encode(toks);
        self.grams_of(&ids)
            .into_iter()
            .map(|g| {
                let c = self.grams.get(&g).copied().unwrap_or(0) as f64;
                let h = self.contexts.get(&g[..g.len() - 1]).copied().unwrap_or(0) as f64;
                libm::log((c + self.alpha) / (h + self.alpha * v))
            })
            .collect()
    }

    /// Mean negative log-likelihood (nats per token) of the statement text.
    pub fn surprise(&self, t: &Statement) -> f64 {
        self.surprise_tokens(&statement_tokens(t))
    }

    pub fn surprise_tokens(&self, toks: &[String]) -> f64 {
        let lp = self.token_log_probs(toks);
        -lp.iter().sum::<f64>() / lp.len().max(1) as f64
    }
}
