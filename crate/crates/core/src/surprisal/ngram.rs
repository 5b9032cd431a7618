//! Interpolated n-gram language model.
//!
//! `q(w | h) = sum_k weight_k * MLE_k(w | last k-1 tokens of h)`.
//!
//! The unigram component reserves mass for an unknown-word symbol by
//! counting it once: `MLE_1(w) = c(w) / (N + 1)` and `MLE_1(unk) = 1 / (N + 1)`.
//! A higher-order component is only available when its context was seen in
//! training (and the history is long enough); unavailable components drop out
//! and the remaining weights are renormalised, so `q(. | h)` always sums to
//! one. If every available component has zero weight the unigram alone is
//! used.

use std::collections::HashMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{SurprisalSample, SurprisalSource, SurprisalTable};

/// Reserved id of the unknown-word symbol.
pub const UNK: u32 = 0;

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    weights: Vec<f64>,
    /// Forms by id; index 0 is the unknown symbol.
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    /// `ngrams[k - 1]`: counts of k-grams.
    ngrams: Vec<HashMap<Vec<u32>, u64>>,
    /// `contexts[k - 1]`: counts of (k-1)-gram contexts that have a successor.
    contexts: Vec<HashMap<Vec<u32>, u64>>,
    unigram_total: u64,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    order: usize,
    weights: Vec<f64>,
    vocab: Vec<String>,
    ngrams: Vec<Vec<(Vec<u32>, u64)>>,
}

fn check_weights(order: usize, weights: &[f64]) -> Result<()> {
    if order == 0 {
        return Err(Error::Config("n-gram order must be at least 1".into()));
    }
    if weights.len() != order {
        return Err(Error::Config(format!("expected {order} interpolation weights, got {}", weights.len())));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::Config("interpolation weights must be finite and non-negative".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Config(format!("interpolation weights sum to {sum}, not 1")));
    }
    Ok(())
}

pub fn train_ngram<S: AsRef<str>>(tokens: &[S], order: usize, weights: &[f64]) -> Result<NgramModel> {
    check_weights(order, weights)?;
    if tokens.is_empty() {
        return Err(Error::Config("cannot train an n-gram model on an empty token sequence".into()));
    }
    let mut forms: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
    forms.sort_unstable();
    forms.dedup();
    let mut vocab = Vec::with_capacity(forms.len() + 1);
    vocab.push("<unk>".to_string());
    vocab.extend(forms.into_iter().map(str::to_string));

    let index: HashMap<String, u32> = vocab.iter().enumerate().skip(1).map(|(i, f)| (f.clone(), i as u32)).collect();
    let ids: Vec<u32> = tokens.iter().map(|t| index[t.as_ref()]).collect();

    let mut ngrams = vec![HashMap::new(); order];
    for k in 1..=order {
        if ids.len() < k {
            break;
        }
        for window in ids.windows(k) {
            *ngrams[k - 1].entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    Ok(NgramModel::assemble(order, weights.to_vec(), vocab, index, ngrams))
}

impl NgramModel {
    fn assemble(
        order: usize,
        weights: Vec<f64>,
        vocab: Vec<String>,
        index: HashMap<String, u32>,
        ngrams: Vec<HashMap<Vec<u32>, u64>>,
    ) -> Self {
        let contexts = ngrams
            .iter()
            .enumerate()
            .map(|(i, grams)| {
                let mut ctx: HashMap<Vec<u32>, u64> = HashMap::new();
                if i > 0 {
                    for (g, c) in grams {
                        *ctx.entry(g[..i].to_vec()).or_insert(0) += c;
                    }
                }
                ctx
            })
            .collect();
        let unigram_total = ngrams[0].values().sum();
        NgramModel { order, weights, vocab, index, ngrams, contexts, unigram_total }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Vocabulary size including the unknown symbol.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn id(&self, form: &str) -> u32 {
        self.index.get(form).copied().unwrap_or(UNK)
    }

    pub fn form(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    fn unigram(&self, w: u32) -> f64 {
        let c = if w == UNK { 1 } else { self.ngrams[0].get(&[w][..]).copied().unwrap_or(0) };
        c as f64 / (self.unigram_total + 1) as f64
    }

    /// `q(w | history)`; only the last `order - 1` history ids matter.
    pub fn prob(&self, history: &[u32], w: u32) -> f64 {
        let unigram = self.unigram(w);
        let mut num = self.weights[0] * unigram;
        let mut mass = self.weights[0];
        let mut key = Vec::with_capacity(self.order);
        for k in 2..=self.order {
            if history.len() < k - 1 {
                break;
            }
            let h = &history[history.len() - (k - 1)..];
            let Some(&ctx) = self.contexts[k - 1].get(h) else { continue };
            key.clear();
            key.extend_from_slice(h);
            key.push(w);
            let c = self.ngrams[k - 1].get(&key).copied().unwrap_or(0);
            num += self.weights[k - 1] * c as f64 / ctx as f64;
            mass += self.weights[k - 1];
        }
        if mass > 0.0 {
            num / mass
        } else {
            unigram
        }
    }

    /// Full conditional distribution over ids `0..vocab_size()`.
    pub fn distribution(&self, history: &[u32]) -> Vec<f64> {
        (0..self.vocab.len() as u32).map(|w| self.prob(history, w)).collect()
    }

    pub fn surprisal_bits(&self, history: &[u32], w: u32) -> f64 {
        let p = self.prob(history, w);
        if p >= 1.0 {
            0.0
        } else {
            -p.log2()
        }
    }

    /// Mean surprisal per token of `tokens`, in bits.
    pub fn cross_entropy<S: AsRef<str> + Sync>(&self, tokens: &[S]) -> f64 {
        self.mean_bits(tokens, 0.0)
    }

    /// Cross-entropy over a closed vocabulary of `universe` word types: an
    /// unknown token also pays for picking one of the types unseen in
    /// training uniformly. Unlike [`Self::cross_entropy`] this is comparable
    /// across models with different vocabularies.
    pub fn cross_entropy_closed<S: AsRef<str> + Sync>(&self, tokens: &[S], universe: usize) -> f64 {
        let unseen = universe.saturating_sub(self.vocab.len() - 1).max(1);
        self.mean_bits(tokens, (unseen as f64).log2())
    }

    fn mean_bits<S: AsRef<str> + Sync>(&self, tokens: &[S], unk_extra: f64) -> f64 {
        if tokens.is_empty() {
            return 0.0;
        }
        let ids: Vec<u32> = tokens.iter().map(|t| self.id(t.as_ref())).collect();
        let bits: Vec<f64> = (0..ids.len())
            .into_par_iter()
            .map(|i| {
                let s = self.surprisal_bits(&ids[i.saturating_sub(self.order - 1)..i], ids[i]);
                if ids[i] == UNK {
                    s + unk_extra
                } else {
                    s
                }
            })
            .collect();
        // sequential sum keeps the result independent of the thread schedule
        bits.iter().sum::<f64>() / ids.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        let ngrams = self
            .ngrams
            .iter()
            .map(|m| {
                let mut v: Vec<(Vec<u32>, u64)> = m.iter().map(|(k, c)| (k.clone(), *c)).collect();
                v.sort();
                v
            })
            .collect();
        let file = ModelFile { order: self.order, weights: self.weights.clone(), vocab: self.vocab.clone(), ngrams };
        serde_json::to_string(&file).map_err(|e| Error::validation(format!("cannot serialise model: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::validation(format!("invalid model file: {e}")))?;
        check_weights(file.order, &file.weights)?;
        if file.ngrams.len() != file.order || file.vocab.is_empty() {
            return Err(Error::validation("model file shape does not match its order"));
        }
        let index = file.vocab.iter().enumerate().skip(1).map(|(i, f)| (f.clone(), i as u32)).collect();
        let mut ngrams = Vec::with_capacity(file.order);
        for (i, grams) in file.ngrams.into_iter().enumerate() {
            let mut m = HashMap::with_capacity(grams.len());
            for (key, c) in grams {
                if key.len() != i + 1 || key.iter().any(|&id| id as usize >= file.vocab.len()) {
                    return Err(Error::validation(format!("malformed {}-gram entry", i + 1)));
                }
                m.insert(key, c);
            }
            ngrams.push(m);
        }
        Ok(Self::assemble(file.order, file.weights, file.vocab, index, ngrams))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One sample per token occurrence, `-log2 q(w | previous order-1 tokens)`,
/// attached to the token's form. Out-of-vocabulary tokens are scored as the
/// unknown symbol but keep their own form.
pub fn score_corpus<T: Real, S: AsRef<str> + Sync>(model: &NgramModel, tokens: &[S]) -> SurprisalTable<T> {
    let ids: Vec<u32> = tokens.iter().map(|t| model.id(t.as_ref())).collect();
    let bits: Vec<f64> = (0..ids.len())
        .into_par_iter()
        .map(|i| model.surprisal_bits(&ids[i.saturating_sub(model.order - 1)..i], ids[i]))
        .collect();
    let mut table = SurprisalTable::new(SurprisalSource::NgramInternal);
    for (tok, b) in tokens.iter().zip(bits) {
        let sample = SurprisalSample::once(T::of(b)).expect("model probabilities lie in (0, 1]");
        table.push(tok.as_ref().to_string(), sample);
    }
    table
}
