//! Scoring predicted lengths against observed lengths.
//!
//! Three metrics per prediction set: Spearman rank correlation (average
//! ranks for ties), Pearson correlation, and the frequency-weighted mean
//! squared error of a no-intercept weighted least-squares fit of observed
//! length on prediction. The fitted slope absorbs any constant scale of the
//! predictions, so the MSE is scale-invariant.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::scalar::{format_sig17, Real};

fn check_pair<T>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::validation(format!("vectors differ in length ({} vs {})", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation(format!("need at least 2 points, got {}", x.len())));
    }
    Ok(())
}

pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    check_pair(x, y)?;
    let n = T::of_u64(x.len() as u64);
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() || syy == T::zero() {
        return Err(Error::UndefinedCorrelation("constant input vector".into()));
    }
    let r = sxy / (sxx * syy).sqrt();
    Ok(r.max(-T::one()).min(T::one()))
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks<T: Real>(x: &[T]) -> Vec<T> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("ranked values are not NaN"));
    let mut ranks = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let avg = T::of((i + j + 2) as f64 / 2.0);
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    check_pair(x, y)?;
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(Error::validation("NaN in correlation input"));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedFit<T> {
    pub slope: T,
    pub weighted_mse: T,
}

/// No-intercept weighted least squares of `obs` on `pred`.
pub fn weighted_fit<T: Real>(pred: &[T], obs: &[T], weight: &[T]) -> Result<WeightedFit<T>> {
    if pred.len() != obs.len() || pred.len() != weight.len() {
        return Err(Error::validation("prediction, observation and weight vectors differ in length"));
    }
    if weight.iter().any(|w| !(w.is_finite() && *w >= T::zero())) {
        return Err(Error::validation("weights must be finite and non-negative"));
    }
    let total: T = weight.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateFit("weights sum to zero".into()));
    }
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for ((&p, &l), &w) in pred.iter().zip(obs).zip(weight) {
        sxy = sxy + w * p * l;
        sxx = sxx + w * p * p;
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateFit("all weighted predictions are zero".into()));
    }
    let slope = sxy / sxx;
    let weighted_mse = pred
        .iter()
        .zip(obs)
        .zip(weight)
        .map(|((&p, &l), &w)| {
            let r = l - slope * p;
            w / total * r * r
        })
        .sum();
    Ok(WeightedFit { slope, weighted_mse })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub spearman: f64,
    pub pearson: f64,
    pub slope: f64,
    pub weighted_mse: f64,
    pub n_words: usize,
}

/// Metrics of `predictions` against the character lengths of the words in
/// `freq`, weighting squared errors by `freq`'s relative frequencies. Only
/// words present in both are scored.
pub fn evaluate<T: Real>(predictions: &BTreeMap<String, T>, freq: &FrequencyTable) -> Result<Metrics> {
    let mut pred = Vec::new();
    let mut obs = Vec::new();
    let mut weight = Vec::new();
    for (form, &p) in predictions {
        if let Some(r) = freq.get(form) {
            pred.push(p);
            obs.push(T::of_u64(r.length as u64));
            weight.push(T::of(r.rel_freq));
        }
    }
    let fit = weighted_fit(&pred, &obs, &weight)?;
    Ok(Metrics {
        spearman: spearman(&pred, &obs)?.as_f64(),
        pearson: pearson(&pred, &obs)?.as_f64(),
        slope: fit.slope.as_f64(),
        weighted_mse: fit.weighted_mse.as_f64(),
        n_words: pred.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub language: String,
    pub config_digest: String,
    pub per_hypothesis: BTreeMap<String, Metrics>,
    /// Number of words each prediction set dropped as undefined.
    pub excluded: BTreeMap<String, usize>,
}

const METRIC_NAMES: [&str; 5] = ["spearman", "pearson", "slope", "weighted_mse", "n_words"];

impl EvalReport {
    pub fn new(language: impl Into<String>, config_digest: impl Into<String>) -> Result<Self> {
        let language = language.into();
        if language.is_empty() || language.contains([',', '\n', '\r', '"']) {
            return Err(Error::Config(format!("language label {language:?} must be non-empty without commas, quotes or newlines")));
        }
        Ok(EvalReport { language, config_digest: config_digest.into(), per_hypothesis: BTreeMap::new(), excluded: BTreeMap::new() })
    }

    pub fn insert(&mut self, label: impl Into<String>, metrics: Metrics, excluded: usize) {
        let label = label.into();
        self.excluded.insert(label.clone(), excluded);
        self.per_hypothesis.insert(label, metrics);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("invalid report: {e}")))
    }

    pub fn to_text(&self) -> String {
        let width = self.per_hypothesis.keys().map(String::len).max().unwrap_or(0).max("hypothesis".len());
        let mut s = String::new();
        let _ = writeln!(s, "language: {}   config: {}", self.language, self.config_digest);
        let _ = writeln!(s, "{:<width$}  {:>9}  {:>9}  {:>10}  {:>13}  {:>8}  {:>8}", "hypothesis", "spearman", "pearson", "slope", "weighted_mse", "n_words", "excluded");
        for (label, m) in &self.per_hypothesis {
            let _ = writeln!(
                s,
                "{:<width$}  {:>9.4}  {:>9.4}  {:>10.4}  {:>13.6}  {:>8}  {:>8}",
                label,
                m.spearman,
                m.pearson,
                m.slope,
                m.weighted_mse,
                m.n_words,
                self.excluded.get(label).copied().unwrap_or(0)
            );
        }
        s
    }

    /// Plot-ready long format: `hypothesis,language,metric,value`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("hypothesis,language,metric,value\n");
        for (label, m) in &self.per_hypothesis {
            let values = [
                format_sig17(m.spearman),
                format_sig17(m.pearson),
                format_sig17(m.slope),
                format_sig17(m.weighted_mse),
                m.n_words.to_string(),
            ];
            for (name, v) in METRIC_NAMES.iter().zip(values) {
                let _ = writeln!(s, "{label},{},{name},{v}", self.language);
            }
        }
        s
    }
}
