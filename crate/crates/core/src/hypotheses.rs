//! Word-length estimators for the three hypotheses, up to the
//! multiplicative constants the scale-invariant evaluation absorbs.
//!
//! | hypothesis  | predicted length            |
//! |-------------|-----------------------------|
//! | Zipf        | `-log2 q(w)`                |
//! | CCH-lower   | `E[s]`                      |
//! | CCH         | `E[s^2] / E[s]`             |
//!
//! where `s` ranges over the word's surprisal samples. Words whose
//! prediction would not be finite and positive are left out and listed in
//! [`PredictionSet::excluded`].

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::scalar::{format_sig17, Real};
use crate::surprisal::{SampleStats, SurprisalTable};
use crate::tsv;

pub const PREDICTION_HEADER: [&str; 3] = ["form", "hypothesis", "predicted_length"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Zipf,
    CchLower,
    Cch,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 3] = [Hypothesis::Zipf, Hypothesis::CchLower, Hypothesis::Cch];

    pub fn label(self) -> &'static str {
        match self {
            Hypothesis::Zipf => "zipf",
            Hypothesis::CchLower => "cch_lower",
            Hypothesis::Cch => "cch",
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zipf" => Ok(Hypothesis::Zipf),
            "cch_lower" | "cch-lower" => Ok(Hypothesis::CchLower),
            "cch" => Ok(Hypothesis::Cch),
            other => Err(Error::Config(format!("unknown hypothesis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet<T> {
    pub hypothesis: Hypothesis,
    pub per_word: BTreeMap<String, T>,
    /// Words dropped because the estimator was zero, infinite or undefined.
    pub excluded: Vec<String>,
    pub config_digest: String,
}

impl<T: Real> PredictionSet<T> {
    fn build<'a, I>(hypothesis: Hypothesis, values: I) -> Self
    where
        I: IntoIterator<Item = (&'a str, T)>,
    {
        let mut per_word = BTreeMap::new();
        let mut excluded = Vec::new();
        for (form, v) in values {
            if v.is_finite() && v > T::zero() {
                per_word.insert(form.to_string(), v);
            } else {
                excluded.push(form.to_string());
            }
        }
        if !excluded.is_empty() {
            debug!("{hypothesis}: excluded {} word(s) with non-positive or undefined predictions", excluded.len());
        }
        PredictionSet { hypothesis, per_word, excluded, config_digest: String::new() }
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.config_digest = digest.into();
        self
    }

    pub fn len(&self) -> usize {
        self.per_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_word.is_empty()
    }

    pub fn get(&self, form: &str) -> Option<T> {
        self.per_word.get(form).copied()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        tsv::write_header(&mut out, &PREDICTION_HEADER)?;
        write_rows(&mut out, self.hypothesis.label(), &self.per_word)
    }
}

pub(crate) fn write_rows<W: Write, T: Real>(out: &mut W, label: &str, rows: &BTreeMap<String, T>) -> Result<()> {
    for (form, v) in rows {
        writeln!(out, "{form}\t{label}\t{}", format_sig17(v.as_f64()))?;
    }
    Ok(())
}

/// Reads a prediction TSV into `(label, per-word values)` groups in order of
/// first appearance. Labels are free text so optimised length files can be
/// read alongside the three estimators.
pub fn read_labelled_tsv<T: Real, R: BufRead>(reader: R) -> Result<Vec<(String, BTreeMap<String, T>)>> {
    let mut groups: Vec<(String, BTreeMap<String, T>)> = Vec::new();
    tsv::for_each_row(reader, &PREDICTION_HEADER, |line, f| {
        let value: T = tsv::parse_field(line, "predicted_length", f[2])?;
        if !value.is_finite() || value <= T::zero() {
            return Err(Error::Validation { line: Some(line), message: format!("predicted length must be positive, got {}", f[2]) });
        }
        let idx = match groups.iter().position(|(l, _)| l == f[1]) {
            Some(i) => i,
            None => {
                groups.push((f[1].to_string(), BTreeMap::new()));
                groups.len() - 1
            }
        };
        if groups[idx].1.insert(f[0].to_string(), value).is_some() {
            return Err(Error::Validation { line: Some(line), message: format!("duplicate form {:?} for {}", f[0], f[1]) });
        }
        Ok(())
    })?;
    Ok(groups)
}

/// Reads prediction sets; every label must name a hypothesis.
pub fn read_predictions<T: Real, R: BufRead>(reader: R) -> Result<Vec<PredictionSet<T>>> {
    read_labelled_tsv(reader)?
        .into_iter()
        .map(|(label, per_word)| {
            Ok(PredictionSet { hypothesis: label.parse()?, per_word, excluded: Vec::new(), config_digest: String::new() })
        })
        .collect()
}

/// `-log2 rel_freq(w)`.
pub fn predict_zipf<T: Real>(freq: &FrequencyTable) -> PredictionSet<T> {
    PredictionSet::build(
        Hypothesis::Zipf,
        freq.iter().map(|r| (r.form.as_str(), -T::of(r.rel_freq).log2())),
    )
}

/// Count-weighted mean surprisal.
pub fn predict_cch_lower<T: Real>(table: &SurprisalTable<T>) -> PredictionSet<T> {
    PredictionSet::build(Hypothesis::CchLower, table.iter().map(|(f, s)| (f, SampleStats::of(s).mean())))
}

/// `sum(c s^2) / sum(c s)`, the mean plus the variance-to-mean ratio.
pub fn predict_cch<T: Real>(table: &SurprisalTable<T>) -> PredictionSet<T> {
    PredictionSet::build(Hypothesis::Cch, table.iter().map(|(f, s)| (f, SampleStats::of(s).second_over_first())))
}
