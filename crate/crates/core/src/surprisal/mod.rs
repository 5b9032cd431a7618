//! Per-word contextual surprisal samples.
//!
//! A [`SurprisalTable`] holds, for every word form, the multiset of
//! surprisals `-log2 q(w | c)` observed over the contexts the word occurred
//! in. Samples carry an occurrence count so identical contexts can be stored
//! once; every statistic weights samples by that count.

mod external;
mod ngram;

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{format_sig17, Real};
use crate::tsv;

pub use external::{ingest_external, EXTERNAL_HEADER};
pub use ngram::{score_corpus, train_ngram, NgramModel, UNK};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurprisalSample<T> {
    pub surprisal_bits: T,
    pub count: u64,
}

impl<T: Real> SurprisalSample<T> {
    pub fn new(surprisal_bits: T, count: u64) -> Result<Self> {
        if !surprisal_bits.is_finite() || surprisal_bits < T::zero() {
            return Err(Error::validation(format!("surprisal must be finite and non-negative, got {surprisal_bits}")));
        }
        if count == 0 {
            return Err(Error::validation("sample count must be positive"));
        }
        Ok(SurprisalSample { surprisal_bits, count })
    }

    pub fn once(surprisal_bits: T) -> Result<Self> {
        Self::new(surprisal_bits, 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SurprisalSource {
    NgramInternal,
    External,
}

/// Count-weighted moments of a word's surprisal samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats<T> {
    pub weight: T,
    pub sum: T,
    pub sum_sq: T,
}

impl<T: Real> SampleStats<T> {
    pub fn of(samples: &[SurprisalSample<T>]) -> Self {
        let mut s = SampleStats { weight: T::zero(), sum: T::zero(), sum_sq: T::zero() };
        for x in samples {
            let c = T::of_u64(x.count);
            s.weight = s.weight + c;
            s.sum = s.sum + c * x.surprisal_bits;
            s.sum_sq = s.sum_sq + c * x.surprisal_bits * x.surprisal_bits;
        }
        s
    }

    /// `E[s]`
    pub fn mean(&self) -> T {
        self.sum / self.weight
    }

    /// `E[s^2] / E[s]`; NaN when every sample is zero.
    pub fn second_over_first(&self) -> T {
        self.sum_sq / self.sum
    }
}

/// Population variance, two-pass.
pub fn population_variance<T: Real>(samples: &[SurprisalSample<T>]) -> T {
    let stats = SampleStats::of(samples);
    let mean = stats.mean();
    let acc: T = samples
        .iter()
        .map(|x| {
            let d = x.surprisal_bits - mean;
            T::of_u64(x.count) * d * d
        })
        .sum();
    acc / stats.weight
}

#[derive(Debug, Clone)]
pub struct SurprisalTable<T> {
    per_word: BTreeMap<String, Vec<SurprisalSample<T>>>,
    source: SurprisalSource,
}

impl<T: Real> SurprisalTable<T> {
    pub fn new(source: SurprisalSource) -> Self {
        SurprisalTable { per_word: BTreeMap::new(), source }
    }

    /// Convenience constructor from `(form, [(bits, count)])` pairs.
    pub fn from_samples<I, S>(source: SurprisalSource, words: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<(T, u64)>)>,
        S: Into<String>,
    {
        let mut t = Self::new(source);
        for (form, samples) in words {
            let form = form.into();
            if samples.is_empty() {
                return Err(Error::validation(format!("word {form:?} has no samples")));
            }
            for (bits, count) in samples {
                t.push(form.clone(), SurprisalSample::new(bits, count)?);
            }
        }
        Ok(t)
    }

    pub fn push(&mut self, form: String, sample: SurprisalSample<T>) {
        self.per_word.entry(form).or_default().push(sample);
    }

    pub fn source(&self) -> SurprisalSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.per_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_word.is_empty()
    }

    pub fn samples(&self, form: &str) -> Option<&[SurprisalSample<T>]> {
        self.per_word.get(form).map(Vec::as_slice)
    }

    pub fn contains(&self, form: &str) -> bool {
        self.per_word.contains_key(form)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[SurprisalSample<T>])> {
        self.per_word.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.per_word.keys().map(String::as_str)
    }

    /// Sum of sample counts.
    pub fn total_samples(&self) -> u64 {
        self.per_word.values().flatten().map(|s| s.count).sum()
    }

    /// Count-weighted mean surprisal over every sample (cross-entropy in
    /// bits per token when the samples come from scoring a corpus).
    pub fn mean_surprisal(&self) -> T {
        let mut num = T::zero();
        let mut den = T::zero();
        for s in self.per_word.values().flatten() {
            let c = T::of_u64(s.count);
            num = num + c * s.surprisal_bits;
            den = den + c;
        }
        num / den
    }

    pub fn retain<F: FnMut(&str) -> bool>(&mut self, mut keep: F) {
        self.per_word.retain(|k, _| keep(k));
    }

    /// Multiset union per form.
    pub fn merge(mut self, other: SurprisalTable<T>) -> Self {
        for (form, samples) in other.per_word {
            self.per_word.entry(form).or_default().extend(samples);
        }
        self
    }

    /// Samples of each form with equal values coalesced, sorted by value.
    fn canonical(&self) -> BTreeMap<&str, Vec<(T, u64)>> {
        self.per_word
            .iter()
            .map(|(form, samples)| {
                let mut v: Vec<(T, u64)> = samples.iter().map(|s| (s.surprisal_bits, s.count)).collect();
                v.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite surprisal"));
                let mut merged: Vec<(T, u64)> = Vec::with_capacity(v.len());
                for (bits, count) in v {
                    match merged.last_mut() {
                        Some(last) if last.0 == bits => last.1 += count,
                        _ => merged.push((bits, count)),
                    }
                }
                (form.as_str(), merged)
            })
            .collect()
    }

    /// Writes the table in the external wire format. Each form becomes one
    /// pseudo-sentence whose words are the form's sample occurrences, so
    /// re-ingesting yields the same multiset of samples.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        tsv::write_header(&mut out, &EXTERNAL_HEADER)?;
        for (sid, (form, samples)) in self.per_word.iter().enumerate() {
            let mut word_index = 0u64;
            for s in samples {
                let bits = format_sig17(s.surprisal_bits.as_f64());
                for _ in 0..s.count {
                    writeln!(out, "w{sid}\t{word_index}\t0\t{form}\t{bits}")?;
                    word_index += 1;
                }
            }
        }
        Ok(())
    }
}

/// Tables are equal when they share a source and every form carries the
/// same multiset of surprisal values; how samples are split into counted
/// entries does not matter.
impl<T: Real> PartialEq for SurprisalTable<T> {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.canonical() == other.canonical()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> SurprisalTable<f64> {
        SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 10), (24.0, 1)])]).unwrap()
    }

    #[test]
    fn stats_of_worked_example() {
        let t = example();
        let st = SampleStats::of(t.samples("w").unwrap());
        assert_eq!(st.weight, 11.0);
        assert_eq!(st.mean(), 4.0);
        assert_eq!(st.second_over_first(), 14.0);
        assert_eq!(population_variance(t.samples("w").unwrap()), 40.0);
    }

    #[test]
    fn sample_validation() {
        assert!(SurprisalSample::new(-1.0f64, 1).is_err());
        assert!(SurprisalSample::new(f64::NAN, 1).is_err());
        assert!(SurprisalSample::new(f64::INFINITY, 1).is_err());
        assert!(SurprisalSample::new(1.0f64, 0).is_err());
        assert!(SurprisalSample::new(0.0f64, 1).is_ok());
    }

    #[test]
    fn equality_ignores_count_splitting() {
        let split = SurprisalTable::from_samples(
            SurprisalSource::External,
            [("w", vec![(24.0, 1), (2.0, 4), (2.0, 6)])],
        )
        .unwrap();
        assert_eq!(example(), split);
        let other = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 9), (24.0, 1)])]).unwrap();
        assert_ne!(example(), other);
    }

    #[test]
    fn wire_round_trip_expands_counts() {
        let t = example();
        let mut buf = Vec::new();
        t.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 12);
        let back: SurprisalTable<f64> = ingest_external(&buf[..]).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.total_samples(), 11);
    }

    #[test]
    fn merge_is_multiset_union() {
        let a = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 10)])]).unwrap();
        let b = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(24.0, 1)])]).unwrap();
        assert_eq!(a.merge(b), example());
    }
}
