//! Lexicalization objectives and their optimisation.
//!
//! A word with length `L` and surprisal `s` in some context transmits at
//! rate `x = s / L` bits per character. The channel-capacity objectives
//! penalise the deviation of `x` from a capacity `C` through
//!
//! ```text
//! d(x) = lambda (x - C)^2   if x > C
//!        (x - C)^2          otherwise
//! ```
//!
//! * CCH: `sum_w p(w) E_{c|w}[ d(s(w,c) / L(w)) ]`
//! * CCH-lower: `sum_w p(w) d(E_{c|w}[s(w,c)] / L(w))`
//! * Zipf: `sum_w p(w) L(w)`
//!
//! For convex `d` the CCH-lower cost never exceeds the CCH cost (Jensen).

mod bruteforce;
mod optimize;
mod search;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::hypotheses::{write_rows, PREDICTION_HEADER};
use crate::scalar::Real;
use crate::surprisal::{SampleStats, SurprisalSample, SurprisalTable};
use crate::tsv;

pub use bruteforce::{bruteforce_lexicalization, MAX_BRUTEFORCE_VOCAB};
pub use optimize::{
    closed_form_cch_lengths, fit_capacity, optimize_lengths, optimize_word_length, LENGTH_MAX, LENGTH_MIN,
};
pub use search::{golden_section, Minimum};

/// Sensitivity grid for the asymmetry parameter: 1.0 to 5.0 in steps of 0.25.
pub fn lambda_grid() -> Vec<f64> {
    (0..=16).map(|i| 1.0 + 0.25 * i as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Zipf,
    Cch,
    CchLower,
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zipf" => Ok(Objective::Zipf),
            "cch" => Ok(Objective::Cch),
            "cch_lower" | "cch-lower" => Ok(Objective::CchLower),
            other => Err(Error::Config(format!("unknown objective {other:?}"))),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Zipf => "zipf",
            Objective::Cch => "cch",
            Objective::CchLower => "cch_lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSpec<T> {
    pub capacity: T,
    pub lambda: T,
    pub objective: Objective,
}

impl<T: Real> CostSpec<T> {
    pub fn new(capacity: T, lambda: T, objective: Objective) -> Result<Self> {
        let spec = CostSpec { capacity, lambda, objective };
        spec.validate()?;
        Ok(spec)
    }

    /// Symmetric quadratic distance.
    pub fn quadratic(capacity: T, objective: Objective) -> Result<Self> {
        Self::new(capacity, T::one(), objective)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.capacity.is_finite() && self.capacity > T::zero()) {
            return Err(Error::Config(format!("capacity must be positive and finite, got {}", self.capacity)));
        }
        if !(self.lambda.is_finite() && self.lambda > T::zero()) {
            return Err(Error::Config(format!("lambda must be positive and finite, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Asymmetric squared deviation of `rate` from the capacity.
pub fn distance<T: Real>(rate: T, spec: &CostSpec<T>) -> T {
    let dev = rate - spec.capacity;
    if rate > spec.capacity {
        spec.lambda * dev * dev
    } else {
        dev * dev
    }
}

/// `d distance / d rate`.
pub fn distance_slope<T: Real>(rate: T, spec: &CostSpec<T>) -> T {
    let two = T::of(2.0);
    let dev = rate - spec.capacity;
    if rate > spec.capacity {
        two * spec.lambda * dev
    } else {
        two * dev
    }
}

/// Expected distance over a word's contexts at length `length`.
pub fn word_cost<T: Real>(samples: &[SurprisalSample<T>], length: T, spec: &CostSpec<T>) -> T {
    let mut acc = T::zero();
    let mut weight = T::zero();
    for s in samples {
        let c = T::of_u64(s.count);
        acc = acc + c * distance(s.surprisal_bits / length, spec);
        weight = weight + c;
    }
    acc / weight
}

/// `d word_cost / d length`.
pub fn word_cost_gradient<T: Real>(samples: &[SurprisalSample<T>], length: T, spec: &CostSpec<T>) -> T {
    let mut acc = T::zero();
    let mut weight = T::zero();
    for s in samples {
        let c = T::of_u64(s.count);
        let rate = s.surprisal_bits / length;
        acc = acc - c * distance_slope(rate, spec) * s.surprisal_bits / (length * length);
        weight = weight + c;
    }
    acc / weight
}

/// Distance of the word's mean rate at length `length`.
pub fn word_cost_lower<T: Real>(samples: &[SurprisalSample<T>], length: T, spec: &CostSpec<T>) -> T {
    distance(SampleStats::of(samples).mean() / length, spec)
}

/// Relaxed (real-valued, positive) word lengths.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LengthAssignment<T> {
    per_word: BTreeMap<String, T>,
}

impl<T: Real> LengthAssignment<T> {
    pub fn new(per_word: BTreeMap<String, T>) -> Result<Self> {
        if let Some((form, v)) = per_word.iter().find(|(_, v)| !(v.is_finite() && **v > T::zero())) {
            return Err(Error::validation(format!("length of {form:?} must be positive and finite, got {v}")));
        }
        Ok(LengthAssignment { per_word })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
    {
        Self::new(pairs.into_iter().map(|(f, v)| (f.into(), v)).collect())
    }

    /// Character lengths of the forms in `freq`.
    pub fn observed(freq: &FrequencyTable) -> Self {
        LengthAssignment { per_word: freq.iter().map(|r| (r.form.clone(), T::of_u64(r.length as u64))).collect() }
    }

    pub fn get(&self, form: &str) -> Option<T> {
        self.per_word.get(form).copied()
    }

    pub fn len(&self) -> usize {
        self.per_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_word.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, T)> {
        self.per_word.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn as_map(&self) -> &BTreeMap<String, T> {
        &self.per_word
    }

    /// Same layout as prediction sets, with a free-text label column.
    pub fn write_tsv<W: Write>(&self, mut out: W, label: &str) -> Result<()> {
        tsv::write_header(&mut out, &PREDICTION_HEADER)?;
        write_rows(&mut out, label, &self.per_word)
    }
}

fn missing_words<'a, T: Real>(lengths: &LengthAssignment<T>, words: impl Iterator<Item = &'a str>) -> Result<()> {
    let missing: Vec<String> = words.filter(|w| lengths.get(w).is_none()).map(str::to_string).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Coverage { missing })
    }
}

/// Expected communicative cost of a length assignment.
///
/// Zipf sums over every word of `freq`; the channel-capacity objectives sum
/// over the words present in both `freq` and `table`. Words are weighted by
/// their relative frequency as stored in `freq`.
pub fn objective_cost<T: Real>(
    lengths: &LengthAssignment<T>,
    table: &SurprisalTable<T>,
    freq: &FrequencyTable,
    spec: &CostSpec<T>,
) -> Result<T> {
    spec.validate()?;
    match spec.objective {
        Objective::Zipf => {
            missing_words(lengths, freq.iter().map(|r| r.form.as_str()))?;
            Ok(freq.iter().map(|r| T::of(r.rel_freq) * lengths.get(&r.form).expect("covered")).sum())
        }
        Objective::Cch | Objective::CchLower => {
            let words = || table.iter().filter(|(f, _)| freq.contains(f));
            missing_words(lengths, words().map(|(f, _)| f))?;
            let per_word = match spec.objective {
                Objective::Cch => word_cost,
                _ => word_cost_lower,
            };
            Ok(words()
                .map(|(f, samples)| T::of(freq.rel_freq(f)) * per_word(samples, lengths.get(f).expect("covered"), spec))
                .sum())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surprisal::SurprisalSource;

    fn example() -> (SurprisalTable<f64>, FrequencyTable) {
        let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 10), (24.0, 1)])]).unwrap();
        let f = FrequencyTable::from_counts([("w".to_string(), 11)], 11, None);
        (t, f)
    }

    #[test]
    fn distance_cases() {
        let sym = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        assert_eq!(distance(2.0, &sym), 0.0);
        assert_eq!(distance(12.0, &sym), 100.0);
        let asym = CostSpec::new(2.0, 3.0, Objective::Cch).unwrap();
        assert_eq!(distance(3.0, &asym), 3.0);
        assert_eq!(distance(1.0, &asym), 1.0);
        assert_eq!(distance(2.0, &asym), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(CostSpec::new(0.0, 1.0, Objective::Cch).is_err());
        assert!(CostSpec::new(2.0, 0.0, Objective::Cch).is_err());
        assert!(CostSpec::new(2.0, f64::NAN, Objective::Cch).is_err());
    }

    #[test]
    fn worked_example_costs() {
        let (t, f) = example();
        let cch = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        let lower = CostSpec::quadratic(2.0, Objective::CchLower).unwrap();
        let at = |l: f64| LengthAssignment::from_pairs([("w", l)]).unwrap();
        assert_eq!(objective_cost(&at(2.0), &t, &f, &cch).unwrap(), 10.0);
        assert!((objective_cost(&at(7.0), &t, &f, &cch).unwrap() - 1540.0 / 539.0).abs() < 1e-12);
        assert_eq!(objective_cost(&at(2.0), &t, &f, &lower).unwrap(), 0.0);
    }

    #[test]
    fn zipf_objective_is_expected_length() {
        let f = FrequencyTable::from_counts([("a".to_string(), 2), ("b".to_string(), 1), ("c".to_string(), 1)], 4, None);
        let t = SurprisalTable::new(SurprisalSource::External);
        let spec = CostSpec::quadratic(1.0, Objective::Zipf).unwrap();
        let l = LengthAssignment::from_pairs([("a", 1.0), ("b", 2.0), ("c", 2.0)]).unwrap();
        assert_eq!(objective_cost(&l, &t, &f, &spec).unwrap(), 1.5);
    }

    #[test]
    fn coverage_error_lists_missing_forms() {
        let (t, f) = example();
        let spec = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        let l = LengthAssignment::from_pairs([("other", 1.0)]).unwrap();
        match objective_cost(&l, &t, &f, &spec) {
            Err(Error::Coverage { missing }) => assert_eq!(missing, ["w"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lengths_must_be_positive() {
        assert!(LengthAssignment::from_pairs([("a", 0.0)]).is_err());
        assert!(LengthAssignment::from_pairs([("a", f64::INFINITY)]).is_err());
    }

    #[test]
    fn lambda_grid_spans_one_to_five() {
        let g = lambda_grid();
        assert_eq!(g.len(), 17);
        assert_eq!(g[0], 1.0);
        assert_eq!(g[16], 5.0);
        assert!(g.windows(2).all(|w| (w[1] - w[0] - 0.25).abs() < 1e-15));
    }

    #[test]
    fn single_precision_example() {
        let t = SurprisalTable::<f32>::from_samples(SurprisalSource::External, [("w", vec![(2.0f32, 10), (24.0, 1)])]).unwrap();
        let f = FrequencyTable::from_counts([("w".to_string(), 11)], 11, None);
        let spec = CostSpec::quadratic(2.0f32, Objective::Cch).unwrap();
        let l = LengthAssignment::from_pairs([("w", 7.0f32)]).unwrap();
        let c = objective_cost(&l, &t, &f, &spec).unwrap();
        assert!((c - 1540.0 / 539.0).abs() < 1e-5);
    }
}
