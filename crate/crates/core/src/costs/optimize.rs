//! Capacity fitting and per-word length optimisation.
//!
//! The objectives are separable across words, so lengths are optimised one
//! word at a time. Writing `u = 1 / L`, every rate `s u` is linear in `u` and
//! the per-word cost is a convex piecewise quadratic in `u`; its derivative
//!
//! ```text
//! g(u) = sum_i w_i 2 lambda_i s_i (s_i u - C),  lambda_i = lambda if s_i u > C else 1
//! ```
//!
//! is piecewise linear and non-decreasing. A Newton iteration on `g`,
//! safeguarded by bisection on a sign bracket, therefore lands on the exact
//! stationary point in a handful of steps.

use log::debug;
use rayon::prelude::*;

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::surprisal::{SampleStats, SurprisalSample, SurprisalTable};

use super::search::golden_section;
use super::{distance, word_cost, word_cost_gradient, CostSpec, LengthAssignment, Objective};

/// Lengths are searched within `[LENGTH_MIN, LENGTH_MAX]`.
pub const LENGTH_MIN: f64 = 1e-6;
pub const LENGTH_MAX: f64 = 1e6;

const GRADIENT_TOL: f64 = 1e-9;
const MAX_ITER: usize = 10_000;
const CAPACITY_REL_TOL: f64 = 1e-9;

/// `L(w) = E[s^2] / (C E[s])`, optimal under the symmetric quadratic distance.
pub fn closed_form_cch_lengths<T: Real>(table: &SurprisalTable<T>, spec: &CostSpec<T>) -> Result<LengthAssignment<T>> {
    spec.validate()?;
    if spec.lambda != T::one() {
        return Err(Error::Contract(format!(
            "closed-form lengths need lambda = 1 (got {}); use optimize_lengths",
            spec.lambda
        )));
    }
    let mut out = std::collections::BTreeMap::new();
    for (form, samples) in table.iter() {
        let len = SampleStats::of(samples).second_over_first() / spec.capacity;
        if !(len.is_finite() && len > T::zero()) {
            return Err(Error::Numeric { word: form.to_string(), message: "all surprisal samples are zero".into() });
        }
        out.insert(form.to_string(), len);
    }
    LengthAssignment::new(out)
}

/// Minimiser of [`word_cost`] over `L in [LENGTH_MIN, LENGTH_MAX]`.
pub fn optimize_word_length<T: Real>(form: &str, samples: &[SurprisalSample<T>], spec: &CostSpec<T>) -> Result<T> {
    let numeric = |message: String| Error::Numeric { word: form.to_string(), message };
    let stats = SampleStats::of(samples);
    if !(stats.sum > T::zero()) {
        return Err(numeric("all surprisal samples are zero; the cost does not depend on length".into()));
    }
    let two = T::of(2.0);
    let weights: Vec<(T, T)> = samples.iter().map(|s| (T::of_u64(s.count) / stats.weight, s.surprisal_bits)).collect();
    // derivative in u and its slope on the current piece
    let g = |u: T| -> (T, T) {
        let mut value = T::zero();
        let mut slope = T::zero();
        for &(w, s) in &weights {
            let lam = if s * u > spec.capacity { spec.lambda } else { T::one() };
            value = value + w * two * lam * s * (s * u - spec.capacity);
            slope = slope + w * two * lam * s * s;
        }
        (value, slope)
    };

    let (mut lo, mut hi) = (T::of(1.0 / LENGTH_MAX), T::of(1.0 / LENGTH_MIN));
    let u = if g(lo).0 >= T::zero() {
        lo
    } else if g(hi).0 <= T::zero() {
        hi
    } else {
        // start from the symmetric closed form
        let mut u = (spec.capacity / stats.second_over_first()).max(lo).min(hi);
        let tol = T::of(GRADIENT_TOL);
        for _ in 0..MAX_ITER {
            let (gu, slope) = g(u);
            if (gu * u * u).abs() <= tol {
                break;
            }
            if gu > T::zero() {
                hi = u;
            } else {
                lo = u;
            }
            let mut next = u - gu / slope;
            if !(next > lo && next < hi) {
                next = (lo + hi) / two;
            }
            if next == u || hi - lo <= T::epsilon() * u {
                break;
            }
            u = next;
        }
        u
    };
    let length = T::one() / u;
    let cost = word_cost(samples, length, spec);
    if !cost.is_finite() || !length.is_finite() {
        return Err(numeric(format!("non-finite cost {cost} at length {length}")));
    }
    debug!("{form}: length {length}, gradient {}", word_cost_gradient(samples, length, spec));
    Ok(length)
}

/// Per-word optimal lengths under `spec`'s capacity and asymmetry.
///
/// For the CCH-lower objective each word is reduced to its mean surprisal.
/// The Zipf objective has no interior optimum in relaxed lengths and is
/// rejected; optimal Zipf lengths come from [`crate::coder::build_huffman_k`].
pub fn optimize_lengths<T: Real>(table: &SurprisalTable<T>, spec: &CostSpec<T>) -> Result<LengthAssignment<T>> {
    spec.validate()?;
    if spec.objective == Objective::Zipf {
        return Err(Error::Contract("relaxed Zipf lengths are unbounded below; build a Huffman code instead".into()));
    }
    let words: Vec<(&str, &[SurprisalSample<T>])> = table.iter().collect();
    let lengths = words
        .par_iter()
        .map(|(form, samples)| {
            let len = match spec.objective {
                Objective::CchLower => {
                    let mean = SurprisalSample { surprisal_bits: SampleStats::of(samples).mean(), count: 1 };
                    optimize_word_length(form, &[mean], spec)?
                }
                _ => optimize_word_length(form, samples, spec)?,
            };
            Ok((form.to_string(), len))
        })
        .collect::<Result<std::collections::BTreeMap<String, T>>>()?;
    LengthAssignment::new(lengths)
}

/// Capacity minimising the CCH cost with lengths held at `observed`.
///
/// Golden-section search over `[min rate, max rate]`; rates are weighted by
/// word frequency times the sample's share of the word's occurrences.
pub fn fit_capacity<T: Real>(
    table: &SurprisalTable<T>,
    observed: &LengthAssignment<T>,
    freq: &FrequencyTable,
    lambda: T,
) -> Result<T> {
    let mut rates: Vec<(T, T)> = Vec::new();
    for (form, samples) in table.iter() {
        let (Some(len), true) = (observed.get(form), freq.contains(form)) else { continue };
        let stats = SampleStats::of(samples);
        let p = T::of(freq.rel_freq(form));
        for s in samples {
            rates.push((p * T::of_u64(s.count) / stats.weight, s.surprisal_bits / len));
        }
    }
    if rates.is_empty() {
        return Err(Error::validation("no word is shared by the surprisal table, observed lengths and frequencies"));
    }
    let min = rates.iter().map(|r| r.1).fold(T::infinity(), T::min);
    let max = rates.iter().map(|r| r.1).fold(T::neg_infinity(), T::max);
    if min == max {
        return Ok(min);
    }
    let spec = |c: T| CostSpec { capacity: c, lambda, objective: Objective::Cch };
    let cost = |c: T| {
        let s = spec(c);
        rates.iter().map(|&(w, r)| w * distance(r, &s)).sum::<T>()
    };
    let best = golden_section(cost, min, max, T::of(CAPACITY_REL_TOL), MAX_ITER);
    if !(best.x > T::zero()) {
        return Err(Error::Numeric { word: "<all>".into(), message: format!("fitted capacity {} is not positive", best.x) });
    }
    Ok(best.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surprisal::SurprisalSource;

    fn example() -> SurprisalTable<f64> {
        SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 10), (24.0, 1)])]).unwrap()
    }

    fn one_word_freq(form: &str) -> FrequencyTable {
        FrequencyTable::from_counts([(form.to_string(), 1)], 1, None)
    }

    #[test]
    fn closed_form_worked_example() {
        let spec = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        assert_eq!(closed_form_cch_lengths(&example(), &spec).unwrap().get("w"), Some(7.0));
    }

    #[test]
    fn closed_form_constant_and_pair() {
        let t = SurprisalTable::from_samples(
            SurprisalSource::External,
            [("c", vec![(3.0, 5)]), ("p", vec![(1.0, 1), (3.0, 1)])],
        )
        .unwrap();
        let l = closed_form_cch_lengths(&t, &CostSpec::quadratic(1.5, Objective::Cch).unwrap()).unwrap();
        assert_eq!(l.get("c"), Some(2.0));
        let l = closed_form_cch_lengths(&t, &CostSpec::quadratic(1.0, Objective::Cch).unwrap()).unwrap();
        assert_eq!(l.get("p"), Some(2.5));
    }

    #[test]
    fn closed_form_rejects_asymmetry() {
        let spec = CostSpec::new(2.0, 2.0, Objective::Cch).unwrap();
        assert!(matches!(closed_form_cch_lengths(&example(), &spec), Err(Error::Contract(_))));
    }

    #[test]
    fn optimizer_matches_closed_form_on_example() {
        let spec = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        let l = optimize_lengths(&example(), &spec).unwrap();
        assert!((l.get("w").unwrap() - 7.0).abs() < 1e-9);
    }

    #[test]
    fn single_sample_hits_capacity() {
        for lambda in [0.5, 1.0, 3.0] {
            let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(9.0, 1)])]).unwrap();
            let spec = CostSpec::new(1.5, lambda, Objective::Cch).unwrap();
            let l: f64 = optimize_lengths(&t, &spec).unwrap().get("w").unwrap();
            assert!((l - 6.0).abs() < 1e-9);
            assert!(word_cost(t.samples("w").unwrap(), l, &spec) < 1e-20);
        }
    }

    #[test]
    fn cch_lower_objective_optimum_is_mean_over_capacity() {
        let spec = CostSpec::new(2.0, 3.0, Objective::CchLower).unwrap();
        let l = optimize_lengths(&example(), &spec).unwrap();
        assert!((l.get("w").unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn zero_surprisal_and_zipf_are_rejected() {
        let t = SurprisalTable::from_samples(SurprisalSource::External, [("z", vec![(0.0, 2)])]).unwrap();
        let spec = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        assert!(matches!(optimize_lengths(&t, &spec), Err(Error::Numeric { word, .. }) if word == "z"));
        let zipf = CostSpec::quadratic(2.0, Objective::Zipf).unwrap();
        assert!(matches!(optimize_lengths(&example(), &zipf), Err(Error::Contract(_))));
    }

    #[test]
    fn extreme_surprisal_is_clamped_to_domain() {
        let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(1e9, 1)])]).unwrap();
        let spec = CostSpec::quadratic(1.0, Objective::Cch).unwrap();
        assert_eq!(optimize_lengths(&t, &spec).unwrap().get("w"), Some(LENGTH_MAX));
    }

    #[test]
    fn fit_capacity_single_rate() {
        let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(4.0, 1)])]).unwrap();
        let obs = LengthAssignment::from_pairs([("w", 2.0)]).unwrap();
        assert_eq!(fit_capacity(&t, &obs, &one_word_freq("w"), 1.0).unwrap(), 2.0);
    }

    #[test]
    fn fit_capacity_weighted_mean() {
        let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(1.0, 3), (5.0, 1)])]).unwrap();
        let obs = LengthAssignment::from_pairs([("w", 1.0)]).unwrap();
        let c: f64 = fit_capacity(&t, &obs, &one_word_freq("w"), 1.0).unwrap();
        assert!((c - 2.0).abs() < 1e-7);
    }

    #[test]
    fn fit_capacity_needs_overlap() {
        let t = example();
        let obs = LengthAssignment::from_pairs([("x", 1.0)]).unwrap();
        assert!(fit_capacity(&t, &obs, &one_word_freq("w"), 1.0).is_err());
    }
}
