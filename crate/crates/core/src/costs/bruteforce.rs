//! Exhaustive search over integer length assignments for tiny vocabularies.

use std::collections::BTreeMap;

use crate::corpus::FrequencyTable;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::surprisal::SurprisalTable;

use super::{objective_cost, CostSpec, LengthAssignment, Objective};

pub const MAX_BRUTEFORCE_VOCAB: usize = 5;
const MAX_BRUTEFORCE_LEN: usize = 16;
const MAX_CANDIDATES: u64 = 10_000_000;

/// Integer lengths in `[1, max_len]` for each word that satisfy Kraft's
/// inequality in base `k` and minimise [`objective_cost`]. Among equal-cost
/// assignments the first in lexicographic order of (sorted-form) lengths is
/// returned.
pub fn bruteforce_lexicalization<T: Real>(
    freq: &FrequencyTable,
    table: &SurprisalTable<T>,
    spec: &CostSpec<T>,
    k: usize,
    max_len: usize,
) -> Result<LengthAssignment<T>> {
    spec.validate()?;
    if k < 2 {
        return Err(Error::Config(format!("code alphabet size must be at least 2, got {k}")));
    }
    if max_len == 0 || max_len > MAX_BRUTEFORCE_LEN {
        return Err(Error::TooLarge(format!("max_len must be in 1..={MAX_BRUTEFORCE_LEN}, got {max_len}")));
    }
    let words: Vec<&str> = match spec.objective {
        Objective::Zipf => freq.iter().map(|r| r.form.as_str()).collect(),
        _ => table.forms().filter(|f| freq.contains(f)).collect(),
    };
    if words.is_empty() {
        return Err(Error::validation("no words to lexicalize"));
    }
    if words.len() > MAX_BRUTEFORCE_VOCAB {
        return Err(Error::TooLarge(format!(
            "vocabulary of {} exceeds the exhaustive-search limit of {MAX_BRUTEFORCE_VOCAB}",
            words.len()
        )));
    }
    let candidates = (max_len as u64).checked_pow(words.len() as u32).unwrap_or(u64::MAX);
    if candidates > MAX_CANDIDATES {
        return Err(Error::TooLarge(format!("{candidates} candidate assignments")));
    }

    // Kraft in exact integers: sum k^(max_len - l) <= k^max_len
    let k = k as u128;
    let budget = k.checked_pow(max_len as u32).ok_or_else(|| Error::TooLarge("k^max_len overflows".into()))?;
    let units: Vec<u128> = (0..=max_len).map(|l| k.pow((max_len - l) as u32)).collect();

    let mut lens = vec![1usize; words.len()];
    let mut best: Option<(T, Vec<usize>)> = None;
    loop {
        if lens.iter().map(|&l| units[l]).sum::<u128>() <= budget {
            let assignment = assignment(&words, &lens)?;
            let cost = objective_cost(&assignment, table, freq, spec)?;
            if best.as_ref().map_or(true, |(c, _)| cost < *c) {
                best = Some((cost, lens.clone()));
            }
        }
        // odometer, last word fastest
        let mut i = words.len();
        loop {
            if i == 0 {
                return match best {
                    Some((_, lens)) => assignment(&words, &lens),
                    None => Err(Error::validation(format!(
                        "no assignment with lengths up to {max_len} satisfies Kraft's inequality"
                    ))),
                };
            }
            i -= 1;
            if lens[i] < max_len {
                lens[i] += 1;
                break;
            }
            lens[i] = 1;
        }
    }
}

fn assignment<T: Real>(words: &[&str], lens: &[usize]) -> Result<LengthAssignment<T>> {
    LengthAssignment::new(
        words.iter().zip(lens).map(|(w, &l)| (w.to_string(), T::of_u64(l as u64))).collect::<BTreeMap<_, _>>(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surprisal::SurprisalSource;

    fn freq(counts: &[(&str, u64)]) -> FrequencyTable {
        let total = counts.iter().map(|c| c.1).sum();
        FrequencyTable::from_counts(counts.iter().map(|(f, c)| (f.to_string(), *c)), total, None)
    }

    #[test]
    fn zipf_dyadic() {
        let f = freq(&[("a", 2), ("b", 1), ("c", 1)]);
        let t = SurprisalTable::<f64>::new(SurprisalSource::External);
        let spec = CostSpec::quadratic(1.0, Objective::Zipf).unwrap();
        let l = bruteforce_lexicalization(&f, &t, &spec, 2, 6).unwrap();
        assert_eq!((l.get("a"), l.get("b"), l.get("c")), (Some(1.0), Some(2.0), Some(2.0)));
    }

    #[test]
    fn zipf_single_word() {
        let f = freq(&[("a", 3)]);
        let t = SurprisalTable::<f64>::new(SurprisalSource::External);
        let spec = CostSpec::quadratic(1.0, Objective::Zipf).unwrap();
        assert_eq!(bruteforce_lexicalization(&f, &t, &spec, 2, 6).unwrap().get("a"), Some(1.0));
    }

    #[test]
    fn cch_integer_optimum_on_worked_example() {
        let f = freq(&[("w", 11)]);
        let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 10), (24.0, 1)])]).unwrap();
        let spec = CostSpec::quadratic(2.0, Objective::Cch).unwrap();
        assert_eq!(bruteforce_lexicalization(&f, &t, &spec, 2, 8).unwrap().get("w"), Some(7.0));
    }

    #[test]
    fn kraft_forces_longer_words() {
        // four words cannot all have length 1 in binary
        let f = freq(&[("a", 1), ("b", 1), ("c", 1), ("d", 1)]);
        let t = SurprisalTable::<f64>::new(SurprisalSource::External);
        let spec = CostSpec::quadratic(1.0, Objective::Zipf).unwrap();
        let l = bruteforce_lexicalization(&f, &t, &spec, 2, 4).unwrap();
        assert!(l.iter().all(|(_, v)| v == 2.0));
    }

    #[test]
    fn guards() {
        let f = freq(&[("a", 1), ("b", 1), ("c", 1), ("d", 1), ("e", 1), ("f", 1)]);
        let t = SurprisalTable::<f64>::new(SurprisalSource::External);
        let spec = CostSpec::quadratic(1.0, Objective::Zipf).unwrap();
        assert!(matches!(bruteforce_lexicalization(&f, &t, &spec, 2, 3), Err(Error::TooLarge(_))));
        let f = freq(&[("a", 1)]);
        assert!(matches!(bruteforce_lexicalization(&f, &t, &spec, 1, 3), Err(Error::Config(_))));
        assert!(matches!(bruteforce_lexicalization(&f, &t, &spec, 2, 0), Err(Error::TooLarge(_))));
        let f = freq(&[("a", 1), ("b", 1), ("c", 1)]);
        assert!(matches!(bruteforce_lexicalization(&f, &t, &spec, 2, 1), Err(Error::Validation { .. })));
    }
}
