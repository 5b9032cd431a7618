use proptest::prelude::*;

use wordlen::corpus::FrequencyTable;
use wordlen::hypotheses::{predict_cch, predict_cch_lower, predict_zipf, read_predictions, Hypothesis};
use wordlen::surprisal::{population_variance, SurprisalSource, SurprisalTable};

fn table() -> impl Strategy<Value = SurprisalTable<f64>> {
    proptest::collection::btree_map(
        "[a-z]{1,6}",
        proptest::collection::vec((0.0f64..30.0, 1u64..20), 1..8),
        1..20,
    )
    .prop_map(|words| SurprisalTable::from_samples(SurprisalSource::External, words).unwrap())
}

proptest! {
    #[test]
    fn variance_to_mean_identity(t in table()) {
        let cch = predict_cch(&t);
        let lower = predict_cch_lower(&t);
        for (form, samples) in t.iter() {
            let (Some(c), Some(m)) = (cch.get(form), lower.get(form)) else { continue };
            let via_variance = m + population_variance(samples) / m;
            prop_assert!((c - via_variance).abs() <= 1e-9 * c.max(1.0), "{}: {} vs {}", form, c, via_variance);
        }
    }

    #[test]
    fn cch_dominates_cch_lower(t in table()) {
        let cch = predict_cch(&t);
        let lower = predict_cch_lower(&t);
        for (form, c) in &cch.per_word {
            prop_assert!(*c >= lower.get(form).unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn context_free_words_collapse(s in 0.01f64..30.0, counts in proptest::collection::vec(1u64..50, 1..6)) {
        let t = SurprisalTable::from_samples(
            SurprisalSource::External,
            [("w", counts.iter().map(|&c| (s, c)).collect::<Vec<_>>())],
        ).unwrap();
        let (c, m) = (predict_cch(&t).get("w").unwrap(), predict_cch_lower(&t).get("w").unwrap());
        prop_assert!((c - m).abs() <= 1e-12 * s);
        prop_assert!((m - s).abs() <= 1e-12 * s);
    }

    #[test]
    fn prediction_tsv_round_trips(t in table()) {
        let mut buf = Vec::new();
        predict_cch(&t).write_tsv(&mut buf).unwrap();
        let sets = read_predictions::<f64, _>(&buf[..]).unwrap();
        if predict_cch(&t).is_empty() {
            prop_assert!(sets.is_empty());
        } else {
            prop_assert_eq!(sets.len(), 1);
            prop_assert_eq!(sets[0].hypothesis, Hypothesis::Cch);
            prop_assert_eq!(&sets[0].per_word, &predict_cch(&t).per_word);
        }
    }
}

#[test]
fn zipf_examples() {
    let f = FrequencyTable::from_counts([("a".to_string(), 3), ("b".to_string(), 2), ("c".to_string(), 1)], 6, None);
    let z = predict_zipf::<f64>(&f);
    assert_eq!(z.get("a"), Some(1.0));
    assert!((z.get("b").unwrap() - 1.584962500721156).abs() < 1e-15);
    let single = FrequencyTable::from_counts([("only".to_string(), 5)], 5, None);
    let z = predict_zipf::<f64>(&single);
    assert!(z.is_empty());
    assert_eq!(z.excluded, ["only"]);
}

#[test]
fn worked_example_estimators() {
    let t = SurprisalTable::from_samples(SurprisalSource::External, [("w", vec![(2.0, 10), (24.0, 1)])]).unwrap();
    assert_eq!(predict_cch_lower(&t).get("w"), Some(4.0));
    assert_eq!(predict_cch(&t).get("w"), Some(14.0));
    assert_eq!(population_variance(t.samples("w").unwrap()), 40.0);
}

#[test]
fn zero_surprisal_words_are_excluded() {
    let t = SurprisalTable::from_samples(SurprisalSource::External, [("z", vec![(0.0, 3)]), ("w", vec![(1.0, 1), (3.0, 1)])])
        .unwrap();
    let cch = predict_cch(&t);
    assert_eq!(cch.excluded, ["z"]);
    assert_eq!(cch.get("w"), Some(2.5));
    assert_eq!(predict_cch_lower(&t).get("w"), Some(2.0));
}
