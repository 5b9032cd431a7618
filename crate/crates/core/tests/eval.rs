use std::collections::BTreeMap;

use proptest::prelude::*;

use wordlen::corpus::FrequencyTable;
use wordlen::eval::{evaluate, pearson, spearman, weighted_fit};

fn rows() -> impl Strategy<Value = Vec<(f64, f64, f64)>> {
    proptest::collection::vec((0.1f64..20.0, 1.0f64..15.0, 0.001f64..1.0), 2..60)
}

fn unzip3(v: &[(f64, f64, f64)]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    (v.iter().map(|r| r.0).collect(), v.iter().map(|r| r.1).collect(), v.iter().map(|r| r.2).collect())
}

proptest! {
    #[test]
    fn mse_is_scale_invariant(r in rows()) {
        let (p, l, w) = unzip3(&r);
        let base = weighted_fit(&p, &l, &w).unwrap();
        for c in [0.1, 3.0, 100.0] {
            let scaled: Vec<f64> = p.iter().map(|x| x * c).collect();
            let fit = weighted_fit(&scaled, &l, &w).unwrap();
            prop_assert!((fit.weighted_mse - base.weighted_mse).abs() <= 1e-12 * base.weighted_mse.max(1.0));
            prop_assert!((fit.slope * c - base.slope).abs() <= 1e-12 * base.slope.abs().max(1.0));
        }
    }

    #[test]
    fn duplicating_a_row_at_half_weight_is_neutral(r in rows(), pick in any::<proptest::sample::Index>()) {
        let (mut p, mut l, mut w) = unzip3(&r);
        let base = weighted_fit(&p, &l, &w).unwrap();
        let i = pick.index(p.len());
        w[i] /= 2.0;
        p.push(p[i]);
        l.push(l[i]);
        w.push(w[i]);
        let dup = weighted_fit(&p, &l, &w).unwrap();
        prop_assert!((dup.slope - base.slope).abs() <= 1e-12 * base.slope.abs().max(1.0));
        prop_assert!((dup.weighted_mse - base.weighted_mse).abs() <= 1e-12 * base.weighted_mse.max(1.0));
    }

    #[test]
    fn spearman_is_rank_invariant(r in rows()) {
        let (x, y, _) = unzip3(&r);
        // a constant vector has no rank correlation
        prop_assume!(x.iter().any(|v| *v != x[0]) && y.iter().any(|v| *v != y[0]));
        let base = spearman(&x, &y).unwrap();
        let ex: Vec<f64> = x.iter().map(|v| v.exp()).collect();
        let cube: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
        prop_assert!((spearman(&ex, &y).unwrap() - base).abs() <= 1e-12);
        prop_assert!((spearman(&x, &cube).unwrap() - base).abs() <= 1e-12);
        prop_assert!((-1.0..=1.0).contains(&base));
        prop_assert!((-1.0..=1.0).contains(&pearson(&x, &y).unwrap()));
    }
}

#[test]
fn evaluate_uses_character_lengths_and_frequency_weights() {
    let f = FrequencyTable::from_counts(
        [("ab".to_string(), 3), ("abcd".to_string(), 1), ("zzz".to_string(), 2)],
        6,
        None,
    );
    let preds: BTreeMap<String, f64> = [("ab".to_string(), 2.0), ("abcd".to_string(), 4.0), ("other".to_string(), 9.0)].into();
    let m = evaluate(&preds, &f).unwrap();
    assert_eq!(m.n_words, 2);
    // observed lengths equal the predictions, so the fit is exact
    assert!((m.slope - 1.0).abs() < 1e-15 && m.weighted_mse < 1e-28);
    assert_eq!((m.spearman, m.pearson), (1.0, 1.0));

    // the hand fixture: preds [2, 4], lengths [4, 2], weights [3, 1]
    let f = FrequencyTable::from_counts([("abcd".to_string(), 3), ("ab".to_string(), 1)], 4, None);
    let preds: BTreeMap<String, f64> = [("abcd".to_string(), 2.0), ("ab".to_string(), 4.0)].into();
    let m = evaluate(&preds, &f).unwrap();
    assert!((m.slope - 8.0 / 7.0).abs() < 1e-12);
    assert!((m.weighted_mse - 27.0 / 7.0).abs() < 1e-12);
}
