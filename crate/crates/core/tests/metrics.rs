//! Metrics against brute-force oracles written from the textbook
//! definitions (pair counting, per-class precision/recall, joint
//! distributions) rather than the contingency-table shortcuts.

mod common;

use msgat::autodiff::Tensor;
use msgat::train::metrics::{ari, binary_f1, f1_scores, kmeans, nmi, roc_auc, LinearProbe};
use proptest::prelude::*;

const TOL: f64 = 1e-12;

fn labelling(max_len: usize, classes: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (1..=max_len).prop_flat_map(move |n| {
        (
            prop::collection::vec(0..classes, n),
            prop::collection::vec(0..classes, n),
        )
    })
}

proptest! {
    #[test]
    fn f1_matches_per_class_definition((pred, truth) in labelling(20, 5)) {
        let (macro_f1, micro_f1) = f1_scores(&pred, &truth).unwrap();
        let (om, ou) = common::oracle_f1(&pred, &truth);
        prop_assert!((macro_f1 - om).abs() <= TOL, "{macro_f1} vs {om}");
        prop_assert!((micro_f1 - ou).abs() <= TOL, "{micro_f1} vs {ou}");
    }

    #[test]
    fn nmi_matches_joint_distribution((a, b) in labelling(20, 4)) {
        let got = nmi(&a, &b).unwrap();
        let want = common::oracle_nmi(&a, &b);
        prop_assert!((got - want).abs() <= TOL, "{got} vs {want}");
    }

    #[test]
    fn ari_matches_pair_counting((a, b) in labelling(20, 4)) {
        let got = ari(&a, &b).unwrap();
        let want = common::oracle_ari(&a, &b);
        prop_assert!((got - want).abs() <= TOL, "{got} vs {want}");
    }

    #[test]
    fn auc_matches_pair_counting(
        data in prop::collection::vec((0u8..6, any::<bool>()), 2..=20)
            .prop_filter("both classes", |d| d.iter().any(|x| x.1) && d.iter().any(|x| !x.1))
    ) {
        // coarse scores force ties
        let scores: Vec<f64> = data.iter().map(|x| x.0 as f64 / 5.0).collect();
        let labels: Vec<bool> = data.iter().map(|x| x.1).collect();
        let got = roc_auc(&scores, &labels).unwrap();
        let want = common::oracle_auc(&scores, &labels);
        prop_assert!((got - want).abs() <= TOL, "{got} vs {want}");
    }

    #[test]
    fn nmi_and_ari_ignore_label_names((a, b) in labelling(20, 4)) {
        let renamed: Vec<usize> = a.iter().map(|&x| 7 - x).collect();
        prop_assert!((nmi(&renamed, &b).unwrap() - nmi(&a, &b).unwrap()).abs() <= TOL);
        prop_assert!((ari(&renamed, &b).unwrap() - ari(&a, &b).unwrap()).abs() <= TOL);
    }
}

#[test]
fn hand_worked_values() {
    // two classes: class 0 has tp 2, fp 1, fn 0; class 1 has tp 1, fp 0, fn 1
    let (m, u) = f1_scores(&[0, 0, 0, 1], &[0, 0, 1, 1]).unwrap();
    assert!((m - (0.8 + 2.0 / 3.0) / 2.0).abs() < TOL);
    assert_eq!(u, 0.75);
    assert_eq!(nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
    assert_eq!(ari(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap(), 1.0);
    assert_eq!(
        roc_auc(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]).unwrap(),
        0.75
    );
    assert!((binary_f1(&[0.9, 0.6, 0.4, 0.2], &[true, false, true, false], 0.5).unwrap() - 0.5).abs() < TOL);
}

#[test]
fn kmeans_recovers_separated_blobs() {
    let centres = [[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]];
    let mut rows = Vec::new();
    let mut truth = Vec::new();
    for (k, c) in centres.iter().enumerate() {
        for i in 0..15 {
            let t = i as f64;
            rows.push(vec![c[0] + (t * 1.7).sin(), c[1] + (t * 2.3).cos()]);
            truth.push(k);
        }
    }
    let km = kmeans(&Tensor::from_rows(&rows), 3, 5, 1).unwrap();
    assert_eq!(nmi(&km.assignments, &truth).unwrap(), 1.0);
    assert_eq!(ari(&km.assignments, &truth).unwrap(), 1.0);
    let again = kmeans(&Tensor::from_rows(&rows), 3, 5, 1).unwrap();
    assert_eq!(km, again);
}

#[test]
fn probe_separates_linearly_separable_classes() {
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..30 {
        let t = i as f64 / 30.0;
        let class = i % 3;
        rows.push(vec![class as f64 * 3.0 + t, (class as f64 - 1.0) * 2.0 - t]);
        y.push(class);
    }
    let x = Tensor::from_rows(&rows);
    let probe = LinearProbe::fit(&x, &y, 3).unwrap();
    assert_eq!(probe.predict(&x), y);
}
