use std::collections::BTreeMap;
use std::sync::Arc;

use logratio_core::dataset::{Group, GroupMap};
use logratio_core::metrics::{aggregate_binary, brier_multiclass, evaluate, precision_recall_f1, top_n_rate};
use logratio_core::ProbPrediction;
use proptest::prelude::*;

/// Straightforward reference implementations, written independently of the
/// library: confusion matrix, explicit sorting, one-hot vectors.
mod oracle {
    pub fn brier(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
        let mut total = 0.0;
        for (p, &l) in probs.iter().zip(labels) {
            let onehot: Vec<f64> = (0..p.len()).map(|g| if g == l { 1.0 } else { 0.0 }).collect();
            total += p.iter().zip(&onehot).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }
        total / labels.len() as f64
    }

    fn argmax(p: &[f64]) -> usize {
        let mut order: Vec<usize> = (0..p.len()).collect();
        order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
        order[0]
    }

    pub fn prf(probs: &[Vec<f64>], labels: &[usize], g: usize) -> (f64, f64, f64) {
        let mut confusion = vec![vec![0usize; g]; g];
        for (p, &l) in probs.iter().zip(labels) {
            confusion[l][argmax(p)] += 1;
        }
        let n = labels.len() as f64;
        let (mut p_w, mut r_w) = (0.0, 0.0);
        for (c, row) in confusion.iter().enumerate() {
            let support: usize = row.iter().sum();
            let predicted: usize = confusion.iter().map(|r| r[c]).sum();
            let tp = row[c] as f64;
            let w = support as f64 / n;
            if predicted > 0 {
                p_w += w * tp / predicted as f64;
            }
            if support > 0 {
                r_w += w * tp / support as f64;
            }
        }
        let f = if p_w + r_w > 0.0 { 2.0 * p_w * r_w / (p_w + r_w) } else { 0.0 };
        (100.0 * p_w, 100.0 * r_w, 100.0 * f)
    }

    pub fn top_n(probs: &[Vec<f64>], labels: &[usize], n: usize) -> f64 {
        let mut hits = 0;
        for (p, &l) in probs.iter().zip(labels) {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[b].partial_cmp(&p[a]).unwrap().then(a.cmp(&b)));
            if order[..n].contains(&l) {
                hits += 1;
            }
        }
        100.0 * hits as f64 / labels.len() as f64
    }
}

fn predictions(probs: &[Vec<f64>]) -> Vec<ProbPrediction> {
    let g = probs[0].len();
    let ids: Arc<[usize]> = (0..g).collect::<Vec<_>>().into();
    probs
        .iter()
        .map(|p| ProbPrediction { probs: p.clone(), class_ids: ids.clone() })
        .collect()
}

/// Random probability rows, with some coarse values so ties occur.
fn prob_rows(n: usize, g: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(prop_oneof![0u32..4, 0u32..1000], g), n).prop_map(|rows| {
        rows.into_iter()
            .map(|r| {
                let r: Vec<f64> = r.into_iter().map(|v| v as f64 + 1e-3).collect();
                let s: f64 = r.iter().sum();
                r.into_iter().map(|v| v / s).collect()
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_reference_implementation(
        (probs, labels) in (prob_rows(100, 5), prop::collection::vec(0usize..5, 100))
    ) {
        let preds = predictions(&probs);
        let b = brier_multiclass(&preds, &labels).unwrap();
        prop_assert!((b - oracle::brier(&probs, &labels)).abs() < 1e-12);
        let (p, r, f) = precision_recall_f1(&preds, &labels).unwrap();
        let (op, or, of) = oracle::prf(&probs, &labels, 5);
        prop_assert!((p - op).abs() < 1e-12 && (r - or).abs() < 1e-12 && (f - of).abs() < 1e-12);
        let mut last = 0.0;
        for n in 1..=5 {
            let t = top_n_rate(&preds, &labels, n).unwrap();
            prop_assert!((t - oracle::top_n(&probs, &labels, n)).abs() < 1e-12);
            prop_assert!(t >= last);
            last = t;
        }
        prop_assert_eq!(last, 100.0);
        // identical arithmetic on both paths
        prop_assert_eq!(top_n_rate(&preds, &labels, 1).unwrap(), r);
        prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
    }

    #[test]
    fn binary_brier_is_consistent(
        (probs, labels) in (prob_rows(50, 4), prop::collection::vec(0usize..4, 50))
    ) {
        let gmap = GroupMap::new(vec![Group::M, Group::H, Group::U, Group::U]);
        let preds = predictions(&probs);
        let report = evaluate(&preds, &labels, &gmap).unwrap();
        let mut direct = 0.0;
        for (p, &l) in probs.iter().zip(&labels) {
            let mh = p[0] + p[1];
            let u = p[2] + p[3];
            let (tm, tu) = if l < 2 { (1.0, 0.0) } else { (0.0, 1.0) };
            direct += (mh - tm).powi(2) + (u - tu).powi(2);
        }
        direct /= labels.len() as f64;
        prop_assert!((report.binary_brier - direct).abs() < 1e-12);
        let (bp, _) = aggregate_binary(&preds, &labels, &gmap).unwrap();
        for q in &bp {
            prop_assert!((q.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert!(report.brier >= 0.0 && report.brier <= 2.0);
        prop_assert!(report.binary_brier >= 0.0 && report.binary_brier <= 2.0);
    }
}

#[test]
fn empirical_distribution_minimizes_constant_brier() {
    let labels = [0usize, 0, 0, 1, 1, 2, 0, 1, 2, 2, 0];
    let counts = [5.0, 3.0, 3.0];
    let empirical: Vec<f64> = counts.iter().map(|c| c / labels.len() as f64).collect();
    let constant = |p: &[f64]| brier_multiclass(&predictions(&vec![p.to_vec(); labels.len()]), &labels).unwrap();
    let best = constant(&empirical);
    for a in 0..=100 {
        for b in 0..=(100 - a) {
            let p = [a as f64 / 100.0, b as f64 / 100.0, (100 - a - b) as f64 / 100.0];
            assert!(constant(&p) >= best - 1e-15, "{p:?}");
        }
    }
}

#[test]
fn uniform_predictor_over_46_zones() {
    let g = 46;
    let probs = vec![vec![1.0 / g as f64; g]; 92];
    let labels: Vec<usize> = (0..92).map(|i| i % g).collect();
    let gmap = GroupMap::new((0..g).map(|i| if i < 20 { Group::M } else { Group::U }).collect());
    let report = evaluate(&predictions(&probs), &labels, &gmap).unwrap();
    assert_eq!(report.brier, 45.0 / 46.0);
    let expect: BTreeMap<usize, f64> = [1, 2, 4, 8].into_iter().map(|n| (n, 100.0 * n as f64 / 46.0)).collect();
    for (n, v) in &report.top_n {
        assert!((v - expect[n]).abs() < 1e-9, "top-{n}: {v}");
    }
}

#[test]
fn top_n_beyond_class_count_is_full() {
    let probs = vec![vec![0.7, 0.2, 0.1]; 4];
    let gmap = GroupMap::new(vec![Group::M, Group::H, Group::U]);
    let report = evaluate(&predictions(&probs), &[0, 1, 2, 2], &gmap).unwrap();
    assert_eq!(report.top_n[&4], 100.0);
    assert_eq!(report.top_n[&8], 100.0);
    assert_eq!(report.top_n[&1], 25.0);
}
