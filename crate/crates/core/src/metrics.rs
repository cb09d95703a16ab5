//! Evaluation of probabilistic predictions: multiclass Brier score,
//! support-weighted precision / recall / F1, top-n recognition rates and the
//! aggregated `(M or H)` vs `U` binary scenario.
//!
//! Percentages are in `[0, 100]`. Ranking ties go to the lowest class index,
//! the same rule as [`ProbPrediction::argmax`].

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::classifiers::ProbPrediction;
use crate::dataset::GroupMap;
use crate::error::{Error, Result};

/// Ranks reported by [`evaluate`].
pub const TOP_N: [usize; 4] = [1, 2, 4, 8];

/// Class id of `M or H` in the aggregated binary scenario.
pub const BINARY_MINERAL_OR_HYDRATED: usize = 0;
/// Class id of `U` in the aggregated binary scenario.
pub const BINARY_UNMINERALIZED: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub brier: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub top_n: BTreeMap<usize, f64>,
    pub binary_brier: f64,
    pub binary_precision: f64,
    pub binary_recall: f64,
    pub binary_f1: f64,
}

/// Shared by recall and top-n so the two agree bit for bit.
fn percent(count: usize, n: usize) -> f64 {
    100.0 * count as f64 / n as f64
}

/// Position of every label in its prediction's class list.
fn positions(preds: &[ProbPrediction], labels: &[usize]) -> Result<Vec<usize>> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: preds.len(),
            got: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty);
    }
    preds
        .iter()
        .zip(labels)
        .map(|(p, &l)| p.position(l).ok_or(Error::UnknownLabel { label: l }))
        .collect()
}

/// Running sum with Neumaier compensation, read out as an unevaluated
/// `hi + lo` pair.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// `(hi + lo) / n`, rounded once.
    fn mean(&self, n: usize) -> f64 {
        let n = n as f64;
        let hi = self.sum + self.comp;
        let lo = self.comp - (hi - self.sum);
        let q = hi / n;
        let r = (-q).mul_add(n, hi) + lo;
        q + r / n
    }
}

/// Mean over samples of `sum_g (p_g - [g = true])^2`.
///
/// Each square is expanded as `p^2 - 2p[g = true] + [g = true]` and split
/// into error-free parts before summation, so the result is the correctly
/// rounded score in all but pathological cases. A uniform predictor over
/// `G` classes scores exactly `(G - 1) / G`.
pub fn brier_multiclass(preds: &[ProbPrediction], labels: &[usize]) -> Result<f64> {
    let pos = positions(preds, labels)?;
    let mut acc = CompensatedSum::default();
    for (p, &t) in preds.iter().zip(&pos) {
        for (g, &q) in p.probs.iter().enumerate() {
            let sq = q * q;
            acc.add(sq);
            acc.add(q.mul_add(q, -sq));
            if g == t {
                acc.add(-2.0 * q);
                acc.add(1.0);
            }
        }
    }
    Ok(acc.mean(preds.len()))
}

/// Support-weighted precision and recall of the argmax labels, and their
/// harmonic mean, as percentages.
pub fn precision_recall_f1(preds: &[ProbPrediction], labels: &[usize]) -> Result<(f64, f64, f64)> {
    positions(preds, labels)?;
    let n = preds.len();
    let mut support: BTreeMap<usize, usize> = BTreeMap::new();
    let mut predicted: BTreeMap<usize, usize> = BTreeMap::new();
    let mut hits: BTreeMap<usize, usize> = BTreeMap::new();
    for (p, &l) in preds.iter().zip(labels) {
        let guess = p.label();
        *support.entry(l).or_default() += 1;
        *predicted.entry(guess).or_default() += 1;
        if guess == l {
            *hits.entry(l).or_default() += 1;
        }
    }
    let mut precision = 0.0;
    for (class, &s) in &support {
        let tp = hits.get(class).copied().unwrap_or(0);
        let q = predicted.get(class).copied().unwrap_or(0);
        if q > 0 {
            precision += (s as f64 / n as f64) * (tp as f64 / q as f64);
        }
    }
    let precision = 100.0 * precision;
    // support-weighted recall collapses to accuracy
    let recall = percent(hits.values().sum(), n);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok((precision, recall, f1))
}

/// Zero-based rank of class position `t`: classes ahead of it have higher
/// probability, or equal probability and a lower index.
fn rank_of(probs: &[f64], t: usize) -> usize {
    let pt = probs[t];
    probs
        .iter()
        .enumerate()
        .filter(|&(j, &p)| p > pt || (p == pt && j < t))
        .count()
}

/// Percentage of samples whose true class is among the `n` most probable.
pub fn top_n_rate(preds: &[ProbPrediction], labels: &[usize], n: usize) -> Result<f64> {
    let pos = positions(preds, labels)?;
    let g = preds[0].probs.len();
    if n == 0 || n > g {
        return Err(Error::BadN { n, n_classes: g });
    }
    let inside = preds
        .iter()
        .zip(&pos)
        .filter(|(p, &t)| rank_of(&p.probs, t) < n)
        .count();
    Ok(percent(inside, preds.len()))
}

/// Sums class probabilities within each side of the `(M or H)` vs `U` split.
///
/// Binary predictions are over ids [`BINARY_MINERAL_OR_HYDRATED`] and
/// [`BINARY_UNMINERALIZED`].
pub fn aggregate_binary(
    preds: &[ProbPrediction],
    labels: &[usize],
    gmap: &GroupMap,
) -> Result<(Vec<ProbPrediction>, Vec<usize>)> {
    positions(preds, labels)?;
    let ids: Arc<[usize]> = vec![BINARY_MINERAL_OR_HYDRATED, BINARY_UNMINERALIZED].into();
    let mut out = Vec::with_capacity(preds.len());
    for p in preds {
        let mut mh = 0.0;
        let mut u = 0.0;
        for (&class, &q) in p.class_ids.iter().zip(&p.probs) {
            if gmap.get(class)?.is_mineral_or_hydrated() {
                mh += q;
            } else {
                u += q;
            }
        }
        out.push(ProbPrediction {
            probs: vec![mh, u],
            class_ids: ids.clone(),
        });
    }
    let binary_labels = labels
        .iter()
        .map(|&l| {
            Ok(if gmap.get(l)?.is_mineral_or_hydrated() {
                BINARY_MINERAL_OR_HYDRATED
            } else {
                BINARY_UNMINERALIZED
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((out, binary_labels))
}

/// Every report field. Ranks in [`TOP_N`] above the class count are reported
/// at that count, i.e. 100%.
pub fn evaluate(preds: &[ProbPrediction], labels: &[usize], gmap: &GroupMap) -> Result<MetricsReport> {
    let brier = brier_multiclass(preds, labels)?;
    let (precision, recall, f1) = precision_recall_f1(preds, labels)?;
    let g = preds[0].probs.len();
    let mut top_n = BTreeMap::new();
    for n in TOP_N {
        top_n.insert(n, top_n_rate(preds, labels, n.min(g))?);
    }
    let (bp, bl) = aggregate_binary(preds, labels, gmap)?;
    let binary_brier = brier_multiclass(&bp, &bl)?;
    let (binary_precision, binary_recall, binary_f1) = precision_recall_f1(&bp, &bl)?;
    Ok(MetricsReport {
        brier,
        precision,
        recall,
        f1,
        top_n,
        binary_brier,
        binary_precision,
        binary_recall,
        binary_f1,
    })
}
