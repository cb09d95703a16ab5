//! Probabilistic multi-class classifiers behind one fit / predict interface.
//!
//! Labels are arbitrary `usize` class ids. A fitted model keeps the sorted
//! list of ids it saw in training and every [`ProbPrediction`] is expressed
//! over that list.

pub mod forest;
pub mod knn;
pub mod logistic;
pub mod mlp;
pub mod naive_bayes;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, to_row_major};

pub use forest::RandomForest;
pub use knn::Knn;
pub use logistic::Logistic;
pub use mlp::{Mlp, MlpNetwork};
pub use naive_bayes::GaussianNb;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn,
    GaussianNb,
    Logistic,
    RandomForest,
    Mlp,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 5] = [
        ClassifierKind::Logistic,
        ClassifierKind::GaussianNb,
        ClassifierKind::Knn,
        ClassifierKind::Mlp,
        ClassifierKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::GaussianNb => "gaussian_nb",
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::RandomForest => "random_forest",
            ClassifierKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown classifier kind {s:?}")))
    }
}

/// Classifier kind plus hyperparameters; unset fields take the kind's default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nb_var_smoothing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2_lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_trees: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_per_split: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_sizes: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        Self {
            kind,
            id: None,
            k: None,
            nb_var_smoothing: None,
            l2_lambda: None,
            max_iter: None,
            n_trees: None,
            max_depth: None,
            features_per_split: None,
            bootstrap: None,
            hidden_sizes: None,
            learning_rate: None,
            epochs: None,
            batch_size: None,
            patience: None,
            validation_fraction: None,
            seed: None,
        }
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.kind.to_string())
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("k", self.k),
            ("max_iter", self.max_iter),
            ("n_trees", self.n_trees),
            ("max_depth", self.max_depth),
            ("features_per_split", self.features_per_split),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
            ("patience", self.patience),
        ];
        for (name, v) in positive {
            if v == Some(0) {
                return Err(Error::InvalidSpec(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("nb_var_smoothing", self.nb_var_smoothing), ("l2_lambda", self.l2_lambda)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::InvalidSpec(format!("{name} must be >= 0, got {v}")));
                }
            }
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::InvalidSpec(format!("learning_rate must be > 0, got {lr}")));
            }
        }
        if let Some(f) = self.validation_fraction {
            if !(0.0..1.0).contains(&f) {
                return Err(Error::InvalidSpec(format!("validation_fraction must be in [0, 1), got {f}")));
            }
        }
        if let Some(h) = &self.hidden_sizes {
            if h.contains(&0) {
                return Err(Error::InvalidSpec("hidden layer sizes must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Class probabilities for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbPrediction {
    pub probs: Vec<f64>,
    pub class_ids: Arc<[usize]>,
}

impl ProbPrediction {
    /// Index (into `class_ids`) of the most probable class; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn label(&self) -> usize {
        self.class_ids[self.argmax()]
    }

    /// Position of a class id, if present.
    pub fn position(&self, class: usize) -> Option<usize> {
        self.class_ids.iter().position(|&c| c == class)
    }
}

/// A fitted probabilistic classifier.
pub trait Classifier: Send + Sync + fmt::Debug {
    /// Sorted class ids seen in training.
    fn class_ids(&self) -> &Arc<[usize]>;

    fn n_features(&self) -> usize;

    /// Class probabilities, parallel to `class_ids`, for an input of the right width.
    fn probabilities(&self, x: &[f64]) -> Vec<f64>;

    fn predict_proba(&self, x: &[f64]) -> Result<ProbPrediction> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(ProbPrediction {
            probs: self.probabilities(x),
            class_ids: self.class_ids().clone(),
        })
    }

    fn predict_label(&self, x: &[f64]) -> Result<usize> {
        Ok(self.predict_proba(x)?.label())
    }

    /// Predictions for every row of an N x d matrix, in row order.
    fn predict_proba_batch(&self, x: &DMatrix<f64>) -> Result<Vec<ProbPrediction>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                got: x.ncols(),
            });
        }
        let d = x.ncols();
        let rows = to_row_major(x);
        let ids = self.class_ids().clone();
        Ok((0..x.nrows())
            .into_par_iter()
            .map(|i| ProbPrediction {
                probs: self.probabilities(&rows[i * d..(i + 1) * d]),
                class_ids: ids.clone(),
            })
            .collect())
    }
}

/// Sorted distinct labels and each sample's index into them.
pub(crate) struct EncodedLabels {
    pub class_ids: Arc<[usize]>,
    pub targets: Vec<usize>,
}

pub(crate) fn encode_labels(x: &DMatrix<f64>, y: &[usize]) -> Result<EncodedLabels> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.ncols() == 0 || y.is_empty() {
        return Err(Error::Empty);
    }
    check_finite(x)?;
    let mut ids: Vec<usize> = y.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::DegenerateLabels { n_classes: ids.len() });
    }
    let targets = y.iter().map(|l| ids.binary_search(l).expect("label present")).collect();
    Ok(EncodedLabels {
        class_ids: ids.into(),
        targets,
    })
}

/// In-place softmax.
pub(crate) fn softmax(scores: &mut [f64]) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

/// Fits the classifier described by `spec` on an N x d feature matrix.
pub fn fit_classifier(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[usize]) -> Result<Box<dyn Classifier>> {
    spec.validate()?;
    Ok(match spec.kind {
        ClassifierKind::Knn => Box::new(Knn::fit(spec, x, y)?),
        ClassifierKind::GaussianNb => Box::new(GaussianNb::fit(spec, x, y)?),
        ClassifierKind::Logistic => Box::new(Logistic::fit(spec, x, y)?),
        ClassifierKind::RandomForest => Box::new(RandomForest::fit(spec, x, y)?),
        ClassifierKind::Mlp => Box::new(Mlp::fit(spec, x, y)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_tie_goes_to_lowest_index() {
        let ids: Arc<[usize]> = vec![4, 7, 9].into();
        let p = ProbPrediction { probs: vec![0.2, 0.5, 0.3], class_ids: ids.clone() };
        assert_eq!(p.argmax(), 1);
        assert_eq!(p.label(), 7);
        let p = ProbPrediction { probs: vec![0.5, 0.5, 0.0], class_ids: ids };
        assert_eq!(p.argmax(), 0);
    }

    #[test]
    fn degenerate_and_non_finite_inputs() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        for kind in ClassifierKind::ALL {
            let spec = ClassifierSpec::new(kind);
            assert!(matches!(
                fit_classifier(&spec, &x, &[1, 1, 1]),
                Err(Error::DegenerateLabels { n_classes: 1 })
            ));
            let bad = DMatrix::from_row_slice(3, 1, &[0.0, f64::NAN, 2.0]);
            assert!(matches!(fit_classifier(&spec, &bad, &[0, 1, 1]), Err(Error::NonFinite { row: 1, col: 0 })));
        }
    }

    #[test]
    fn spec_validation() {
        let mut s = ClassifierSpec::new(ClassifierKind::Knn);
        s.k = Some(0);
        assert!(s.validate().is_err());
        let mut s = ClassifierSpec::new(ClassifierKind::Mlp);
        s.validation_fraction = Some(1.0);
        assert!(s.validate().is_err());
        assert_eq!("random_forest".parse::<ClassifierKind>().unwrap(), ClassifierKind::RandomForest);
    }
}
