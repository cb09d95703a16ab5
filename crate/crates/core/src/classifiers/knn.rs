//! k-nearest neighbors: class frequencies among the k nearest training
//! points (Euclidean), unweighted.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{encode_labels, Classifier, ClassifierSpec};
use crate::error::Result;
use crate::linalg::{k_nearest, to_row_major};

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone)]
pub struct Knn {
    class_ids: Arc<[usize]>,
    points: Vec<f64>,
    targets: Vec<usize>,
    dim: usize,
    k: usize,
}

impl Knn {
    pub fn fit(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[usize]) -> Result<Self> {
        let enc = encode_labels(x, y)?;
        Ok(Self {
            class_ids: enc.class_ids,
            points: to_row_major(x),
            targets: enc.targets,
            dim: x.ncols(),
            k: spec.k.unwrap_or(DEFAULT_K).min(y.len()),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

impl Classifier for Knn {
    fn class_ids(&self) -> &Arc<[usize]> {
        &self.class_ids
    }

    fn n_features(&self) -> usize {
        self.dim
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut probs = vec![0.0; self.class_ids.len()];
        let nn = k_nearest(&self.points, self.dim, x, self.k, None);
        let w = 1.0 / nn.len() as f64;
        for (_, i) in nn {
            probs[self.targets[i]] += w;
        }
        probs
    }
}
