//! Multinomial logistic regression with an L2 penalty, trained full-batch by
//! gradient descent with a backtracking (Armijo) line search.
//!
//! Inputs are standardized internally before fitting; the penalty applies to
//! the weights in that standardized space and never to the intercepts.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{encode_labels, softmax, Classifier, ClassifierSpec};
use crate::error::{Error, Result};
use crate::linalg::Standardizer;

pub const DEFAULT_L2: f64 = 1e-4;
pub const DEFAULT_MAX_ITER: usize = 1000;
pub const GRAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct Logistic {
    class_ids: Arc<[usize]>,
    standardizer: Option<Standardizer>,
    /// G x d
    weights: DMatrix<f64>,
    bias: DVector<f64>,
    loss_history: Vec<f64>,
}

struct Objective<'a> {
    x: &'a DMatrix<f64>,
    onehot: DMatrix<f64>,
    targets: &'a [usize],
    l2: f64,
}

impl Objective<'_> {
    fn loss(&self, w: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
        let probs = self.probs(w, b);
        let n = self.x.nrows() as f64;
        let nll: f64 = self
            .targets
            .iter()
            .enumerate()
            .map(|(i, &t)| -probs[(i, t)].max(f64::MIN_POSITIVE).ln())
            .sum();
        nll / n + 0.5 * self.l2 * w.norm_squared()
    }

    fn probs(&self, w: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        let mut scores = self.x * w.transpose();
        for mut row in scores.row_iter_mut() {
            let mut r: Vec<f64> = row.iter().zip(b.iter()).map(|(s, bi)| s + bi).collect();
            softmax(&mut r);
            for (dst, v) in row.iter_mut().zip(r) {
                *dst = v;
            }
        }
        scores
    }

    fn gradient(&self, w: &DMatrix<f64>, b: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.x.nrows() as f64;
        let residual = (self.probs(w, b) - &self.onehot) / n;
        let gw = residual.transpose() * self.x + w * self.l2;
        let gb = DVector::from_iterator(residual.ncols(), residual.column_iter().map(|c| c.sum()));
        (gw, gb)
    }
}

impl Logistic {
    pub fn fit(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[usize]) -> Result<Self> {
        let enc = encode_labels(x, y)?;
        let standardizer = Standardizer::fit(x);
        let mut xs = x.clone();
        standardizer.apply_matrix(&mut xs);

        let (n, d) = xs.shape();
        let g = enc.class_ids.len();
        let mut onehot = DMatrix::zeros(n, g);
        for (i, &t) in enc.targets.iter().enumerate() {
            onehot[(i, t)] = 1.0;
        }
        let obj = Objective {
            x: &xs,
            onehot,
            targets: &enc.targets,
            l2: spec.l2_lambda.unwrap_or(DEFAULT_L2),
        };

        let mut w = DMatrix::zeros(g, d);
        let mut b = DVector::zeros(g);
        let mut loss = obj.loss(&w, &b);
        let mut history = vec![loss];
        let mut step: f64 = 1.0;
        for _ in 0..spec.max_iter.unwrap_or(DEFAULT_MAX_ITER) {
            let (gw, gb) = obj.gradient(&w, &b);
            let gnorm2 = gw.norm_squared() + gb.norm_squared();
            if gnorm2.sqrt() < GRAD_TOL {
                break;
            }
            step = (step * 2.0).min(1e6);
            let accepted = loop {
                let w_try = &w - &gw * step;
                let b_try = &b - &gb * step;
                let l_try = obj.loss(&w_try, &b_try);
                if l_try <= loss - 1e-4 * step * gnorm2 {
                    break Some((w_try, b_try, l_try));
                }
                step *= 0.5;
                if step < 1e-16 {
                    break None;
                }
            };
            match accepted {
                Some((w_new, b_new, l_new)) => {
                    w = w_new;
                    b = b_new;
                    loss = l_new;
                    history.push(loss);
                }
                None => break,
            }
        }
        if !loss.is_finite() {
            return Err(Error::NoConvergence {
                iterations: history.len(),
                last_change: loss,
            });
        }
        Ok(Self {
            class_ids: enc.class_ids,
            standardizer: Some(standardizer),
            weights: w,
            bias: b,
            loss_history: history,
        })
    }

    /// A model with explicit parameters acting on raw features.
    pub fn from_parameters(class_ids: Vec<usize>, weights: DMatrix<f64>, bias: DVector<f64>) -> Result<Self> {
        if weights.nrows() != class_ids.len() || bias.len() != class_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: class_ids.len(),
                got: weights.nrows(),
            });
        }
        Ok(Self {
            class_ids: class_ids.into(),
            standardizer: None,
            weights,
            bias,
            loss_history: Vec::new(),
        })
    }

    /// Penalized training loss after each accepted step (first entry: initial loss).
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }
}

impl Classifier for Logistic {
    fn class_ids(&self) -> &Arc<[usize]> {
        &self.class_ids
    }

    fn n_features(&self) -> usize {
        self.weights.ncols()
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = x.to_vec();
        if let Some(s) = &self.standardizer {
            s.apply(&mut xs);
        }
        let mut scores: Vec<f64> = self
            .weights
            .row_iter()
            .zip(self.bias.iter())
            .map(|(row, b)| row.iter().zip(&xs).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect();
        softmax(&mut scores);
        scores
    }
}
