//! Gaussian naive Bayes with per-class diagonal variances and empirical priors.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::{encode_labels, softmax, Classifier, ClassifierSpec};
use crate::error::Result;

pub const DEFAULT_VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct GaussianNb {
    class_ids: Arc<[usize]>,
    means: Vec<Vec<f64>>,
    vars: Vec<Vec<f64>>,
    log_priors: Vec<f64>,
}

impl GaussianNb {
    pub fn fit(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[usize]) -> Result<Self> {
        let enc = encode_labels(x, y)?;
        let (n, d) = x.shape();
        let g = enc.class_ids.len();

        // epsilon = smoothing * largest per-feature variance over all samples
        let mut max_var = 0.0_f64;
        for col in x.column_iter() {
            let m = col.sum() / n as f64;
            let v = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
            max_var = max_var.max(v);
        }
        let epsilon = spec.nb_var_smoothing.unwrap_or(DEFAULT_VAR_SMOOTHING) * max_var;

        let mut counts = vec![0usize; g];
        let mut means = vec![vec![0.0; d]; g];
        for (i, &t) in enc.targets.iter().enumerate() {
            counts[t] += 1;
            for j in 0..d {
                means[t][j] += x[(i, j)];
            }
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }
        let mut vars = vec![vec![0.0; d]; g];
        for (i, &t) in enc.targets.iter().enumerate() {
            for j in 0..d {
                let diff = x[(i, j)] - means[t][j];
                vars[t][j] += diff * diff;
            }
        }
        for (v, &c) in vars.iter_mut().zip(&counts) {
            v.iter_mut().for_each(|s| *s = *s / c as f64 + epsilon);
        }
        // a single-sample class with a constant feature would otherwise have zero variance
        for v in vars.iter_mut().flatten() {
            if *v <= 0.0 {
                *v = f64::MIN_POSITIVE.sqrt();
            }
        }
        let log_priors = counts.iter().map(|&c| (c as f64 / n as f64).ln()).collect();
        Ok(Self {
            class_ids: enc.class_ids,
            means,
            vars,
            log_priors,
        })
    }
}

impl Classifier for GaussianNb {
    fn class_ids(&self) -> &Arc<[usize]> {
        &self.class_ids
    }

    fn n_features(&self) -> usize {
        self.means[0].len()
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut scores: Vec<f64> = (0..self.class_ids.len())
            .map(|c| {
                let ll: f64 = x
                    .iter()
                    .zip(&self.means[c])
                    .zip(&self.vars[c])
                    .map(|((xi, m), v)| -0.5 * ((2.0 * PI * v).ln() + (xi - m) * (xi - m) / v))
                    .sum();
                ll + self.log_priors[c]
            })
            .collect();
        softmax(&mut scores);
        scores
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierKind;

    #[test]
    fn midpoint_of_symmetric_classes_is_even() {
        let x = DMatrix::from_row_slice(4, 1, &[-2.0, 0.0, 4.0, 6.0]);
        let m = GaussianNb::fit(&ClassifierSpec::new(ClassifierKind::GaussianNb), &x, &[0, 0, 1, 1]).unwrap();
        let p = m.predict_proba(&[2.0]).unwrap();
        assert!((p.probs[0] - 0.5).abs() < 1e-12);
        assert!((p.probs[1] - 0.5).abs() < 1e-12);
        assert!(m.predict_proba(&[-1.0]).unwrap().probs[0] > 0.99);
    }
}
