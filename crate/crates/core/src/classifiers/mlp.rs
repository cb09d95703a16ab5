//! Fully-connected feed-forward network: ReLU hidden layers, softmax output,
//! cross-entropy loss, trained by Adam on shuffled mini-batches with early
//! stopping on a held-out validation slice of the training data.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{encode_labels, softmax, Classifier, ClassifierSpec};
use crate::error::{Error, Result};
use crate::linalg::Standardizer;

pub const DEFAULT_HIDDEN: [usize; 2] = [64, 32];
pub const DEFAULT_LEARNING_RATE: f64 = 1e-3;
pub const DEFAULT_EPOCHS: usize = 200;
pub const DEFAULT_BATCH: usize = 128;
pub const DEFAULT_PATIENCE: usize = 10;
pub const DEFAULT_VALIDATION: f64 = 0.1;
/// Minimum validation-loss improvement that resets the patience counter.
pub const IMPROVEMENT_TOL: f64 = 1e-4;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Network parameters: `weights[l]` is `out x in`, `biases[l]` has length `out`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

struct Gradients {
    weights: Vec<DMatrix<f64>>,
    biases: Vec<DVector<f64>>,
}

impl MlpNetwork {
    /// He-normal weights, zero biases. `sizes` lists every layer width,
    /// input first and output last.
    pub fn new(sizes: &[usize], seed: u64) -> Self {
        assert!(sizes.len() >= 2, "need input and output layers");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("valid stdev");
            weights.push(DMatrix::from_fn(fan_out, fan_in, |_, _| normal.sample(&mut rng)));
            biases.push(DVector::zeros(fan_out));
        }
        Self { weights, biases }
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.biases.last().map_or(0, |b| b.len())
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    /// Flattened parameters: per layer, weights (column-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let mut at = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.len();
            w.as_mut_slice().copy_from_slice(&p[at..at + n]);
            at += n;
            let n = b.len();
            b.as_mut_slice().copy_from_slice(&p[at..at + n]);
            at += n;
        }
    }

    /// Pre-activations of every layer for a batch (rows = samples).
    fn forward(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut pre = Vec::with_capacity(self.weights.len());
        let mut act = x.clone();
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let mut z = &act * w.transpose();
            for mut row in z.row_iter_mut() {
                row += b.transpose();
            }
            if l < last {
                act = z.map(|v| v.max(0.0));
            }
            pre.push(z);
        }
        pre
    }

    /// Row-wise softmax of the output layer.
    pub fn predict(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.forward(x).pop().expect("at least one layer");
        softmax_rows(&mut out);
        out
    }

    fn penalty(&self, l2: f64) -> f64 {
        0.5 * l2 * self.weights.iter().map(|w| w.norm_squared()).sum::<f64>()
    }

    /// Mean cross-entropy plus `l2/2 * sum |W|^2`.
    pub fn loss(&self, x: &DMatrix<f64>, targets: &[usize], l2: f64) -> f64 {
        cross_entropy(&self.predict(x), targets) + self.penalty(l2)
    }

    fn gradients(&self, x: &DMatrix<f64>, targets: &[usize], l2: f64) -> (f64, Gradients) {
        let pre = self.forward(x);
        let n_layers = self.weights.len();
        let mut probs = pre[n_layers - 1].clone();
        softmax_rows(&mut probs);
        let loss = cross_entropy(&probs, targets) + self.penalty(l2);

        let batch = x.nrows() as f64;
        let mut delta = probs;
        for (i, &t) in targets.iter().enumerate() {
            delta[(i, t)] -= 1.0;
        }
        delta /= batch;

        let mut gw = vec![DMatrix::zeros(0, 0); n_layers];
        let mut gb = vec![DVector::zeros(0); n_layers];
        for l in (0..n_layers).rev() {
            let input = if l == 0 { x.clone() } else { pre[l - 1].map(|v| v.max(0.0)) };
            gw[l] = delta.transpose() * &input + &self.weights[l] * l2;
            gb[l] = DVector::from_iterator(delta.ncols(), delta.column_iter().map(|c| c.sum()));
            if l > 0 {
                let mut back = &delta * &self.weights[l];
                back.zip_apply(&pre[l - 1], |g, z| {
                    if z <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = back;
            }
        }
        (loss, Gradients { weights: gw, biases: gb })
    }

    /// Loss and its gradient flattened in [`MlpNetwork::params`] order.
    pub fn loss_and_gradient(&self, x: &DMatrix<f64>, targets: &[usize], l2: f64) -> (f64, Vec<f64>) {
        let (loss, g) = self.gradients(x, targets, l2);
        let mut flat = Vec::with_capacity(self.n_params());
        for (w, b) in g.weights.iter().zip(&g.biases) {
            flat.extend_from_slice(w.as_slice());
            flat.extend_from_slice(b.as_slice());
        }
        (loss, flat)
    }
}

fn softmax_rows(m: &mut DMatrix<f64>) {
    for mut row in m.row_iter_mut() {
        let mut r: Vec<f64> = row.iter().cloned().collect();
        softmax(&mut r);
        for (dst, v) in row.iter_mut().zip(r) {
            *dst = v;
        }
    }
}

fn cross_entropy(probs: &DMatrix<f64>, targets: &[usize]) -> f64 {
    let total: f64 = targets
        .iter()
        .enumerate()
        .map(|(i, &t)| -probs[(i, t)].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / targets.len() as f64
}

struct Adam {
    lr: f64,
    step: i32,
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
}

impl Adam {
    fn new(net: &MlpNetwork, lr: f64) -> Self {
        Self {
            lr,
            step: 0,
            m_w: net.weights.iter().map(|w| w.map(|_| 0.0)).collect(),
            v_w: net.weights.iter().map(|w| w.map(|_| 0.0)).collect(),
            m_b: net.biases.iter().map(|b| b.map(|_| 0.0)).collect(),
            v_b: net.biases.iter().map(|b| b.map(|_| 0.0)).collect(),
        }
    }

    fn update(&mut self, net: &mut MlpNetwork, g: &Gradients) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        let lr = self.lr;
        let apply = |p: &mut [f64], m: &mut [f64], v: &mut [f64], g: &[f64]| {
            for i in 0..p.len() {
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
            }
        };
        for l in 0..net.weights.len() {
            apply(
                net.weights[l].as_mut_slice(),
                self.m_w[l].as_mut_slice(),
                self.v_w[l].as_mut_slice(),
                g.weights[l].as_slice(),
            );
            apply(
                net.biases[l].as_mut_slice(),
                self.m_b[l].as_mut_slice(),
                self.v_b[l].as_mut_slice(),
                g.biases[l].as_slice(),
            );
        }
    }
}

fn gather_rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |i, j| x[(idx[i], j)])
}

#[derive(Debug, Clone)]
pub struct Mlp {
    class_ids: Arc<[usize]>,
    standardizer: Standardizer,
    net: MlpNetwork,
    loss_history: Vec<f64>,
    epochs_run: usize,
}

impl Mlp {
    pub fn fit(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[usize]) -> Result<Self> {
        let enc = encode_labels(x, y)?;
        let standardizer = Standardizer::fit(x);
        let mut xs = x.clone();
        standardizer.apply_matrix(&mut xs);

        let n = xs.nrows();
        let mut sizes = vec![xs.ncols()];
        sizes.extend(spec.hidden_sizes.clone().unwrap_or_else(|| DEFAULT_HIDDEN.to_vec()));
        sizes.push(enc.class_ids.len());

        let seed = spec.seed();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = MlpNetwork::new(&sizes, seed ^ 0x5eed);
        let mut adam = Adam::new(&net, spec.learning_rate.unwrap_or(DEFAULT_LEARNING_RATE));
        let l2 = spec.l2_lambda.unwrap_or(0.0);
        let epochs = spec.epochs.unwrap_or(DEFAULT_EPOCHS);
        let batch = spec.batch_size.unwrap_or(DEFAULT_BATCH).min(n);
        let patience = spec.patience.unwrap_or(DEFAULT_PATIENCE);

        let mut order: Vec<usize> = (0..n).collect();
        let n_val = (spec.validation_fraction.unwrap_or(DEFAULT_VALIDATION) * n as f64).round() as usize;
        let (mut train_idx, val_idx) = if n_val >= 1 && n_val < n {
            order.shuffle(&mut rng);
            let val = order[..n_val].to_vec();
            let mut train = order[n_val..].to_vec();
            train.sort_unstable();
            (train, val)
        } else {
            (order, Vec::new())
        };
        let x_train = gather_rows(&xs, &train_idx);
        let t_train: Vec<usize> = train_idx.iter().map(|&i| enc.targets[i]).collect();
        let x_val = gather_rows(&xs, &val_idx);
        let t_val: Vec<usize> = val_idx.iter().map(|&i| enc.targets[i]).collect();
        // positions into x_train from here on
        train_idx = (0..x_train.nrows()).collect();

        let mut history = Vec::with_capacity(epochs);
        let mut best: Option<(f64, MlpNetwork)> = None;
        let mut stale = 0;
        let mut epochs_run = 0;
        for _ in 0..epochs {
            epochs_run += 1;
            train_idx.shuffle(&mut rng);
            for chunk in train_idx.chunks(batch) {
                let xb = gather_rows(&x_train, chunk);
                let tb: Vec<usize> = chunk.iter().map(|&i| t_train[i]).collect();
                let (_, g) = net.gradients(&xb, &tb, l2);
                adam.update(&mut net, &g);
            }
            let loss = net.loss(&x_train, &t_train, l2);
            if !loss.is_finite() {
                return Err(Error::NoConvergence {
                    iterations: epochs_run,
                    last_change: loss,
                });
            }
            history.push(loss);
            if !val_idx.is_empty() {
                let val_loss = net.loss(&x_val, &t_val, l2);
                match &best {
                    Some((b, _)) if val_loss > b - IMPROVEMENT_TOL => stale += 1,
                    _ => {
                        best = Some((val_loss, net.clone()));
                        stale = 0;
                    }
                }
                if stale >= patience {
                    break;
                }
            }
        }
        if let Some((_, best_net)) = best {
            net = best_net;
        }
        Ok(Self {
            class_ids: enc.class_ids,
            standardizer,
            net,
            loss_history: history,
            epochs_run,
        })
    }

    /// Training-set loss at the end of every epoch.
    pub fn loss_history(&self) -> &[f64] {
        &self.loss_history
    }

    pub fn epochs_run(&self) -> usize {
        self.epochs_run
    }

    pub fn network(&self) -> &MlpNetwork {
        &self.net
    }
}

impl Classifier for Mlp {
    fn class_ids(&self) -> &Arc<[usize]> {
        &self.class_ids
    }

    fn n_features(&self) -> usize {
        self.net.input_dim()
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut xs = x.to_vec();
        self.standardizer.apply(&mut xs);
        let m = DMatrix::from_row_slice(1, xs.len(), &xs);
        self.net.predict(&m).row(0).iter().cloned().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::ClassifierKind;
    use rand::Rng;

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = DMatrix::from_fn(10, 2, |_, _| rng.random_range(-1.0..1.0));
        let t: Vec<usize> = (0..10).map(|i| i % 3).collect();
        let mut net = MlpNetwork::new(&[2, 4, 3], 4);
        let (_, grad) = net.loss_and_gradient(&x, &t, 1e-3);
        let p0 = net.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] += h;
            net.set_params(&p);
            let up = net.loss(&x, &t, 1e-3);
            p[i] -= 2.0 * h;
            net.set_params(&p);
            let down = net.loss(&x, &t, 1e-3);
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-8);
            assert!(rel < 1e-4, "param {i}: analytic {} vs numeric {fd}", grad[i]);
        }
        net.set_params(&p0);
    }

    #[test]
    fn params_round_trip() {
        let mut net = MlpNetwork::new(&[3, 5, 2], 1);
        let p: Vec<f64> = (0..net.n_params()).map(|i| i as f64).collect();
        net.set_params(&p);
        assert_eq!(net.params(), p);
        assert_eq!(net.n_params(), 3 * 5 + 5 + 5 * 2 + 2);
    }

    #[test]
    fn full_batch_loss_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = DMatrix::from_fn(60, 2, |i, _| (i % 3) as f64 + rng.random_range(-0.6..0.6));
        let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let mut spec = ClassifierSpec::new(ClassifierKind::Mlp);
        spec.batch_size = Some(60);
        spec.validation_fraction = Some(0.0);
        spec.epochs = Some(150);
        spec.hidden_sizes = Some(vec![8]);
        let m = Mlp::fit(&spec, &x, &y).unwrap();
        assert_eq!(m.loss_history().len(), 150);
        for w in m.loss_history().windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{} -> {}", w[0], w[1]);
        }
    }
}
