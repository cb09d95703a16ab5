//! FastICA with the log-cosh contrast and symmetric (parallel) fixed-point
//! updates, followed by per-component standardization on the training set.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::pca::{fit_pca, RankPolicy, WHITEN_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::{project_rows, symmetric_decorrelation, Standardizer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcaParams {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for IcaParams {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaModel {
    pub mean: DVector<f64>,
    /// r x d, maps centered input to white coordinates (r = numerical rank).
    pub whitening: DMatrix<f64>,
    /// r x r orthogonal unmixing matrix acting on white coordinates.
    pub unmixing: DMatrix<f64>,
    pub post_standardizer: Standardizer,
    pub iterations: usize,
}

impl IcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn n_components(&self) -> usize {
        self.unmixing.nrows()
    }

    fn raw_sources(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut centered = x.clone();
        for (mut col, m) in centered.column_iter_mut().zip(self.mean.iter()) {
            col.add_scalar_mut(-m);
        }
        project_rows(&centered, &(&self.unmixing * &self.whitening))
    }

    /// Standardized independent components of each row.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let mut s = self.raw_sources(x);
        self.post_standardizer.apply_matrix(&mut s);
        Ok(s)
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m = DMatrix::from_row_slice(1, x.len(), x);
        Ok(self.transform(&m)?.row(0).iter().cloned().collect())
    }
}

pub fn fit_ica(x: &DMatrix<f64>, params: &IcaParams) -> Result<IcaModel> {
    let pca = fit_pca(x, true, RankPolicy::ZeroBelow(WHITEN_FLOOR))?;
    let retained: Vec<usize> = (0..pca.dim()).filter(|&i| pca.scale[i] != 0.0).collect();
    let r = retained.len();
    let d = pca.dim();
    let mut whitening = DMatrix::zeros(r, d);
    for (dst, &src) in retained.iter().enumerate() {
        whitening.set_row(dst, &(pca.components.row(src) * pca.scale[src]));
    }

    let n = x.nrows();
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(pca.mean.iter()) {
        col.add_scalar_mut(-m);
    }
    // r x N white data
    let z = &whitening * centered.transpose();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = DMatrix::from_fn(r, r, |_, _| StandardNormal.sample(&mut rng));
    let mut w = symmetric_decorrelation(&init)?;

    let mut iterations = 0;
    let mut last_change = f64::INFINITY;
    let mut converged = false;
    while iterations < params.max_iter {
        iterations += 1;
        let wz = &w * &z;
        let g = wz.map(f64::tanh);
        let g_prime_mean = DVector::from_iterator(
            r,
            g.row_iter().map(|row| row.iter().map(|t| 1.0 - t * t).sum::<f64>() / n as f64),
        );
        let mut w_new = (&g * z.transpose()) / n as f64;
        for i in 0..r {
            let shift = w.row(i) * g_prime_mean[i];
            let updated = w_new.row(i) - shift;
            w_new.set_row(i, &updated);
        }
        let w_new = symmetric_decorrelation(&w_new)?;
        last_change = (0..r)
            .map(|i| ((w_new.row(i).dot(&w.row(i))).abs() - 1.0).abs())
            .fold(0.0, f64::max);
        w = w_new;
        if last_change < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations,
            last_change,
        });
    }

    let mut model = IcaModel {
        mean: pca.mean,
        whitening,
        unmixing: w,
        post_standardizer: Standardizer {
            mean: vec![0.0; r],
            stdev: vec![1.0; r],
        },
        iterations,
    };
    let raw = model.raw_sources(x);
    model.post_standardizer = Standardizer::fit(&raw);
    Ok(model)
}
