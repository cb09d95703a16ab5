//! Principal component analysis with optional whitening.
//!
//! Components come from the SVD of the centered training matrix. When
//! whitening, each projected coordinate is multiplied by `sqrt(N) / s_i`,
//! which gives unit (1/N) variance on the training set.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::linalg::{check_finite, column_means, project_rows};

/// Relative singular-value threshold below which plain whitening refuses to divide.
pub const RANK_TOL: f64 = 1e-12;

/// Relative floor used by pipelines: components below it are zeroed instead.
pub const WHITEN_FLOOR: f64 = 1e-8;

/// What to do with a (numerically) vanishing singular value when whitening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankPolicy {
    /// Fail with [`Error::RankDeficient`] below `RANK_TOL * s_max`.
    Reject,
    /// Zero the output of any component below `floor * s_max`.
    ZeroBelow(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// d x d, rows are principal directions ordered by decreasing singular value.
    pub components: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub n_samples: usize,
    /// Per-component output multiplier (1 when not whitening, 0 for floored components).
    pub scale: DVector<f64>,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Components that survive the rank floor.
    pub fn n_retained(&self) -> usize {
        self.scale.iter().filter(|s| **s != 0.0).count()
    }
}

/// Fits PCA keeping all `d` components.
pub fn fit_pca(x: &DMatrix<f64>, whiten: bool, policy: RankPolicy) -> Result<PcaModel> {
    let (n, d) = x.shape();
    if d == 0 {
        return Err(Error::Empty);
    }
    if n <= d {
        return Err(Error::TooFewSamples { n_samples: n, needed: d });
    }
    check_finite(x)?;

    let mean = column_means(x);
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(mean.iter()) {
        col.add_scalar_mut(-m);
    }
    let svd = SVD::try_new(centered, false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::EigenFailure("SVD did not converge".into()))?;
    let v_t = svd.v_t.expect("requested V^T");

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let mut components = DMatrix::zeros(d, d);
    let mut singular_values = DVector::zeros(d);
    for (dst, &src) in order.iter().enumerate() {
        singular_values[dst] = svd.singular_values[src].max(0.0);
        let mut row = v_t.row(src).clone_owned();
        // fix the sign: largest-magnitude loading positive
        let pivot = row.iter().cloned().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            row.neg_mut();
        }
        components.set_row(dst, &row);
    }

    let s_max = singular_values[0];
    let mut scale = DVector::from_element(d, 1.0);
    if whiten {
        let sqrt_n = (n as f64).sqrt();
        for i in 0..d {
            let s = singular_values[i];
            match policy {
                RankPolicy::Reject => {
                    let threshold = RANK_TOL * s_max;
                    if s <= threshold {
                        return Err(Error::RankDeficient { value: s, threshold });
                    }
                    scale[i] = sqrt_n / s;
                }
                RankPolicy::ZeroBelow(floor) => {
                    scale[i] = if s > floor * s_max { sqrt_n / s } else { 0.0 };
                }
            }
        }
    }

    Ok(PcaModel {
        mean,
        components,
        singular_values,
        n_samples: n,
        scale,
    })
}

/// Whitened PCA that rejects rank-deficient input.
pub fn fit_pca_whiten(x: &DMatrix<f64>) -> Result<PcaModel> {
    fit_pca(x, true, RankPolicy::Reject)
}

/// Projects one sample: `scale .* (components * (x - mean))`.
pub fn apply_pca(model: &PcaModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let m = DMatrix::from_row_slice(1, x.len(), x);
    Ok(transform_pca(model, &m)?.row(0).iter().cloned().collect())
}

/// Projects every row of an N x d matrix.
pub fn transform_pca(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.ncols() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: x.ncols(),
        });
    }
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(model.mean.iter()) {
        col.add_scalar_mut(-m);
    }
    let mut y = project_rows(&centered, &model.components);
    for (mut col, s) in y.column_iter_mut().zip(model.scale.iter()) {
        col.scale_mut(*s);
    }
    Ok(y)
}
