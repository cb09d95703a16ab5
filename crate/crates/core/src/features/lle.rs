//! Locally linear embedding.
//!
//! Fitting solves, for every training point, the sum-to-one reconstruction
//! weights over its nearest neighbors, then takes the bottom non-constant
//! eigenvectors of `M = (I - W)^T (I - W)`. Held-out points are mapped by
//! the same barycentric weights over their training neighbors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{check_finite, k_nearest, to_row_major, Standardizer};

pub const DEFAULT_NEIGHBORS: usize = 128;
pub const DEFAULT_REG: f64 = 1e-3;

/// Below this size the dense symmetric eigensolver is used directly.
const DENSE_EIGEN_LIMIT: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LleParams {
    pub n_neighbors: usize,
    pub embed_dim: usize,
    pub reg: f64,
}

impl Default for LleParams {
    fn default() -> Self {
        Self {
            n_neighbors: DEFAULT_NEIGHBORS,
            embed_dim: 9,
            reg: DEFAULT_REG,
        }
    }
}

/// Reconstruction weights of one point over its neighbors.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborWeights {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LleModel {
    pub train_points: DMatrix<f64>,
    pub train_embedding: DMatrix<f64>,
    pub n_neighbors: usize,
    pub embed_dim: usize,
    pub reg: f64,
    points_row_major: Vec<f64>,
}

/// Sum-to-one weights minimizing `|q - sum_j w_j x_j|^2`, with the local Gram
/// matrix regularized by `reg * trace`.
pub fn barycentric_weights(points: &[f64], d: usize, query: &[f64], neighbors: &[usize], reg: f64) -> Vec<f64> {
    let k = neighbors.len();
    let mut gram = DMatrix::zeros(k, k);
    let diffs: Vec<Vec<f64>> = neighbors
        .iter()
        .map(|&j| points[j * d..(j + 1) * d].iter().zip(query).map(|(p, q)| p - q).collect())
        .collect();
    for a in 0..k {
        for b in a..k {
            let v: f64 = diffs[a].iter().zip(&diffs[b]).map(|(x, y)| x * y).sum();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    let trace = gram.trace();
    let ridge = if trace > 0.0 { reg * trace } else { reg };
    for a in 0..k {
        gram[(a, a)] += ridge;
    }
    let ones = DVector::from_element(k, 1.0);
    let w = match gram.clone().cholesky() {
        Some(ch) => ch.solve(&ones),
        None => gram.lu().solve(&ones).unwrap_or_else(|| ones.clone()),
    };
    let sum = w.sum();
    w.iter().map(|v| v / sum).collect()
}

/// Reconstruction weights of every row of `x` over its `n_neighbors`
/// nearest other rows.
pub fn lle_weights(x: &DMatrix<f64>, n_neighbors: usize, reg: f64) -> Result<Vec<NeighborWeights>> {
    let n = x.nrows();
    if n_neighbors >= n {
        return Err(Error::NeighborhoodTooLarge {
            n_neighbors,
            n_samples: n,
        });
    }
    if n_neighbors == 0 {
        return Err(Error::InvalidSpec("lle_neighbors must be >= 1".into()));
    }
    check_finite(x)?;
    let d = x.ncols();
    let pts = to_row_major(x);
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let query = &pts[i * d..(i + 1) * d];
            let indices: Vec<usize> = k_nearest(&pts, d, query, n_neighbors, Some(i))
                .into_iter()
                .map(|(_, j)| j)
                .collect();
            let weights = barycentric_weights(&pts, d, query, &indices, reg);
            NeighborWeights { indices, weights }
        })
        .collect())
}

/// Dense `(I - W)^T (I - W)`.
fn embedding_cost_matrix(weights: &[NeighborWeights]) -> DMatrix<f64> {
    let n = weights.len();
    let mut m = DMatrix::identity(n, n);
    for (i, nw) in weights.iter().enumerate() {
        for (&a, &wa) in nw.indices.iter().zip(&nw.weights) {
            m[(i, a)] -= wa;
            m[(a, i)] -= wa;
            for (&b, &wb) in nw.indices.iter().zip(&nw.weights) {
                m[(a, b)] += wa * wb;
            }
        }
    }
    m
}

/// The `count` smallest eigenpairs of a symmetric positive semidefinite
/// matrix, eigenvalues ascending, eigenvectors as columns.
pub fn bottom_eigenpairs(m: &DMatrix<f64>, count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if count > n {
        return Err(Error::InvalidSpec(format!("requested {count} eigenpairs of a {n}x{n} matrix")));
    }
    if n <= DENSE_EIGEN_LIMIT {
        dense_bottom(m, count)
    } else {
        shift_invert_bottom(m, count)
    }
}

pub(crate) fn dense_bottom(m: &DMatrix<f64>, count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::try_new(m.clone(), 1e-14, 0)
        .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order[..count].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(m.nrows(), count);
    for (dst, &src) in order[..count].iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_signs(&mut vectors);
    Ok((values, vectors))
}

/// Subspace iteration on `(M + sigma I)^{-1}` with Rayleigh-Ritz projection.
pub(crate) fn shift_invert_bottom(m: &DMatrix<f64>, count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    const MAX_ITER: usize = 1000;
    const RESIDUAL_TOL: f64 = 1e-10;

    let n = m.nrows();
    let block = (2 * count).max(count + 8).min(n);
    let scale = (0..n).map(|i| m[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

    let mut sigma = 1e-10 * scale;
    let chol = loop {
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[(i, i)] += sigma;
        }
        match shifted.cholesky() {
            Some(ch) => break ch,
            None if sigma < 1e-4 * scale => sigma *= 100.0,
            None => return Err(Error::EigenFailure("shifted matrix is not positive definite".into())),
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(0x11e);
    let mut q = DMatrix::from_fn(n, block, |_, _| StandardNormal.sample(&mut rng)).qr().q();
    let mut worst = f64::INFINITY;
    for _ in 0..MAX_ITER {
        q = chol.solve(&q).qr().q();
        let mq = m * &q;
        let h = q.transpose() * &mq;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::try_new(h, 1e-15, 0)
            .ok_or_else(|| Error::EigenFailure("Ritz eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
        let mut rot = DMatrix::zeros(block, block);
        for (dst, &src) in order.iter().enumerate() {
            rot.set_column(dst, &eig.eigenvectors.column(src));
        }
        q = &q * &rot;
        let mq = mq * &rot;
        let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        worst = (0..count)
            .map(|j| (mq.column(j) - q.column(j) * values[j]).norm())
            .fold(0.0, f64::max);
        if worst <= RESIDUAL_TOL * scale {
            let mut vectors = q.columns(0, count).into_owned();
            fix_signs(&mut vectors);
            return Ok((values[..count].to_vec(), vectors));
        }
    }
    Err(Error::EigenFailure(format!(
        "subspace iteration stalled with residual {worst:e} after {MAX_ITER} iterations"
    )))
}

fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let pivot = col.iter().cloned().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
}

pub fn fit_lle(x: &DMatrix<f64>, params: &LleParams) -> Result<LleModel> {
    let n = x.nrows();
    if params.n_neighbors >= n {
        return Err(Error::NeighborhoodTooLarge {
            n_neighbors: params.n_neighbors,
            n_samples: n,
        });
    }
    if params.embed_dim == 0 || params.embed_dim > params.n_neighbors {
        return Err(Error::InvalidSpec(format!(
            "need n_neighbors >= embed_dim >= 1, got {} and {}",
            params.n_neighbors, params.embed_dim
        )));
    }
    let weights = lle_weights(x, params.n_neighbors, params.reg)?;
    let m = embedding_cost_matrix(&weights);
    let (_, vectors) = bottom_eigenpairs(&m, params.embed_dim + 1)?;
    // the smallest eigenvector is the constant one
    let mut embedding = vectors.columns(1, params.embed_dim).into_owned();
    Standardizer::fit(&embedding).apply_matrix(&mut embedding);

    Ok(LleModel {
        points_row_major: to_row_major(x),
        train_points: x.clone(),
        train_embedding: embedding,
        n_neighbors: params.n_neighbors,
        embed_dim: params.embed_dim,
        reg: params.reg,
    })
}

impl LleModel {
    pub fn input_dim(&self) -> usize {
        self.train_points.ncols()
    }

    /// Embeds each row of `x` with [`apply_lle`].
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let rows = to_row_major(x);
        let d = self.input_dim();
        let out: Vec<Vec<f64>> = (0..x.nrows())
            .into_par_iter()
            .map(|i| self.embed(&rows[i * d..(i + 1) * d]))
            .collect();
        Ok(DMatrix::from_fn(x.nrows(), self.embed_dim, |i, j| out[i][j]))
    }

    fn embed(&self, x: &[f64]) -> Vec<f64> {
        let d = self.input_dim();
        let nn = k_nearest(&self.points_row_major, d, x, self.n_neighbors, None);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let (d0, i0) = nn[0];
        if d0.sqrt() <= 1e-12 * (1.0 + norm) {
            return self.train_embedding.row(i0).iter().cloned().collect();
        }
        let indices: Vec<usize> = nn.iter().map(|p| p.1).collect();
        let w = barycentric_weights(&self.points_row_major, d, x, &indices, self.reg);
        let mut out = vec![0.0; self.embed_dim];
        for (&j, wj) in indices.iter().zip(&w) {
            for (o, e) in out.iter_mut().zip(self.train_embedding.row(j).iter()) {
                *o += wj * e;
            }
        }
        out
    }
}

/// Out-of-sample embedding by barycentric extension over training neighbors.
pub fn apply_lle(model: &LleModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: x.len(),
        });
    }
    Ok(model.embed(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::column_means;
    use rand::Rng;

    fn cloud(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random_range(0.0..1.0))
    }

    #[test]
    fn weights_sum_to_one() {
        let x = cloud(200, 3, 1);
        for nw in lle_weights(&x, 10, 1e-3).unwrap() {
            assert_eq!(nw.indices.len(), 10);
            assert!((nw.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
        // more neighbors than dimensions needs the ridge
        for nw in lle_weights(&x, 30, 1e-3).unwrap() {
            assert!((nw.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn shift_invert_matches_dense() {
        let x = cloud(500, 3, 2);
        let w = lle_weights(&x, 12, 1e-3).unwrap();
        let m = embedding_cost_matrix(&w);
        let (dv, dvec) = dense_bottom(&m, 4).unwrap();
        let (sv, svec) = shift_invert_bottom(&m, 4).unwrap();
        for j in 0..4 {
            assert!((dv[j] - sv[j]).abs() < 1e-9, "{} vs {}", dv[j], sv[j]);
            let overlap = dvec.column(j).dot(&svec.column(j)).abs();
            assert!(overlap > 1.0 - 1e-6, "eigvec {j} overlap {overlap}");
        }
    }

    #[test]
    fn embedding_is_standardized_and_self_mapping() {
        let x = cloud(300, 4, 3);
        let model = fit_lle(&x, &LleParams { n_neighbors: 15, embed_dim: 2, reg: 1e-3 }).unwrap();
        assert!(column_means(&model.train_embedding).abs().max() < 1e-6);
        for i in [0, 57, 299] {
            let row: Vec<f64> = x.row(i).iter().cloned().collect();
            let y = apply_lle(&model, &row).unwrap();
            for (j, v) in y.iter().enumerate() {
                assert!((v - model.train_embedding[(i, j)]).abs() < 1e-6);
            }
            assert_eq!(y, apply_lle(&model, &row).unwrap());
        }
        assert!(apply_lle(&model, &[0.0; 3]).is_err());
    }

    #[test]
    fn rejects_oversized_neighborhood() {
        let x = cloud(20, 2, 4);
        assert!(matches!(
            fit_lle(&x, &LleParams { n_neighbors: 20, embed_dim: 1, reg: 1e-3 }),
            Err(Error::NeighborhoodTooLarge { .. })
        ));
        assert_eq!(LleParams::default().n_neighbors, 128);
    }
}
