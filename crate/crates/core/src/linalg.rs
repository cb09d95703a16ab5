//! Small dense helpers shared by the feature maps and classifiers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Column means of an N x d matrix.
pub fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows() as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// Population (1/N) covariance of the columns.
pub fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = column_means(x);
    let mut centered = x.clone();
    for (mut col, m) in centered.column_iter_mut().zip(mean.iter()) {
        col.add_scalar_mut(-m);
    }
    (centered.transpose() * &centered) / x.nrows() as f64
}

/// Returns the first non-finite entry, if any.
pub fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    for row in 0..x.nrows() {
        for col in 0..x.ncols() {
            if !x[(row, col)].is_finite() {
                return Err(Error::NonFinite { row, col });
            }
        }
    }
    Ok(())
}

/// `(A A^T)^{-1/2} A` for a square matrix of full rank.
pub fn symmetric_decorrelation(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = a * a.transpose();
    let eig = SymmetricEigen::try_new(gram, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenFailure("decorrelation did not converge".into()))?;
    let mut inv_sqrt = DVector::zeros(eig.eigenvalues.len());
    for (dst, &l) in inv_sqrt.iter_mut().zip(eig.eigenvalues.iter()) {
        if l <= 0.0 {
            return Err(Error::EigenFailure("singular unmixing matrix".into()));
        }
        *dst = 1.0 / l.sqrt();
    }
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&inv_sqrt) * v.transpose() * a)
}

/// `x * a^T` with every entry summed in a fixed order, so each output row
/// depends only on its input row and not on how many rows are processed.
pub fn project_rows(x: &DMatrix<f64>, a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(x.ncols(), a.ncols());
    DMatrix::from_fn(x.nrows(), a.nrows(), |i, j| {
        let mut s = 0.0;
        for k in 0..x.ncols() {
            s += x[(i, k)] * a[(j, k)];
        }
        s
    })
}

/// Row-major copy of a matrix; row `i` is `out[i*d..(i+1)*d]`.
pub fn to_row_major(x: &DMatrix<f64>) -> Vec<f64> {
    let (n, d) = x.shape();
    let mut out = Vec::with_capacity(n * d);
    for i in 0..n {
        for j in 0..d {
            out.push(x[(i, j)]);
        }
    }
    out
}

#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of the `k` nearest rows of `points` (row-major, width `d`) to
/// `query`, nearest first. Ties are broken by lower index. `skip` excludes
/// one row (the query itself during fitting).
pub fn k_nearest(points: &[f64], d: usize, query: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let n = points.len() / d;
    let mut dist: Vec<(f64, usize)> = (0..n)
        .filter(|&i| Some(i) != skip)
        .map(|i| (squared_distance(&points[i * d..(i + 1) * d], query), i))
        .collect();
    let k = k.min(dist.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_unstable_by(cmp);
    dist
}

/// Per-column `(mean, stdev)` with 1/N normalization. A zero stdev is
/// reported as 1 so applying it leaves the column centered.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub stdev: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut stdev = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let m = col.sum() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean.push(m);
            stdev.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { mean, stdev }
    }

    pub fn apply(&self, x: &mut [f64]) {
        for ((v, m), s) in x.iter_mut().zip(&self.mean).zip(&self.stdev) {
            *v = (*v - m) / s;
        }
    }

    pub fn apply_matrix(&self, x: &mut DMatrix<f64>) {
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.stdev[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
    }
}
