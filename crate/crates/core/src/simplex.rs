//! Aitchison-simplex primitives: closure, centered / isometric / pairwise
//! log-ratio transforms, the Helmert sub-matrix basis and the Aitchison
//! distance.
//!
//! All functions are pure. Compositions are validated on construction so the
//! transforms never see a zero or negative part.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the unit-sum constraint.
pub const CLOSURE_TOL: f64 = 1e-9;

/// Default Laplace smoothing constant for pairwise log-ratios.
pub const DEFAULT_PWLR_ALPHA: f64 = 1e-7;

/// Canonical analyte order of an assay row.
pub const ANALYTES: [&str; 10] = [
    "Fe", "SiO2", "Al2O3", "P", "LOI", "TiO2", "MgO", "Mn", "CaO", "S",
];

/// A point on the unit simplex: strictly positive parts summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Composition {
    parts: Vec<f64>,
}

impl Composition {
    /// Validates an already-closed vector.
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        check_positive(&parts)?;
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > CLOSURE_TOL {
            return Err(Error::NotClosed { sum });
        }
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    /// Number of parts K.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn into_parts(self) -> Vec<f64> {
        self.parts
    }
}

impl AsRef<[f64]> for Composition {
    fn as_ref(&self) -> &[f64] {
        &self.parts
    }
}

fn check_positive(v: &[f64]) -> Result<()> {
    if v.len() < 2 {
        return Err(Error::TooShort { len: v.len() });
    }
    for (index, &value) in v.iter().enumerate() {
        // NaN fails this comparison as well
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::NonPositivePart { index, value });
        }
    }
    Ok(())
}

/// Rescales a positive vector so its parts sum to one.
pub fn closure(v: &[f64]) -> Result<Composition> {
    check_positive(v)?;
    let sum: f64 = v.iter().sum();
    Ok(Composition {
        parts: v.iter().map(|x| x / sum).collect(),
    })
}

/// Centered log-ratio: `ln c_k - mean_j ln c_j`.
pub fn clr(c: &Composition) -> Vec<f64> {
    let logs: Vec<f64> = c.parts.iter().map(|x| x.ln()).collect();
    let mean = logs.iter().sum::<f64>() / logs.len() as f64;
    logs.into_iter().map(|l| l - mean).collect()
}

/// Inverse of [`clr`]: closure of the exponentials.
pub fn clr_inverse(x: &[f64]) -> Result<Composition> {
    if x.len() < 2 {
        return Err(Error::TooShort { len: x.len() });
    }
    let sum: f64 = x.iter().sum();
    if sum.abs() > CLOSURE_TOL || !sum.is_finite() {
        return Err(Error::NotZeroSum { sum });
    }
    Ok(softmax_closure(x))
}

/// Closure of `exp(x)`, shifted by the maximum so large coordinates do not
/// overflow. The shift cancels in the closure.
fn softmax_closure(x: &[f64]) -> Composition {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    Composition {
        parts: e.into_iter().map(|v| v / sum).collect(),
    }
}

/// Orthonormal, zero-row-sum basis of the CLR hyperplane built from the
/// Helmert sub-matrix (the Helmert matrix without its constant first row).
///
/// Row `i` (0-based) carries `1/sqrt((i+1)(i+2))` on the first `i+1` entries
/// and `-(i+1)/sqrt((i+1)(i+2))` on entry `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmertBasis {
    matrix: DMatrix<f64>,
}

impl HelmertBasis {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::TooShort { len: k });
        }
        let mut matrix = DMatrix::zeros(k - 1, k);
        for i in 0..k - 1 {
            let m = (i + 1) as f64;
            let norm = (m * (m + 1.0)).sqrt();
            for j in 0..=i {
                matrix[(i, j)] = 1.0 / norm;
            }
            matrix[(i, i + 1)] = -m / norm;
        }
        Ok(Self { matrix })
    }

    /// The (K-1) x K matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Number of parts K.
    pub fn parts(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Builds the Helmert basis for `k` parts.
pub fn helmert_basis(k: usize) -> Result<HelmertBasis> {
    HelmertBasis::new(k)
}

/// Isometric log-ratio coordinates `H * clr(c)`.
pub fn ilr(c: &Composition, basis: &HelmertBasis) -> Result<Vec<f64>> {
    if c.len() != basis.parts() {
        return Err(Error::DimensionMismatch {
            expected: basis.parts(),
            got: c.len(),
        });
    }
    let z = DVector::from_vec(clr(c));
    Ok((basis.matrix() * z).as_slice().to_vec())
}

/// Inverse of [`ilr`]: `clr_inverse(H^T y)`.
pub fn ilr_inverse(y: &[f64], basis: &HelmertBasis) -> Result<Composition> {
    let k = basis.parts();
    if y.len() != k - 1 {
        return Err(Error::DimensionMismatch {
            expected: k - 1,
            got: y.len(),
        });
    }
    let z = basis.matrix().transpose() * DVector::from_column_slice(y);
    Ok(softmax_closure(z.as_slice()))
}

/// Which denominator to use when smoothing pairwise log-ratios.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PwlrDenominator {
    /// `ln((c_i + a) / (c_j + K a))`.
    #[default]
    ScaledAlpha,
    /// `ln((c_i + a) / (c_j + a))`.
    Symmetric,
}

/// Pairwise log-ratios for every `i < j`, ordered row-major over `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PwlrVector {
    ratios: Vec<f64>,
    alpha: f64,
}

impl PwlrVector {
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn into_ratios(self) -> Vec<f64> {
        self.ratios
    }
}

/// Number of pairwise log-ratios for `k` parts.
pub fn pwlr_len(k: usize) -> usize {
    k * (k - 1) / 2
}

/// Pairwise log-ratio transform with the default `K a` smoothing denominator.
pub fn pwlr(c: &Composition, alpha: f64) -> Result<PwlrVector> {
    pwlr_with(c, alpha, PwlrDenominator::ScaledAlpha)
}

/// Pairwise log-ratio transform with an explicit denominator convention.
pub fn pwlr_with(c: &Composition, alpha: f64, denominator: PwlrDenominator) -> Result<PwlrVector> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidSpec(format!("pwlr alpha must be >= 0, got {alpha}")));
    }
    let k = c.len();
    let den_alpha = match denominator {
        PwlrDenominator::ScaledAlpha => k as f64 * alpha,
        PwlrDenominator::Symmetric => alpha,
    };
    let p = c.parts();
    let mut ratios = Vec::with_capacity(pwlr_len(k));
    for i in 0..k {
        for j in i + 1..k {
            ratios.push(((p[i] + alpha) / (p[j] + den_alpha)).ln());
        }
    }
    Ok(PwlrVector { ratios, alpha })
}

/// Aitchison distance with the `1/K^2` normalization over pairs `i < j`.
pub fn aitchison_distance(p: &Composition, q: &Composition) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    let k = p.len();
    let lp: Vec<f64> = p.parts().iter().map(|x| x.ln()).collect();
    let lq: Vec<f64> = q.parts().iter().map(|x| x.ln()).collect();
    let mut acc = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let d = (lp[i] - lp[j]) - (lq[i] - lq[j]);
            acc += d * d;
        }
    }
    Ok((acc / (k * k) as f64).sqrt())
}
