//! Fitted feature-space maps and the pipeline that chains them after the
//! log-ratio transforms.
//!
//! Every pipeline is fitted on training rows only; held-out rows go through
//! [`FittedTransform::apply`] / [`FittedTransform::transform`].

pub mod ica;
pub mod lle;
pub mod pca;

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::rows_to_matrix;
use crate::error::{Error, Result};
use crate::linalg::{project_rows, Standardizer};
use crate::simplex::{self, Composition, HelmertBasis, PwlrDenominator};

pub use ica::{fit_ica, IcaModel, IcaParams};
pub use lle::{apply_lle, fit_lle, LleModel, LleParams};
pub use pca::{apply_pca, fit_pca, fit_pca_whiten, transform_pca, PcaModel, RankPolicy};

/// Default cap on the number of training rows used to solve the LLE
/// eigenproblem; the rest are embedded out-of-sample.
pub const DEFAULT_LLE_MAX_FIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Ilr,
    PcaWhiten,
    ClrPca,
    ClrIca,
    ClrLle,
    Pwlr,
}

impl TransformKind {
    pub const ALL: [TransformKind; 7] = [
        TransformKind::Identity,
        TransformKind::Ilr,
        TransformKind::PcaWhiten,
        TransformKind::ClrPca,
        TransformKind::ClrIca,
        TransformKind::ClrLle,
        TransformKind::Pwlr,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformKind::Identity => "identity",
            TransformKind::Ilr => "ilr",
            TransformKind::PcaWhiten => "pca_whiten",
            TransformKind::ClrPca => "clr_pca",
            TransformKind::ClrIca => "clr_ica",
            TransformKind::ClrLle => "clr_lle",
            TransformKind::Pwlr => "pwlr",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown transform kind {s:?}")))
    }
}

/// Declarative description of one transform variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    pub kind: TransformKind,
    /// Report id; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pwlr_denominator: Option<PwlrDenominator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub whiten: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lle_neighbors: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lle_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lle_reg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lle_max_fit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ica_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ica_max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Standardize output features on the training set. Defaults to true
    /// for `clr_ica` / `clr_lle` only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardize: Option<bool>,
}

impl TransformSpec {
    pub fn new(kind: TransformKind) -> Self {
        Self {
            kind,
            id: None,
            alpha: None,
            pwlr_denominator: None,
            whiten: None,
            lle_neighbors: None,
            lle_dim: None,
            lle_reg: None,
            lle_max_fit: None,
            ica_tol: None,
            ica_max_iter: None,
            seed: None,
            standardize: None,
        }
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.kind.to_string())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(simplex::DEFAULT_PWLR_ALPHA)
    }

    pub fn whiten(&self) -> bool {
        self.whiten.unwrap_or(true)
    }

    pub fn standardize(&self) -> bool {
        self.standardize
            .unwrap_or(matches!(self.kind, TransformKind::ClrIca | TransformKind::ClrLle))
    }

    pub fn ica_params(&self) -> IcaParams {
        let d = IcaParams::default();
        IcaParams {
            tol: self.ica_tol.unwrap_or(d.tol),
            max_iter: self.ica_max_iter.unwrap_or(d.max_iter),
            seed: self.seed.unwrap_or(d.seed),
        }
    }

    /// LLE parameters for `k`-part input; the embedding defaults to the CLR rank `k - 1`.
    pub fn lle_params(&self, k: usize) -> LleParams {
        LleParams {
            n_neighbors: self.lle_neighbors.unwrap_or(lle::DEFAULT_NEIGHBORS),
            embed_dim: self.lle_dim.unwrap_or(k.saturating_sub(1).max(1)),
            reg: self.lle_reg.unwrap_or(lle::DEFAULT_REG),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(a) = self.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidSpec(format!("alpha must be >= 0, got {a}")));
            }
        }
        if self.lle_neighbors == Some(0) || self.lle_dim == Some(0) || self.lle_max_fit == Some(0) {
            return Err(Error::InvalidSpec("LLE counts must be positive".into()));
        }
        if let Some(t) = self.ica_tol {
            if t.is_nan() || t <= 0.0 {
                return Err(Error::InvalidSpec(format!("ica_tol must be > 0, got {t}")));
            }
        }
        if self.ica_max_iter == Some(0) {
            return Err(Error::InvalidSpec("ica_max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FittedMap {
    Identity,
    Ilr(HelmertBasis),
    Pca(PcaModel),
    ClrPca(PcaModel),
    ClrIca(IcaModel),
    ClrLle(LleModel),
    Pwlr { alpha: f64, denominator: PwlrDenominator },
}

/// A fitted pipeline mapping compositions to classifier features.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTransform {
    kind: TransformKind,
    parts: usize,
    map: FittedMap,
    post: Option<Standardizer>,
}

fn clr_matrix(rows: &[Composition]) -> DMatrix<f64> {
    let k = rows.first().map_or(0, |r| r.len());
    let mut m = DMatrix::zeros(rows.len(), k);
    for (i, r) in rows.iter().enumerate() {
        for (j, v) in simplex::clr(r).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    m
}

/// Fits the pipeline described by `spec` on training compositions.
pub fn fit_pipeline(spec: &TransformSpec, train: &[Composition]) -> Result<FittedTransform> {
    spec.validate()?;
    let first = train.first().ok_or(Error::Empty)?;
    let k = first.len();
    if let Some(bad) = train.iter().find(|r| r.len() != k) {
        return Err(Error::DimensionMismatch { expected: k, got: bad.len() });
    }
    let pipeline_rank = RankPolicy::ZeroBelow(pca::WHITEN_FLOOR);
    let map = match spec.kind {
        TransformKind::Identity => FittedMap::Identity,
        TransformKind::Ilr => FittedMap::Ilr(HelmertBasis::new(k)?),
        TransformKind::PcaWhiten => FittedMap::Pca(fit_pca(&rows_to_matrix(train), spec.whiten(), pipeline_rank)?),
        TransformKind::ClrPca => FittedMap::ClrPca(fit_pca(&clr_matrix(train), spec.whiten(), pipeline_rank)?),
        TransformKind::ClrIca => FittedMap::ClrIca(fit_ica(&clr_matrix(train), &spec.ica_params())?),
        TransformKind::ClrLle => {
            let max_fit = spec.lle_max_fit.unwrap_or(DEFAULT_LLE_MAX_FIT);
            let fit_rows: Vec<Composition> = if train.len() > max_fit {
                let mut idx: Vec<usize> = (0..train.len()).collect();
                idx.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed.unwrap_or(0)));
                idx.truncate(max_fit);
                idx.sort_unstable();
                idx.into_iter().map(|i| train[i].clone()).collect()
            } else {
                train.to_vec()
            };
            FittedMap::ClrLle(fit_lle(&clr_matrix(&fit_rows), &spec.lle_params(k))?)
        }
        TransformKind::Pwlr => FittedMap::Pwlr {
            alpha: spec.alpha(),
            denominator: spec.pwlr_denominator.unwrap_or_default(),
        },
    };
    let mut fitted = FittedTransform {
        kind: spec.kind,
        parts: k,
        map,
        post: None,
    };
    if spec.standardize() {
        let features = fitted.transform(train)?;
        fitted.post = Some(Standardizer::fit(&features));
    }
    Ok(fitted)
}

impl FittedTransform {
    pub fn kind(&self) -> TransformKind {
        self.kind
    }

    /// Number of input parts K.
    pub fn input_parts(&self) -> usize {
        self.parts
    }

    pub fn output_dim(&self) -> usize {
        let k = self.parts;
        match &self.map {
            FittedMap::Identity => k,
            FittedMap::Ilr(_) => k - 1,
            FittedMap::Pca(m) | FittedMap::ClrPca(m) => m.dim(),
            FittedMap::ClrIca(m) => m.n_components(),
            FittedMap::ClrLle(m) => m.embed_dim,
            FittedMap::Pwlr { .. } => simplex::pwlr_len(k),
        }
    }

    pub fn pca_model(&self) -> Option<&PcaModel> {
        match &self.map {
            FittedMap::Pca(m) | FittedMap::ClrPca(m) => Some(m),
            _ => None,
        }
    }

    pub fn apply(&self, c: &Composition) -> Result<Vec<f64>> {
        Ok(self.transform(std::slice::from_ref(c))?.row(0).iter().cloned().collect())
    }

    /// Transforms rows into an N x output_dim feature matrix.
    pub fn transform(&self, rows: &[Composition]) -> Result<DMatrix<f64>> {
        if let Some(bad) = rows.iter().find(|r| r.len() != self.parts) {
            return Err(Error::DimensionMismatch {
                expected: self.parts,
                got: bad.len(),
            });
        }
        let mut out = match &self.map {
            FittedMap::Identity => rows_to_matrix(rows),
            FittedMap::Ilr(basis) => {
                project_rows(&clr_matrix(rows), basis.matrix())
            }
            FittedMap::Pca(m) => transform_pca(m, &rows_to_matrix(rows))?,
            FittedMap::ClrPca(m) => transform_pca(m, &clr_matrix(rows))?,
            FittedMap::ClrIca(m) => m.transform(&clr_matrix(rows))?,
            FittedMap::ClrLle(m) => m.transform(&clr_matrix(rows))?,
            FittedMap::Pwlr { alpha, denominator } => {
                let width = simplex::pwlr_len(self.parts);
                let mut out = DMatrix::zeros(rows.len(), width);
                for (i, r) in rows.iter().enumerate() {
                    let v = simplex::pwlr_with(r, *alpha, *denominator)?;
                    for (j, x) in v.ratios().iter().enumerate() {
                        out[(i, j)] = *x;
                    }
                }
                out
            }
        };
        if let Some(post) = &self.post {
            post.apply_matrix(&mut out);
        }
        Ok(out)
    }
}
