//! Shared fixtures for the criterion benches.

use logratio_core::datagen::{generate, preset_paperlike};
use logratio_core::simplex::{helmert_basis, ilr};
use logratio_core::LabeledDataset;
use nalgebra::DMatrix;

/// Paper-like synthetic assays with a reduced per-zone sample count.
pub fn paperlike_sample(samples_per_zone: usize) -> LabeledDataset {
    let mut spec = preset_paperlike();
    spec.samples_per_zone = samples_per_zone;
    generate(&spec).expect("preset generates")
}

/// ILR coordinates of every row, one row per sample.
pub fn ilr_features(dataset: &LabeledDataset) -> DMatrix<f64> {
    let basis = helmert_basis(dataset.n_parts()).expect("basis");
    let coords: Vec<Vec<f64>> = dataset.rows.iter().map(|c| ilr(c, &basis).expect("ilr")).collect();
    DMatrix::from_fn(coords.len(), basis.matrix().nrows(), |i, j| coords[i][j])
}
