//! Seeded train / test partition of a labeled dataset.

use logratio_core::seeding::derive_seed;
use logratio_core::LabeledDataset;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Sorted row indices of each side of a split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits rows so the training share is `fraction`. With `stratified`, each
/// class is split separately and keeps at least one row on each side.
pub fn split(dataset: &LabeledDataset, fraction: f64, stratified: bool, seed: u64) -> Result<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, b"split"));
    let mut train = Vec::new();
    let mut test = Vec::new();
    if stratified {
        let mut by_class = vec![Vec::new(); dataset.n_classes()];
        for (i, &l) in dataset.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        for (class, mut rows) in by_class.into_iter().enumerate() {
            match rows.len() {
                0 => continue,
                1 => return Err(Error::ClassTooSmall { class, count: 1 }),
                n => {
                    rows.shuffle(&mut rng);
                    let k = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
                    train.extend_from_slice(&rows[..k]);
                    test.extend_from_slice(&rows[k..]);
                }
            }
        }
    } else {
        let mut rows: Vec<usize> = (0..dataset.len()).collect();
        rows.shuffle(&mut rng);
        let k = (fraction * rows.len() as f64).round() as usize;
        train.extend_from_slice(&rows[..k]);
        test.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
