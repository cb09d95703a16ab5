//! Synthetic labeled compositions drawn from per-geozone logistic-normal
//! distributions: Gaussian in ILR coordinates, mapped back to the simplex.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataset::{Group, GroupMap, LabeledDataset};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::simplex::{clr, closure, ilr_inverse, HelmertBasis, ANALYTES};

/// Relative eigenvalue tolerance for the PSD check.
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_parts: usize,
    pub n_geozones: usize,
    pub samples_per_zone: usize,
    /// 0 gives balanced classes; zone `g` otherwise receives
    /// `samples_per_zone * (1 - imbalance * g / (G - 1))` samples (at least 1).
    pub imbalance: f64,
    pub group_assignment: Vec<Group>,
    /// G rows of K-1 ILR coordinates.
    pub class_means: Vec<Vec<f64>>,
    pub class_covs: Vec<DMatrix<f64>>,
    pub overlap_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.n_geozones < 2 {
            return bad(format!("need at least 2 geozones, got {}", self.n_geozones));
        }
        if self.n_parts < 3 {
            return bad(format!("need at least 3 parts, got {}", self.n_parts));
        }
        if self.samples_per_zone == 0 {
            return bad("samples_per_zone must be positive".into());
        }
        if !(0.0..1.0).contains(&self.imbalance) {
            return bad(format!("imbalance must be in [0, 1), got {}", self.imbalance));
        }
        if !(self.overlap_scale >= 0.0 && self.overlap_scale.is_finite()) {
            return bad(format!("overlap_scale must be >= 0, got {}", self.overlap_scale));
        }
        let g = self.n_geozones;
        if self.group_assignment.len() != g || self.class_means.len() != g || self.class_covs.len() != g {
            return bad(format!("groups, means and covariances must each have {g} entries"));
        }
        let d = self.n_parts - 1;
        for (class, (m, c)) in self.class_means.iter().zip(&self.class_covs).enumerate() {
            if m.len() != d || c.nrows() != d || c.ncols() != d {
                return bad(format!("class {class}: mean and covariance must have dimension {d}"));
            }
        }
        Ok(())
    }

    /// Sample count of zone `g`.
    pub fn zone_count(&self, g: usize) -> usize {
        if self.n_geozones < 2 {
            return self.samples_per_zone;
        }
        let share = 1.0 - self.imbalance * g as f64 / (self.n_geozones - 1) as f64;
        ((self.samples_per_zone as f64 * share).round() as usize).max(1)
    }

    pub fn total_samples(&self) -> usize {
        (0..self.n_geozones).map(|g| self.zone_count(g)).sum()
    }

    /// Largest standard deviation of zone `g` along any ILR direction.
    pub fn zone_stdev(&self, g: usize) -> f64 {
        let max = self.class_covs[g].clone().symmetric_eigenvalues().max();
        (self.overlap_scale * max.max(0.0)).sqrt()
    }

    pub fn part_names(&self) -> Vec<String> {
        if self.n_parts == ANALYTES.len() {
            ANALYTES.iter().map(|s| s.to_string()).collect()
        } else {
            (0..self.n_parts).map(|k| format!("part{k}")).collect()
        }
    }

    pub fn zone_names(&self) -> Vec<String> {
        self.group_assignment
            .iter()
            .enumerate()
            .map(|(g, grp)| format!("GZ{g:02}-{grp}"))
            .collect()
    }
}

/// `V * sqrt(diag(lambda))`, or `BadCovariance` if the matrix is not
/// symmetric positive semidefinite.
fn covariance_factor(cov: &DMatrix<f64>, class: usize) -> Result<DMatrix<f64>> {
    let scale = cov.amax().max(1.0);
    if (cov - cov.transpose()).amax() > PSD_TOL * scale || cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::BadCovariance { class });
    }
    let eig = SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.min() < -PSD_TOL * scale {
        return Err(Error::BadCovariance { class });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * DMatrix::from_diagonal(&roots))
}

/// Draws every zone's samples; rows are ordered by zone.
pub fn generate(spec: &SyntheticSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let basis = HelmertBasis::new(spec.n_parts)?;
    let factors = spec
        .class_covs
        .iter()
        .enumerate()
        .map(|(g, c)| covariance_factor(c, g))
        .collect::<Result<Vec<_>>>()?;
    let d = spec.n_parts - 1;
    let spread = spec.overlap_scale.sqrt();
    let zones = (0..spec.n_geozones)
        .into_par_iter()
        .map(|g| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, format!("zone/{g}").as_bytes()));
            let mean = DVector::from_column_slice(&spec.class_means[g]);
            (0..spec.zone_count(g))
                .map(|_| {
                    let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                    let z = &mean + &factors[g] * noise * spread;
                    ilr_inverse(z.as_slice(), &basis)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(spec.total_samples());
    let mut labels = Vec::with_capacity(rows.capacity());
    for (g, zone) in zones.into_iter().enumerate() {
        labels.extend(std::iter::repeat_n(g, zone.len()));
        rows.extend(zone);
    }
    Ok(LabeledDataset {
        part_names: spec.part_names(),
        zone_names: spec.zone_names(),
        groups: GroupMap::new(spec.group_assignment.clone()),
        rows,
        labels,
    })
}

/// Typical iron-ore assay (weight fractions, closed before use) in
/// [`ANALYTES`] order.
pub const BASE_ASSAY: [f64; 10] = [0.58, 0.055, 0.025, 0.0009, 0.065, 0.0012, 0.0006, 0.0005, 0.0004, 0.0002];

pub const PAPERLIKE_ZONES: usize = 46;
pub const PAPERLIKE_SAMPLES_PER_ZONE: usize = 760;
pub const PAPERLIKE_SEED: u64 = 20_190_318;
/// Zones per group, in M, H, U order.
pub const PAPERLIKE_GROUP_SIZES: [usize; 3] = [16, 10, 20];

/// Log-scale standard deviation of the widest covariance direction.
const PRESET_MAX_STDEV: f64 = 0.7;
const PRESET_CONDITION: f64 = 50.0;
/// Spread of zone means around their group centre, in ILR units.
const PRESET_ZONE_SPREAD: f64 = 0.22;
/// Number of deliberately confusable same-group zone pairs.
const PRESET_TWIN_PAIRS: usize = 6;
/// Twin mean distance as a fraction of the zone's largest stdev.
const PRESET_TWIN_GAP: f64 = 0.3;

/// Group-level shifts of the log composition (CLR units), in [`ANALYTES`]
/// order: M enriched in Fe, H in LOI, U in silica and alumina.
const GROUP_SHIFT: [[f64; 10]; 3] = [
    [0.25, -0.5, -0.4, 0.1, -0.1, -0.2, -0.2, 0.1, -0.2, 0.0],
    [0.05, -0.2, -0.1, 0.3, 0.45, -0.1, 0.0, 0.2, 0.0, 0.1],
    [-0.3, 0.6, 0.5, -0.2, -0.1, 0.3, 0.3, -0.1, 0.3, 0.1],
];

fn random_rotation(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    a.qr().q()
}

/// 46 zones of 10-part compositions, about 35,000 samples, with anisotropic
/// covariances and several near-indistinguishable same-group zone pairs.
pub fn preset_paperlike() -> SyntheticSpec {
    let k = ANALYTES.len();
    let d = k - 1;
    let basis = HelmertBasis::new(k).expect("k >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(PAPERLIKE_SEED);

    let base = clr(&closure(&BASE_ASSAY).expect("positive base assay"));
    let mut groups = Vec::with_capacity(PAPERLIKE_ZONES);
    for (grp, n) in [Group::M, Group::H, Group::U].into_iter().zip(PAPERLIKE_GROUP_SIZES) {
        groups.extend(std::iter::repeat_n(grp, n));
    }
    let centre = |grp: Group| {
        let shift = &GROUP_SHIFT[grp as usize];
        let v: Vec<f64> = base.iter().zip(shift).map(|(b, s)| b + s).collect();
        let mean = v.iter().sum::<f64>() / k as f64;
        let centred: Vec<f64> = v.iter().map(|x| x - mean).collect();
        basis.matrix() * DVector::from_vec(centred)
    };

    let eigen: Vec<f64> = (0..d)
        .map(|i| PRESET_MAX_STDEV.powi(2) * PRESET_CONDITION.powf(-(i as f64) / (d - 1) as f64))
        .collect();
    let mut means: Vec<DVector<f64>> = Vec::with_capacity(PAPERLIKE_ZONES);
    let mut covs = Vec::with_capacity(PAPERLIKE_ZONES);
    for &grp in &groups {
        let offset = DVector::from_fn(d, |_, _| PRESET_ZONE_SPREAD * rng.sample::<f64, _>(StandardNormal));
        means.push(centre(grp) + offset);
        let q = random_rotation(d, &mut rng);
        let cov = &q * DMatrix::from_diagonal(&DVector::from_vec(eigen.clone())) * q.transpose();
        covs.push((&cov + cov.transpose()) * 0.5);
    }

    // pull the second zone of some same-group pairs next to the first
    let gap = PRESET_TWIN_GAP * PRESET_MAX_STDEV;
    let mut twins = 0;
    let mut start = 0;
    for n in PAPERLIKE_GROUP_SIZES {
        let pairs = (PRESET_TWIN_PAIRS / 3).max(1).min(n / 2);
        for p in 0..pairs {
            if twins == PRESET_TWIN_PAIRS {
                break;
            }
            let (a, b) = (start + 2 * p, start + 2 * p + 1);
            let dir = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize();
            means[b] = &means[a] + dir * gap;
            twins += 1;
        }
        start += n;
    }

    SyntheticSpec {
        n_parts: k,
        n_geozones: PAPERLIKE_ZONES,
        samples_per_zone: PAPERLIKE_SAMPLES_PER_ZONE,
        imbalance: 0.0,
        group_assignment: groups,
        class_means: means.into_iter().map(|m| m.as_slice().to_vec()).collect(),
        class_covs: covs,
        overlap_scale: 1.0,
        seed: PAPERLIKE_SEED,
    }
}
