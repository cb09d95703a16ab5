//! Labeled compositional datasets and the geozone-to-group map.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::Composition;

/// Geozone group: mineralized, hydrated or unmineralized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    M,
    H,
    U,
}

impl Group {
    /// Whether the group counts as the positive side of the `(M or H)` vs `U` scenario.
    pub fn is_mineral_or_hydrated(self) -> bool {
        matches!(self, Group::M | Group::H)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Group::M => "M",
            Group::H => "H",
            Group::U => "U",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Group {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "M" => Ok(Group::M),
            "H" => Ok(Group::H),
            "U" => Ok(Group::U),
            other => Err(format!("unknown group {other:?}, expected M, H or U")),
        }
    }
}

/// Group of every class id; index `g` holds the group of class `g`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupMap {
    groups: Vec<Group>,
}

impl GroupMap {
    pub fn new(groups: Vec<Group>) -> Self {
        Self { groups }
    }

    pub fn get(&self, class: usize) -> Result<Group> {
        self.groups
            .get(class)
            .copied()
            .ok_or(Error::UnknownLabel { label: class })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn as_slice(&self) -> &[Group] {
        &self.groups
    }
}

/// Compositions with integer class labels `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub part_names: Vec<String>,
    pub zone_names: Vec<String>,
    pub groups: GroupMap,
    pub rows: Vec<Composition>,
    pub labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.zone_names.len()
    }

    pub fn n_parts(&self) -> usize {
        self.part_names.len()
    }

    /// Rows selected by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            part_names: self.part_names.clone(),
            zone_names: self.zone_names.clone(),
            groups: self.groups.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Per-class sample counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Raw parts as an N x K matrix.
    pub fn parts_matrix(&self) -> DMatrix<f64> {
        rows_to_matrix(&self.rows)
    }
}

pub(crate) fn rows_to_matrix(rows: &[Composition]) -> DMatrix<f64> {
    let k = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(rows.len(), k, |i, j| rows[i].parts()[j])
}
