//! Random forest of CART trees (Gini impurity) grown on bootstrap samples,
//! with a random subset of features examined at each split. Probabilities
//! are the mean of the per-tree leaf class distributions.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{encode_labels, Classifier, ClassifierSpec};
use crate::error::Result;
use crate::linalg::to_row_major;
use crate::seeding::derive_seed;

pub const DEFAULT_TREES: usize = 200;

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Sparse class distribution `(class index, probability)`.
    Leaf(Box<[(u32, f64)]>),
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> &[(u32, f64)] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf(dist) => return dist,
            }
        }
    }

    fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                Node::Leaf(_) => 0,
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, Copy)]
struct TreeParams {
    n_classes: usize,
    max_depth: usize,
    features_per_split: usize,
}

struct TrainingData<'a> {
    x: &'a [f64],
    dim: usize,
    targets: &'a [usize],
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    score: f64,
}

fn best_split_on(data: &TrainingData, samples: &[usize], feature: usize, totals: &[usize], buf: &mut Vec<(f64, usize)>) -> Option<SplitCandidate> {
    buf.clear();
    buf.extend(samples.iter().map(|&i| (data.x[i * data.dim + feature], data.targets[i])));
    buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    if buf[0].0 == buf[buf.len() - 1].0 {
        return None;
    }
    let n = buf.len();
    let mut left = vec![0usize; totals.len()];
    let mut right = totals.to_vec();
    let mut sumsq_left = 0.0;
    let mut sumsq_right: f64 = totals.iter().map(|&c| (c * c) as f64).sum();
    let mut best: Option<SplitCandidate> = None;
    for idx in 0..n - 1 {
        let c = buf[idx].1;
        sumsq_left += (2 * left[c] + 1) as f64;
        left[c] += 1;
        sumsq_right -= (2 * right[c] - 1) as f64;
        right[c] -= 1;
        let (a, b) = (buf[idx].0, buf[idx + 1].0);
        if a < b {
            let nl = (idx + 1) as f64;
            // maximizing this minimizes the weighted Gini impurity of the children
            let score = sumsq_left / nl + sumsq_right / (n as f64 - nl);
            if best.as_ref().is_none_or(|s| score > s.score) {
                let mid = 0.5 * (a + b);
                let threshold = if mid < b { mid } else { a };
                best = Some(SplitCandidate { feature, threshold, score });
            }
        }
    }
    best
}

fn grow_tree(data: &TrainingData, samples: Vec<usize>, params: TreeParams, rng: &mut ChaCha8Rng) -> Tree {
    let mut nodes: Vec<Node> = vec![Node::Leaf(Box::new([]))];
    let mut stack = vec![(0usize, samples, 0usize)];
    let mut features: Vec<usize> = (0..data.dim).collect();
    let mut buf = Vec::new();

    while let Some((slot, samples, depth)) = stack.pop() {
        let mut totals = vec![0usize; params.n_classes];
        for &i in &samples {
            totals[data.targets[i]] += 1;
        }
        let pure = totals.iter().filter(|&&c| c > 0).count() <= 1;
        let mut split = None;
        if !pure && samples.len() >= 2 && depth < params.max_depth {
            features.shuffle(rng);
            let mut examined = 0;
            for &f in &features {
                if examined >= params.features_per_split {
                    break;
                }
                // constant features do not count towards the per-split budget
                if let Some(cand) = best_split_on(data, &samples, f, &totals, &mut buf) {
                    examined += 1;
                    if split.as_ref().is_none_or(|s: &SplitCandidate| cand.score > s.score) {
                        split = Some(cand);
                    }
                }
            }
        }
        match split {
            Some(s) => {
                let (left, right): (Vec<usize>, Vec<usize>) = samples
                    .into_iter()
                    .partition(|&i| data.x[i * data.dim + s.feature] <= s.threshold);
                let l = nodes.len();
                nodes.push(Node::Leaf(Box::new([])));
                nodes.push(Node::Leaf(Box::new([])));
                nodes[slot] = Node::Split {
                    feature: s.feature,
                    threshold: s.threshold,
                    left: l,
                    right: l + 1,
                };
                stack.push((l + 1, right, depth + 1));
                stack.push((l, left, depth + 1));
            }
            None => {
                let n = samples.len() as f64;
                let dist: Vec<(u32, f64)> = totals
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(|(k, &c)| (k as u32, c as f64 / n))
                    .collect();
                nodes[slot] = Node::Leaf(dist.into_boxed_slice());
            }
        }
    }
    Tree { nodes }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    class_ids: Arc<[usize]>,
    trees: Vec<Tree>,
    dim: usize,
}

impl RandomForest {
    pub fn fit(spec: &ClassifierSpec, x: &DMatrix<f64>, y: &[usize]) -> Result<Self> {
        let enc = encode_labels(x, y)?;
        let (n, d) = x.shape();
        let rows = to_row_major(x);
        let data = TrainingData {
            x: &rows,
            dim: d,
            targets: &enc.targets,
        };
        let params = TreeParams {
            n_classes: enc.class_ids.len(),
            max_depth: spec.max_depth.unwrap_or(usize::MAX),
            features_per_split: spec
                .features_per_split
                .unwrap_or_else(|| ((d as f64).sqrt().floor() as usize).max(1))
                .min(d),
        };
        let bootstrap = spec.bootstrap.unwrap_or(true);
        let seed = spec.seed();
        let n_trees = spec.n_trees.unwrap_or(DEFAULT_TREES);

        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &(t as u64).to_le_bytes()));
                let samples: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                grow_tree(&data, samples, params, &mut rng)
            })
            .collect();
        Ok(Self {
            class_ids: enc.class_ids,
            trees,
            dim: d,
        })
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }
}

impl Classifier for RandomForest {
    fn class_ids(&self) -> &Arc<[usize]> {
        &self.class_ids
    }

    fn n_features(&self) -> usize {
        self.dim
    }

    fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let mut probs = vec![0.0; self.class_ids.len()];
        for tree in &self.trees {
            for &(c, p) in tree.leaf(x) {
                probs[c as usize] += p;
            }
        }
        let n = self.trees.len() as f64;
        probs.iter_mut().for_each(|p| *p /= n);
        probs
    }
}
