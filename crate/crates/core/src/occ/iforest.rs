//! Isolation forest detector.
//!
//! Trees are grown on ψ-subsamples by splitting a random feature at a random
//! point within the node's data range, down to a depth limit of `⌈log2 ψ⌉`.
//! A point's path length is its split depth plus the standard adjustment
//! `c(n)` for the leaf it lands in, and the score is `2^(-E[h(x)]/c(ψ))`,
//! with `c(n) = 2·H(n-1) - 2(n-1)/n` computed from exact harmonic sums.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::stream_rng;

use super::{draw_split, OccConfig};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum IsoNode {
    Split {
        feature: u32,
        threshold: f64,
        left: Box<IsoNode>,
        right: Box<IsoNode>,
    },
    Leaf {
        size: u32,
    },
}

/// A fitted isolation forest.
#[derive(Debug, Clone, PartialEq)]
pub struct IsolationForestModel {
    pub(crate) trees: Vec<IsoNode>,
    pub(crate) n_features: usize,
    pub(crate) psi: u32,
    pub(crate) depth_limit: u32,
}

/// Average path length of an unsuccessful BST search over `n` points.
pub fn c_factor(n: u64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let harmonic: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
    2.0 * harmonic - 2.0 * (n - 1) as f64 / n as f64
}

impl IsolationForestModel {
    /// Fits `config.n_trees` isolation trees on ψ-subsamples of `rows`.
    pub fn fit(rows: &[Vec<f64>], config: &OccConfig) -> IsolationForestModel {
        let n_features = rows[0].len();
        let psi = config.subsample.min(rows.len());
        let depth_limit = (psi as f64).log2().ceil() as u32;
        let trees: Vec<IsoNode> = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(config.seed, t as u64);
                let sample: Vec<usize> =
                    rand::seq::index::sample(&mut rng, rows.len(), psi).into_vec();
                grow(rows, &sample, 0, depth_limit, &mut rng)
            })
            .collect();
        IsolationForestModel {
            trees,
            n_features,
            psi: psi as u32,
            depth_limit,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Path length of `x` in one tree: split depth plus leaf adjustment.
    pub(crate) fn path_length(tree: &IsoNode, x: &[f64]) -> f64 {
        let mut node = tree;
        let mut depth = 0u32;
        loop {
            match node {
                IsoNode::Leaf { size } => return depth as f64 + c_factor(*size as u64),
                IsoNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature as usize] < *threshold {
                        left
                    } else {
                        right
                    };
                    depth += 1;
                }
            }
        }
    }

    /// Mean path length of `x` across the forest.
    pub fn mean_path_length(&self, x: &[f64]) -> f64 {
        let total: f64 = self
            .trees
            .iter()
            .map(|t| IsolationForestModel::path_length(t, x))
            .sum();
        total / self.trees.len() as f64
    }

    /// Anomaly score `2^(-E[h(x)]/c(ψ))` in `(0, 1)`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let expected = self.mean_path_length(x);
        (2.0_f64).powf(-expected / c_factor(self.psi as u64))
    }
}

fn grow<R: Rng>(
    rows: &[Vec<f64>],
    sample: &[usize],
    depth: u32,
    depth_limit: u32,
    rng: &mut R,
) -> IsoNode {
    if depth >= depth_limit || sample.len() <= 1 {
        return IsoNode::Leaf {
            size: sample.len() as u32,
        };
    }
    let n_features = rows[sample[0]].len();
    let mut lo = vec![f64::INFINITY; n_features];
    let mut hi = vec![f64::NEG_INFINITY; n_features];
    for &i in sample {
        for (j, &v) in rows[i].iter().enumerate() {
            lo[j] = lo[j].min(v);
            hi[j] = hi[j].max(v);
        }
    }
    let spread: Vec<u32> = (0..n_features as u32)
        .filter(|&j| hi[j as usize] > lo[j as usize])
        .collect();
    if spread.is_empty() {
        return IsoNode::Leaf {
            size: sample.len() as u32,
        };
    }
    let feature = spread[rng.gen_range(0..spread.len())];
    let Some(threshold) = draw_split(lo[feature as usize], hi[feature as usize], rng) else {
        return IsoNode::Leaf {
            size: sample.len() as u32,
        };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = sample
        .iter()
        .partition(|&&i| rows[i][feature as usize] < threshold);
    IsoNode::Split {
        feature,
        threshold,
        left: Box::new(grow(rows, &left_idx, depth + 1, depth_limit, rng)),
        right: Box::new(grow(rows, &right_idx, depth + 1, depth_limit, rng)),
    }
}
