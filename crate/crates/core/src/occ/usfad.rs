//! Stochastic range-box forest detector.
//!
//! Each tree is grown on a ψ-subsample: every node records the bounding box
//! of its data, picks a uniformly random non-degenerate feature, and splits
//! at a uniformly random point strictly inside that feature's range, down to
//! a depth limit of `⌈log2 ψ⌉ + 2`. Scoring walks a point down each tree; the
//! first node whose box excludes the point yields an out-of-box penalty
//! weighted by the remaining depth, and a point that stays in-box is charged
//! by how full and how shallow its leaf is. Scores lie in `[0, 1]`; a point
//! outside every tree's root box scores exactly 1.

use rand::Rng;
use rayon::prelude::*;

use crate::rng::stream_rng;

use super::{draw_split, OccConfig};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum UsfadNode {
    Split {
        feature: u32,
        threshold: f64,
        lo: Vec<f64>,
        hi: Vec<f64>,
        left: Box<UsfadNode>,
        right: Box<UsfadNode>,
    },
    Leaf {
        lo: Vec<f64>,
        hi: Vec<f64>,
        mass: u32,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct UsfadTree {
    pub(crate) psi: u32,
    pub(crate) depth_limit: u32,
    pub(crate) root: UsfadNode,
}

/// A fitted stochastic range-box forest.
#[derive(Debug, Clone, PartialEq)]
pub struct UsfadForest {
    pub(crate) trees: Vec<UsfadTree>,
    pub(crate) n_features: usize,
}

impl UsfadForest {
    /// Fits `config.n_trees` trees on ψ-subsamples of `rows`.
    pub fn fit(rows: &[Vec<f64>], config: &OccConfig) -> UsfadForest {
        let n_features = rows[0].len();
        let psi = config.subsample.min(rows.len());
        let depth_limit = (psi as f64).log2().ceil() as u32 + 2;
        let trees: Vec<UsfadTree> = (0..config.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream_rng(config.seed, t as u64);
                let sample: Vec<usize> =
                    rand::seq::index::sample(&mut rng, rows.len(), psi).into_vec();
                let root = grow(rows, &sample, 0, depth_limit, &mut rng);
                UsfadTree {
                    psi: psi as u32,
                    depth_limit,
                    root,
                }
            })
            .collect();
        UsfadForest { trees, n_features }
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Mean per-tree anomaly contribution of `x`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| tree_score(t, x)).sum();
        total / self.trees.len() as f64
    }
}

fn tree_score(tree: &UsfadTree, x: &[f64]) -> f64 {
    let span = (tree.depth_limit + 1) as f64;
    let mut node = &tree.root;
    let mut depth = 0u32;
    loop {
        let (lo, hi) = match node {
            UsfadNode::Split { lo, hi, .. } => (lo, hi),
            UsfadNode::Leaf { lo, hi, .. } => (lo, hi),
        };
        let in_box = x.iter().zip(lo).zip(hi).all(|((&v, &l), &h)| v >= l && v <= h);
        let remaining = (tree.depth_limit + 1 - depth) as f64 / span;
        if !in_box {
            return remaining;
        }
        match node {
            UsfadNode::Leaf { mass, .. } => {
                return (1.0 - *mass as f64 / tree.psi as f64) * remaining;
            }
            UsfadNode::Split {
                feature,
                threshold,
                left,
                right,
                ..
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

fn bounding_box(rows: &[Vec<f64>], sample: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let first = &rows[sample[0]];
    let mut lo = first.clone();
    let mut hi = first.clone();
    for &i in &sample[1..] {
        for (j, &v) in rows[i].iter().enumerate() {
            if v < lo[j] {
                lo[j] = v;
            }
            if v > hi[j] {
                hi[j] = v;
            }
        }
    }
    (lo, hi)
}

fn grow<R: Rng>(
    rows: &[Vec<f64>],
    sample: &[usize],
    depth: u32,
    depth_limit: u32,
    rng: &mut R,
) -> UsfadNode {
    let (lo, hi) = bounding_box(rows, sample);
    if depth >= depth_limit || sample.len() <= 1 {
        return UsfadNode::Leaf {
            lo,
            hi,
            mass: sample.len() as u32,
        };
    }
    let spread: Vec<u32> = (0..lo.len() as u32)
        .filter(|&j| hi[j as usize] > lo[j as usize])
        .collect();
    if spread.is_empty() {
        return UsfadNode::Leaf {
            lo,
            hi,
            mass: sample.len() as u32,
        };
    }
    let feature = spread[rng.gen_range(0..spread.len())];
    let Some(threshold) = draw_split(lo[feature as usize], hi[feature as usize], rng) else {
        return UsfadNode::Leaf {
            lo,
            hi,
            mass: sample.len() as u32,
        };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = sample
        .iter()
        .partition(|&&i| rows[i][feature as usize] < threshold);
    let left = grow(rows, &left_idx, depth + 1, depth_limit, rng);
    let right = grow(rows, &right_idx, depth + 1, depth_limit, rng);
    UsfadNode::Split {
        feature,
        threshold,
        lo,
        hi,
        left: Box::new(left),
        right: Box::new(right),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_rows(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64 / n as f64]).collect()
    }

    fn config(seed: u64) -> OccConfig {
        OccConfig {
            seed,
            ..OccConfig::default()
        }
    }

    #[test]
    fn out_of_range_point_scores_exactly_one() {
        let forest = UsfadForest::fit(&line_rows(300), &config(1));
        assert_eq!(forest.score(&[5.0]), 1.0);
        assert_eq!(forest.score(&[-5.0]), 1.0);
    }

    #[test]
    fn inside_points_score_below_one() {
        let forest = UsfadForest::fit(&line_rows(300), &config(2));
        let inside = forest.score(&[0.5]);
        assert!(inside < 1.0, "inside score {inside}");
        assert!(inside >= 0.0);
    }

    #[test]
    fn farther_outside_never_scores_lower() {
        let forest = UsfadForest::fit(&line_rows(400), &config(3));
        let inside = forest.score(&[0.5]);
        let near = forest.score(&[1.5]);
        let far = forest.score(&[10.0]);
        assert!(near >= inside);
        assert!(far >= near);
    }

    #[test]
    fn boxes_nest_within_parents() {
        let rows: Vec<Vec<f64>> = (0..256)
            .map(|i| vec![(i % 16) as f64, (i / 16) as f64])
            .collect();
        let forest = UsfadForest::fit(&rows, &config(4));
        fn check(node: &UsfadNode, outer: Option<(&[f64], &[f64])>) {
            let (lo, hi) = match node {
                UsfadNode::Split { lo, hi, .. } => (lo, hi),
                UsfadNode::Leaf { lo, hi, .. } => (lo, hi),
            };
            if let Some((olo, ohi)) = outer {
                for j in 0..lo.len() {
                    assert!(lo[j] >= olo[j] && hi[j] <= ohi[j]);
                }
            }
            if let UsfadNode::Split { left, right, .. } = node {
                check(left, Some((lo, hi)));
                check(right, Some((lo, hi)));
            }
        }
        for tree in &forest.trees {
            check(&tree.root, None);
            assert_eq!(tree.depth_limit, 10);
        }
    }

    #[test]
    fn subsample_capped_by_population() {
        let forest = UsfadForest::fit(&line_rows(50), &config(5));
        assert!(forest.trees.iter().all(|t| t.psi == 50));
    }

    #[test]
    fn deterministic_per_seed() {
        let rows = line_rows(200);
        let a = UsfadForest::fit(&rows, &config(7));
        let b = UsfadForest::fit(&rows, &config(7));
        assert_eq!(a, b);
        let c = UsfadForest::fit(&rows, &config(8));
        assert_ne!(a, c);
    }
}
