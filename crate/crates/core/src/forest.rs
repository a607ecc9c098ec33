//! Supervised decision trees and random forests (levels three and four).
//!
//! Trees are CART-style: greedy Gini splits over a random subset of candidate
//! features, with candidate thresholds at midpoints between consecutive
//! distinct sorted values. Every tie is broken deterministically (lowest
//! feature index, then lowest threshold; prediction argmax prefers the
//! earlier class), and every tree draws from its own seed-derived RNG stream,
//! so a fitted forest is a pure function of `(data, config)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("no training records")]
    EmptyInput,
    #[error("records and labels have different lengths ({records} vs {labels})")]
    LengthMismatch { records: usize, labels: usize },
    #[error("label {0:?} is not in the class list")]
    UnknownLabel(String),
    #[error("feature vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Forest hyperparameters.
///
/// `max_features = None` resolves to `⌈√F⌉`; `max_depth = None` grows trees
/// to purity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    fn resolved_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features)
    }

    fn validate(&self) -> Result<(), ForestError> {
        if self.n_trees == 0 {
            return Err(ForestError::BadConfig("n_trees must be at least 1".into()));
        }
        if self.min_leaf == 0 {
            return Err(ForestError::BadConfig("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

/// One tree node: an axis-aligned split or a leaf with a sparse class
/// histogram (pairs of class index and training count).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        counts: Vec<(u16, u64)>,
    },
}

impl TreeNode {
    /// Leaf histogram reached by `x`.
    pub fn leaf_counts(&self, x: &[f64]) -> &[(u16, u64)] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

/// A fitted random forest over a fixed, ordered class list.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomForestModel {
    pub trees: Vec<TreeNode>,
    pub classes: Vec<String>,
    pub n_features: usize,
    pub max_features: usize,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

/// Argmax class and averaged per-class probabilities for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestPrediction {
    pub class: usize,
    pub probabilities: Vec<f64>,
}

impl RandomForestModel {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn class_name(&self, class: usize) -> &str {
        &self.classes[class]
    }

    /// Averages the normalised leaf histograms of every tree and returns the
    /// argmax class, ties going to the earlier class.
    pub fn predict(&self, x: &[f64]) -> Result<ForestPrediction, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut probabilities = vec![0.0; self.classes.len()];
        for tree in &self.trees {
            let counts = tree.leaf_counts(x);
            let total: u64 = counts.iter().map(|(_, c)| c).sum();
            if total == 0 {
                continue;
            }
            for &(class, count) in counts {
                probabilities[class as usize] += count as f64 / total as f64;
            }
        }
        for p in &mut probabilities {
            *p /= self.trees.len() as f64;
        }
        let mut class = 0;
        for (i, &p) in probabilities.iter().enumerate() {
            if p > probabilities[class] {
                class = i;
            }
        }
        Ok(ForestPrediction {
            class,
            probabilities,
        })
    }

    /// JSON rendering of the full model for debugging.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }
}

/// Fits a single CART tree on `(x, y)` with the given RNG.
///
/// `y` holds class indices below `n_classes`. The tree splits until purity,
/// `max_depth`, or `min_leaf` stops it; each split considers `max_features`
/// randomly drawn candidate features.
pub fn fit_tree<R: Rng>(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    config: &ForestConfig,
    rng: &mut R,
) -> Result<TreeNode, ForestError> {
    config.validate()?;
    check_rows(x, y.len())?;
    let builder = TreeBuilder::new(x, y, n_classes, config);
    let indices: Vec<u32> = (0..x.len() as u32).collect();
    Ok(builder.build(indices, 0, rng))
}

/// Fits a forest with the class list taken from the sorted unique labels.
pub fn fit_forest<S: AsRef<str>>(
    x: &[Vec<f64>],
    labels: &[S],
    config: &ForestConfig,
) -> Result<RandomForestModel, ForestError> {
    let mut classes: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    classes.sort();
    classes.dedup();
    fit_forest_with_classes(x, labels, classes, config)
}

/// Fits a forest over an explicit, ordered class list.
///
/// The class order decides prediction tie-breaks, so callers that care (the
/// pipeline pins benign first) pass it explicitly. Each tree is grown on a
/// bootstrap resample drawn from its own RNG stream.
pub fn fit_forest_with_classes<S: AsRef<str>>(
    x: &[Vec<f64>],
    labels: &[S],
    classes: Vec<String>,
    config: &ForestConfig,
) -> Result<RandomForestModel, ForestError> {
    config.validate()?;
    check_rows(x, labels.len())?;
    let y: Vec<usize> = labels
        .iter()
        .map(|l| {
            classes
                .iter()
                .position(|c| c == l.as_ref())
                .ok_or_else(|| ForestError::UnknownLabel(l.as_ref().to_string()))
        })
        .collect::<Result<_, _>>()?;
    let n_features = x[0].len();
    let builder = TreeBuilder::new(x, &y, classes.len(), config);
    let trees: Vec<TreeNode> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(config.seed, t as u64);
            let n = x.len();
            let indices: Vec<u32> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n) as u32).collect()
            } else {
                (0..n as u32).collect()
            };
            builder.build(indices, 0, &mut rng)
        })
        .collect();
    Ok(RandomForestModel {
        trees,
        n_features,
        max_features: config.resolved_max_features(n_features),
        max_depth: config.max_depth,
        min_leaf: config.min_leaf,
        seed: config.seed,
        classes,
    })
}

fn check_rows(x: &[Vec<f64>], n_labels: usize) -> Result<(), ForestError> {
    if x.is_empty() {
        return Err(ForestError::EmptyInput);
    }
    if x.len() != n_labels {
        return Err(ForestError::LengthMismatch {
            records: x.len(),
            labels: n_labels,
        });
    }
    let n_features = x[0].len();
    for row in x {
        if row.len() != n_features {
            return Err(ForestError::DimensionMismatch {
                expected: n_features,
                got: row.len(),
            });
        }
    }
    Ok(())
}

struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    n_features: usize,
    max_features: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<'a> TreeBuilder<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [usize], n_classes: usize, config: &ForestConfig) -> Self {
        TreeBuilder {
            x,
            y,
            n_classes,
            n_features: x[0].len(),
            max_features: config.resolved_max_features(x[0].len()),
            max_depth: config.max_depth,
            min_leaf: config.min_leaf,
        }
    }

    fn build<R: Rng>(&self, indices: Vec<u32>, depth: usize, rng: &mut R) -> TreeNode {
        let counts = self.class_counts(&indices);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || indices.len() < 2 * self.min_leaf {
            return self.leaf(counts);
        }
        let candidates = self.candidate_features(rng);
        let Some(best) = self.best_split(&indices, &candidates) else {
            return self.leaf(counts);
        };
        let (left_idx, right_idx): (Vec<u32>, Vec<u32>) = indices
            .into_iter()
            .partition(|&i| self.x[i as usize][best.feature] <= best.threshold);
        let left = self.build(left_idx, depth + 1, rng);
        let right = self.build(right_idx, depth + 1, rng);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn leaf(&self, counts: Vec<u64>) -> TreeNode {
        TreeNode::Leaf {
            counts: counts
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c > 0)
                .map(|(class, c)| (class as u16, c))
                .collect(),
        }
    }

    fn class_counts(&self, indices: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &i in indices {
            counts[self.y[i as usize]] += 1;
        }
        counts
    }

    /// Draws `max_features` distinct features, sorted so that equal-gain
    /// ties resolve to the lowest feature index.
    fn candidate_features<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        if self.max_features >= self.n_features {
            return (0..self.n_features).collect();
        }
        let mut picked: Vec<usize> =
            rand::seq::index::sample(rng, self.n_features, self.max_features).into_vec();
        picked.sort_unstable();
        picked
    }

    fn best_split(&self, indices: &[u32], candidates: &[usize]) -> Option<BestSplit> {
        let n = indices.len() as f64;
        let mut best: Option<BestSplit> = None;
        let mut column: Vec<(f64, usize)> = Vec::with_capacity(indices.len());
        for &feature in candidates {
            column.clear();
            column.extend(
                indices
                    .iter()
                    .map(|&i| (self.x[i as usize][feature], self.y[i as usize])),
            );
            column.sort_by(|a, b| a.0.total_cmp(&b.0));

            let total = {
                let mut t = vec![0u64; self.n_classes];
                for &(_, c) in &column {
                    t[c] += 1;
                }
                t
            };
            let total_sq: f64 = total.iter().map(|&c| (c * c) as f64).sum();
            let mut left = vec![0u64; self.n_classes];
            let mut left_sq = 0.0;
            let mut right_sq = total_sq;
            for k in 1..column.len() {
                let class = column[k - 1].1;
                let c = left[class];
                left_sq += (2 * c + 1) as f64;
                right_sq -= (2 * (total[class] - c) - 1) as f64;
                left[class] += 1;
                let (a, b) = (column[k - 1].0, column[k].0);
                if a == b {
                    continue;
                }
                // Samples with value <= threshold route left; a threshold that
                // rounds up to b would misroute the b-valued samples, so skip.
                let threshold = a / 2.0 + b / 2.0;
                if !(a <= threshold && threshold < b) {
                    continue;
                }
                if k < self.min_leaf || column.len() - k < self.min_leaf {
                    continue;
                }
                let n_left = k as f64;
                let n_right = (column.len() - k) as f64;
                // Weighted Gini up to a constant: lower is better.
                let impurity = n - left_sq / n_left - right_sq / n_right;
                let improves = match &best {
                    None => true,
                    Some(b) => {
                        impurity < b.impurity
                            || (impurity == b.impurity
                                && (feature, threshold) < (b.feature, b.threshold))
                    }
                };
                if improves {
                    best = Some(BestSplit {
                        feature,
                        threshold,
                        impurity,
                    });
                }
            }
        }
        best
    }
}
