//! Local outlier factor as a novelty detector.
//!
//! The model memorises its (scaled) training points and precomputes each
//! point's k-distance and local reachability density with exact Euclidean
//! k-NN; distance ties break toward the lower training index. Scoring a
//! query compares its reachability density against its neighbours', giving
//! values near 1 inside uniform regions and larger values for outliers.

use super::OccConfig;

/// Guard against division by zero for zero reachability sums, e.g. when a
/// point coincides with k duplicates.
const DENSITY_EPS: f64 = 1e-10;

/// A fitted LOF detector.
#[derive(Debug, Clone, PartialEq)]
pub struct LofModel {
    pub(crate) points: Vec<Vec<f64>>,
    pub(crate) k: usize,
    pub(crate) kdist: Vec<f64>,
    pub(crate) lrd: Vec<f64>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The k nearest training points to `x` as `(distance, index)`, ties broken
/// by index. `skip` excludes one training index (the point itself during
/// fitting).
fn k_nearest(points: &[Vec<f64>], x: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
    let mut distances: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != skip)
        .map(|(i, p)| (euclidean(x, p), i))
        .collect();
    distances.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    distances.truncate(k);
    distances
}

impl LofModel {
    /// Fits LOF state over `rows` with `k` neighbours; `k` must be below
    /// `rows.len()`, which [`super::OneClassModel::fit`] enforces.
    pub fn fit(rows: &[Vec<f64>], k: usize) -> LofModel {
        let neighbours: Vec<Vec<(f64, usize)>> = rows
            .iter()
            .enumerate()
            .map(|(i, x)| k_nearest(rows, x, k, Some(i)))
            .collect();
        let kdist: Vec<f64> = neighbours
            .iter()
            .map(|n| n.last().map(|&(d, _)| d).unwrap_or(0.0))
            .collect();
        let lrd: Vec<f64> = neighbours
            .iter()
            .map(|n| {
                let reach_sum: f64 = n.iter().map(|&(d, o)| d.max(kdist[o])).sum();
                1.0 / (reach_sum / n.len() as f64 + DENSITY_EPS)
            })
            .collect();
        LofModel {
            points: rows.to_vec(),
            k,
            kdist,
            lrd,
        }
    }

    pub fn n_features(&self) -> usize {
        self.points[0].len()
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    /// LOF score of a query point: mean neighbour density over own density.
    pub fn score(&self, x: &[f64]) -> f64 {
        let neighbours = k_nearest(&self.points, x, self.k, None);
        let reach_sum: f64 = neighbours
            .iter()
            .map(|&(d, o)| d.max(self.kdist[o]))
            .sum();
        let own_lrd = 1.0 / (reach_sum / neighbours.len() as f64 + DENSITY_EPS);
        let neighbour_lrd: f64 =
            neighbours.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / neighbours.len() as f64;
        neighbour_lrd / own_lrd
    }
}
