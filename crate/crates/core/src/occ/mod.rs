//! One-class anomaly detectors for the root and verify levels.
//!
//! Three detector families share one interface: a stochastic range-box
//! forest ([`usfad`]), an isolation forest ([`iforest`]), and the local
//! outlier factor ([`lof`]). All scores are oriented so that higher means
//! more anomalous. [`OneClassModel::fit`] holds out a calibration slice of
//! the (single-class) training data and sets the decision threshold at an
//! empirical quantile of its scores, so roughly `1 - quantile` of in-class
//! traffic trips the detector.

mod iforest;
mod lof;
mod usfad;

pub use iforest::IsolationForestModel;
pub use lof::LofModel;
pub use usfad::UsfadForest;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum OccError {
    #[error("no training records")]
    EmptyInput,
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("feature vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no calibration scores")]
    EmptyScores,
    #[error("quantile {0} outside the open interval (0, 1)")]
    BadQuantile(f64),
}

/// Detector family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DetectorKind {
    UsfAd,
    IsolationForest,
    Lof,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 3] = [
        DetectorKind::UsfAd,
        DetectorKind::IsolationForest,
        DetectorKind::Lof,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::UsfAd => "usfad",
            DetectorKind::IsolationForest => "iforest",
            DetectorKind::Lof => "lof",
        }
    }

    pub fn parse(s: &str) -> Option<DetectorKind> {
        DetectorKind::ALL.iter().copied().find(|k| k.as_str() == s)
    }
}

/// Binary decision of a calibrated detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    InClass,
    Anomalous,
}

/// Hyperparameters shared by the detector families.
///
/// `calibration_fraction` of the training rows are held out to place the
/// threshold; the rest fit the detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccConfig {
    pub n_trees: usize,
    pub subsample: usize,
    pub lof_k: usize,
    pub quantile: f64,
    pub calibration_fraction: f64,
    pub seed: u64,
}

impl Default for OccConfig {
    fn default() -> Self {
        OccConfig {
            n_trees: 100,
            subsample: 256,
            lof_k: 20,
            quantile: 0.99,
            calibration_fraction: 0.2,
            seed: 0,
        }
    }
}

impl OccConfig {
    fn validate(&self) -> Result<(), OccError> {
        if self.n_trees == 0 {
            return Err(OccError::BadConfig("n_trees must be at least 1".into()));
        }
        if self.subsample < 2 {
            return Err(OccError::BadConfig("subsample must be at least 2".into()));
        }
        if self.lof_k == 0 {
            return Err(OccError::BadConfig("lof_k must be at least 1".into()));
        }
        if !(self.quantile > 0.0 && self.quantile < 1.0) {
            return Err(OccError::BadQuantile(self.quantile));
        }
        if !(self.calibration_fraction > 0.0 && self.calibration_fraction < 1.0) {
            return Err(OccError::BadConfig(format!(
                "calibration_fraction {} outside (0, 1)",
                self.calibration_fraction
            )));
        }
        Ok(())
    }
}

enum DetectorState {
    UsfAd(UsfadForest),
    IsolationForest(IsolationForestModel),
    Lof(LofModel),
}

/// A fitted, threshold-calibrated one-class detector.
pub struct OneClassModel {
    kind: DetectorKind,
    state: DetectorState,
    threshold: f64,
}

impl OneClassModel {
    /// Fits a detector of `kind` on single-class rows and calibrates its
    /// threshold on a held-out slice.
    pub fn fit(kind: DetectorKind, rows: &[Vec<f64>], config: &OccConfig) -> Result<Self, OccError> {
        config.validate()?;
        if rows.is_empty() {
            return Err(OccError::EmptyInput);
        }
        let n_features = rows[0].len();
        for row in rows {
            if row.len() != n_features {
                return Err(OccError::DimensionMismatch {
                    expected: n_features,
                    got: row.len(),
                });
            }
        }
        let (fit_rows, cal_rows) = split_calibration(rows, config);
        if fit_rows.is_empty() {
            return Err(OccError::BadConfig(format!(
                "{} rows leave no training data after calibration holdout",
                rows.len()
            )));
        }
        let state = match kind {
            DetectorKind::UsfAd => DetectorState::UsfAd(UsfadForest::fit(&fit_rows, config)),
            DetectorKind::IsolationForest => {
                DetectorState::IsolationForest(IsolationForestModel::fit(&fit_rows, config))
            }
            DetectorKind::Lof => {
                if config.lof_k >= fit_rows.len() {
                    return Err(OccError::BadConfig(format!(
                        "lof_k {} must be below the {} training rows",
                        config.lof_k,
                        fit_rows.len()
                    )));
                }
                DetectorState::Lof(LofModel::fit(&fit_rows, config.lof_k))
            }
        };
        let mut model = OneClassModel {
            kind,
            state,
            threshold: 0.0,
        };
        let scores: Vec<f64> = cal_rows
            .iter()
            .map(|r| model.score(r))
            .collect::<Result<_, _>>()?;
        model.threshold = calibrate(&scores, config.quantile)?;
        Ok(model)
    }

    /// Rebuilds a model from its parts, e.g. after deserialisation.
    pub(crate) fn from_parts(kind: DetectorKind, state: DetectorState, threshold: f64) -> Self {
        OneClassModel {
            kind,
            state,
            threshold,
        }
    }

    pub(crate) fn state(&self) -> &DetectorState {
        &self.state
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn n_features(&self) -> usize {
        match &self.state {
            DetectorState::UsfAd(m) => m.n_features(),
            DetectorState::IsolationForest(m) => m.n_features(),
            DetectorState::Lof(m) => m.n_features(),
        }
    }

    /// Anomaly score of `x`; higher is more anomalous.
    pub fn score(&self, x: &[f64]) -> Result<f64, OccError> {
        if x.len() != self.n_features() {
            return Err(OccError::DimensionMismatch {
                expected: self.n_features(),
                got: x.len(),
            });
        }
        Ok(match &self.state {
            DetectorState::UsfAd(m) => m.score(x),
            DetectorState::IsolationForest(m) => m.score(x),
            DetectorState::Lof(m) => m.score(x),
        })
    }

    /// Thresholded decision: anomalous exactly when `score(x) > threshold`.
    pub fn predict(&self, x: &[f64]) -> Result<Decision, OccError> {
        Ok(if self.score(x)? > self.threshold {
            Decision::Anomalous
        } else {
            Decision::InClass
        })
    }
}

/// Draws a split point strictly inside `(lo, hi)`, or gives up after a few
/// tries when the interval is too narrow to hold a representable point.
fn draw_split<R: rand::Rng>(lo: f64, hi: f64, rng: &mut R) -> Option<f64> {
    for _ in 0..8 {
        let t = lo + rng.gen::<f64>() * (hi - lo);
        if t > lo && t < hi {
            return Some(t);
        }
    }
    None
}

/// Splits rows into (fit, calibration) with a seeded shuffle.
fn split_calibration(rows: &[Vec<f64>], config: &OccConfig) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    use rand::seq::SliceRandom;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.shuffle(&mut stream_rng(config.seed, 0x5EED));
    let cal_n = ((rows.len() as f64 * config.calibration_fraction).round() as usize)
        .clamp(1, rows.len().saturating_sub(1).max(1));
    let (cal, fit) = order.split_at(cal_n);
    (
        fit.iter().map(|&i| rows[i].clone()).collect(),
        cal.iter().map(|&i| rows[i].clone()).collect(),
    )
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn calibrate(scores: &[f64], quantile: f64) -> Result<f64, OccError> {
    if scores.is_empty() {
        return Err(OccError::EmptyScores);
    }
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(OccError::BadQuantile(quantile));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let position = quantile * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let fraction = position - lower as f64;
    if lower + 1 >= sorted.len() {
        return Ok(sorted[sorted.len() - 1]);
    }
    Ok(sorted[lower] + fraction * (sorted[lower + 1] - sorted[lower]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn gaussian_cloud(n: usize, dims: usize, center: f64, sigma: f64, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream_rng(seed, 0);
        let normal = Normal::new(center, sigma).unwrap();
        (0..n)
            .map(|_| (0..dims).map(|_| normal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let scores: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        let t = calibrate(&scores, 0.99).unwrap();
        assert!((t - 99.01).abs() < 1e-9, "threshold {t}");
        let median = calibrate(&scores, 0.5).unwrap();
        assert!((median - 50.5).abs() < 1e-9);
    }

    #[test]
    fn closed_quantiles_rejected() {
        let scores = vec![1.0, 2.0];
        assert!(matches!(
            calibrate(&scores, 1.0),
            Err(OccError::BadQuantile(_))
        ));
        assert!(matches!(
            calibrate(&scores, 0.0),
            Err(OccError::BadQuantile(_))
        ));
        assert!(matches!(calibrate(&[], 0.5), Err(OccError::EmptyScores)));
    }

    #[test]
    fn about_one_percent_of_in_class_flags_anomalous() {
        let rows = gaussian_cloud(4000, 4, 0.5, 0.1, 10);
        let config = OccConfig {
            seed: 3,
            ..OccConfig::default()
        };
        let model = OneClassModel::fit(DetectorKind::UsfAd, &rows, &config).unwrap();
        let fresh = gaussian_cloud(2000, 4, 0.5, 0.1, 11);
        let flagged = fresh
            .iter()
            .filter(|r| model.predict(r).unwrap() == Decision::Anomalous)
            .count();
        let rate = flagged as f64 / fresh.len() as f64;
        assert!(rate < 0.05, "false alarm rate {rate}");
    }

    #[test]
    fn far_outlier_is_anomalous_for_every_kind() {
        let rows = gaussian_cloud(600, 3, 0.0, 0.05, 20);
        for kind in DetectorKind::ALL {
            let config = OccConfig {
                seed: 4,
                ..OccConfig::default()
            };
            let model = OneClassModel::fit(kind, &rows, &config).unwrap();
            let verdict = model.predict(&[5.0, 5.0, 5.0]).unwrap();
            assert_eq!(verdict, Decision::Anomalous, "kind {kind:?}");
            let inlier = model.predict(&rows[0]).unwrap();
            assert_eq!(inlier, Decision::InClass, "kind {kind:?}");
        }
    }

    #[test]
    fn score_against_threshold_defines_predict() {
        let rows = gaussian_cloud(300, 2, 0.0, 0.2, 30);
        let model = OneClassModel::fit(
            DetectorKind::IsolationForest,
            &rows,
            &OccConfig::default(),
        )
        .unwrap();
        let mut rng = stream_rng(31, 0);
        for _ in 0..200 {
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let expected = if model.score(&x).unwrap() > model.threshold() {
                Decision::Anomalous
            } else {
                Decision::InClass
            };
            assert_eq!(model.predict(&x).unwrap(), expected);
        }
    }

    #[test]
    fn fixed_seed_reproduces_scores() {
        let rows = gaussian_cloud(500, 3, 1.0, 0.3, 40);
        let config = OccConfig {
            seed: 9,
            ..OccConfig::default()
        };
        let a = OneClassModel::fit(DetectorKind::UsfAd, &rows, &config).unwrap();
        let b = OneClassModel::fit(DetectorKind::UsfAd, &rows, &config).unwrap();
        assert_eq!(a.threshold(), b.threshold());
        let probe = vec![0.9, 1.1, 1.0];
        assert_eq!(a.score(&probe).unwrap(), b.score(&probe).unwrap());
    }

    #[test]
    fn lof_k_must_fit_training_slice() {
        let rows = gaussian_cloud(10, 2, 0.0, 0.1, 50);
        let config = OccConfig {
            lof_k: 20,
            ..OccConfig::default()
        };
        assert!(matches!(
            OneClassModel::fit(DetectorKind::Lof, &rows, &config),
            Err(OccError::BadConfig(_))
        ));
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            OneClassModel::fit(DetectorKind::UsfAd, &[], &OccConfig::default()),
            Err(OccError::EmptyInput)
        ));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let rows = gaussian_cloud(100, 3, 0.0, 0.1, 60);
        let model = OneClassModel::fit(DetectorKind::UsfAd, &rows, &OccConfig::default()).unwrap();
        assert!(matches!(
            model.score(&[0.0]),
            Err(OccError::DimensionMismatch {
                expected: 3,
                got: 1
            })
        ));
    }
}
