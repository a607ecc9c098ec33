//! Min-max feature scaling into `[0, 1]`.

use serde::{Deserialize, Serialize};

use super::{DatasetError, FlowRecord};

/// Per-feature min-max normaliser: `(x - min) / (max - min)`.
///
/// A degenerate feature (`max == min`) transforms to `0` so downstream
/// detectors always see finite values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    mins: Vec<f64>,
    maxs: Vec<f64>,
}

impl MinMaxScaler {
    /// Fits column-wise extrema over the given records.
    pub fn fit(records: &[FlowRecord]) -> Result<MinMaxScaler, DatasetError> {
        MinMaxScaler::fit_rows(records.iter().map(|r| r.features.as_slice()))
    }

    /// Fits from raw feature rows; rows must share one length.
    pub fn fit_rows<'a>(
        rows: impl IntoIterator<Item = &'a [f64]>,
    ) -> Result<MinMaxScaler, DatasetError> {
        let mut rows = rows.into_iter();
        let first = rows.next().ok_or(DatasetError::EmptyDataset)?;
        let mut mins = first.to_vec();
        let mut maxs = first.to_vec();
        for row in rows {
            if row.len() != mins.len() {
                return Err(DatasetError::DimensionMismatch {
                    expected: mins.len(),
                    got: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if v < mins[j] {
                    mins[j] = v;
                }
                if v > maxs[j] {
                    maxs[j] = v;
                }
            }
        }
        Ok(MinMaxScaler { mins, maxs })
    }

    pub fn from_bounds(mins: Vec<f64>, maxs: Vec<f64>) -> MinMaxScaler {
        debug_assert_eq!(mins.len(), maxs.len());
        MinMaxScaler { mins, maxs }
    }

    pub fn n_features(&self) -> usize {
        self.mins.len()
    }

    pub fn mins(&self) -> &[f64] {
        &self.mins
    }

    pub fn maxs(&self) -> &[f64] {
        &self.maxs
    }

    /// Scales one feature vector.
    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>, DatasetError> {
        if x.len() != self.mins.len() {
            return Err(DatasetError::DimensionMismatch {
                expected: self.mins.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| {
                let range = self.maxs[j] - self.mins[j];
                if range == 0.0 {
                    0.0
                } else {
                    (v - self.mins[j]) / range
                }
            })
            .collect())
    }

    /// Scales every record's features, preserving order.
    pub fn transform_records(&self, records: &[FlowRecord]) -> Result<Vec<Vec<f64>>, DatasetError> {
        records
            .iter()
            .map(|r| self.transform(&r.features))
            .collect()
    }
}
