//! Sidecar schema file: which CSV columns are the label and the features.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DatasetError;

/// Column mapping for a flow CSV.
///
/// The sidecar is a plain `key = value` text file with two keys: `label`
/// (exactly once) and `feature` (once per feature column, order preserved).
/// Blank lines and `#` comments are skipped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub label_column: String,
    pub feature_columns: Vec<String>,
}

impl CsvSchema {
    pub fn new(label_column: impl Into<String>, feature_columns: Vec<String>) -> CsvSchema {
        CsvSchema {
            label_column: label_column.into(),
            feature_columns,
        }
    }

    /// Number of feature columns.
    pub fn n_features(&self) -> usize {
        self.feature_columns.len()
    }

    pub fn from_file(path: &Path) -> Result<CsvSchema, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        let parse_err = |line: usize, reason: String| DatasetError::SchemaParse {
            path: path.display().to_string(),
            line,
            reason,
        };
        let mut label: Option<String> = None;
        let mut features: Vec<String> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(lineno + 1, "expected `key = value`".into()))?;
            let value = value.trim();
            if value.is_empty() {
                return Err(parse_err(lineno + 1, "empty column name".into()));
            }
            match key.trim() {
                "label" => {
                    if label.replace(value.to_string()).is_some() {
                        return Err(parse_err(lineno + 1, "duplicate `label` key".into()));
                    }
                }
                "feature" => {
                    if features.iter().any(|f| f == value) {
                        return Err(parse_err(
                            lineno + 1,
                            format!("duplicate feature column {value:?}"),
                        ));
                    }
                    features.push(value.to_string());
                }
                other => {
                    return Err(parse_err(lineno + 1, format!("unknown key {other:?}")));
                }
            }
        }
        let label = label.ok_or_else(|| parse_err(0, "missing `label` key".into()))?;
        if features.is_empty() {
            return Err(parse_err(0, "no `feature` keys".into()));
        }
        if features.iter().any(|f| *f == label) {
            return Err(parse_err(0, "label column also listed as feature".into()));
        }
        Ok(CsvSchema {
            label_column: label,
            feature_columns: features,
        })
    }

    pub fn write_file(&self, path: &Path) -> Result<(), DatasetError> {
        let mut out = String::new();
        out.push_str("label = ");
        out.push_str(&self.label_column);
        out.push('\n');
        for f in &self.feature_columns {
            out.push_str("feature = ");
            out.push_str(f);
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| DatasetError::io(path, e))
    }
}
