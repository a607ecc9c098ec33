//! Flow-record ingestion and preprocessing.
//!
//! A [`Dataset`] couples parsed flow records with the [`Taxonomy`] that gave
//! them their labels and the ordered feature-column names from the schema.
//! The submodules cover the full path from a raw CSV to model-ready data:
//!
//! * [`schema`] — sidecar file naming the label column and feature columns,
//! * [`taxonomy`] — subtype-to-category map with a built-in default,
//! * [`load`] — CSV reading/writing against a schema,
//! * [`scaler`] — min-max normalisation into `[0, 1]`,
//! * [`folds`] — seeded stratified k-fold assignment,
//! * [`episode`] — balanced 128+128 attack-vs-benign draws.

mod episode;
mod folds;
mod load;
mod scaler;
mod schema;
mod taxonomy;

pub use episode::{sample_episode, Episode, EPISODE_CLASS_SIZE};
pub use folds::{stratified_folds, StratifiedFolds};
pub use load::{load_csv, write_csv};
pub use scaler::MinMaxScaler;
pub use schema::CsvSchema;
pub use taxonomy::{Category, SubtypeId, Taxonomy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced while ingesting or preprocessing flow data.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema parse error in {path} line {line}: {reason}")]
    SchemaParse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("taxonomy error: {0}")]
    BadTaxonomy(String),
    #[error("column {0:?} not found in CSV header")]
    MissingColumn(String),
    #[error("row {row}, column {column:?}: feature value {value:?} is not a finite number")]
    NonNumericFeature {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}: label {label:?} is not in the taxonomy")]
    UnknownLabel { row: usize, label: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature vector has length {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("class {class:?} has too few records ({have}) for {need} folds")]
    TooFewRecords {
        class: String,
        have: usize,
        need: usize,
    },
    #[error("class {class:?} has {have} records, episode needs {need}")]
    InsufficientInstances {
        class: String,
        have: usize,
        need: usize,
    },
}

impl DatasetError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Binary traffic label: normal traffic or any attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinaryLabel {
    Benign,
    Attack,
}

impl BinaryLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            BinaryLabel::Benign => "Benign",
            BinaryLabel::Attack => "Attack",
        }
    }
}

/// Full label of a flow record at all three granularities.
///
/// The three fields are mutually consistent: `binary` is [`BinaryLabel::Benign`]
/// exactly when `category` is [`Category::Benign`], which in turn happens
/// exactly when the subtype is the benign subtype. The [`Taxonomy`] that
/// produced the triple upholds this.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelTriple {
    pub binary: BinaryLabel,
    pub category: Category,
    pub subtype: SubtypeId,
}

/// One network flow: a fixed-length feature vector plus its label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub features: Vec<f64>,
    pub label: LabelTriple,
}

/// A labelled flow dataset together with its taxonomy and feature names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub taxonomy: Taxonomy,
    pub feature_names: Vec<String>,
    pub records: Vec<FlowRecord>,
}

impl Dataset {
    /// Number of features per record.
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Subtype name of a record, resolved through the taxonomy.
    pub fn subtype_name(&self, record: &FlowRecord) -> &str {
        self.taxonomy.subtype_name(record.label.subtype)
    }

    /// Per-subtype record counts in taxonomy order, including zero counts.
    pub fn class_counts(&self) -> Vec<(String, usize)> {
        let mut counts = vec![0usize; self.taxonomy.n_subtypes()];
        for r in &self.records {
            counts[r.label.subtype.0 as usize] += 1;
        }
        self.taxonomy
            .subtype_names()
            .iter()
            .cloned()
            .zip(counts)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_counts_cover_every_subtype() {
        let taxonomy = Taxonomy::default_iomt();
        let ddos_syn = taxonomy.lookup("DDoS SYN").unwrap();
        let dataset = Dataset {
            taxonomy: taxonomy.clone(),
            feature_names: vec!["f0".into()],
            records: vec![FlowRecord {
                features: vec![1.0],
                label: ddos_syn,
            }],
        };
        let counts = dataset.class_counts();
        assert_eq!(counts.len(), taxonomy.n_subtypes());
        assert_eq!(counts.iter().map(|(_, c)| c).sum::<usize>(), 1);
        let (name, count) = counts
            .iter()
            .find(|(name, _)| name == "DDoS SYN")
            .unwrap();
        assert_eq!(name, "DDoS SYN");
        assert_eq!(*count, 1);
    }
}
