//! Confusion-matrix accounting and derived classification metrics.
//!
//! All metrics are reported in percent. Zero-denominator cases (a class never
//! predicted, never present, or with precision + recall = 0) report 0 rather
//! than NaN, matching common tabular reporting conventions.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("label lists have different lengths ({truth} vs {pred})")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("label lists are empty")]
    Empty,
    #[error("label {0:?} is not in the fixed class list")]
    UnknownClass(String),
}

/// Square count matrix indexed `(true class, predicted class)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn count(&self, true_class: usize, pred_class: usize) -> u64 {
        self.counts[true_class * self.classes.len() + pred_class]
    }

    /// Total number of scored instances.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Instances whose true class is `class`.
    pub fn support(&self, class: usize) -> u64 {
        let n = self.classes.len();
        self.counts[class * n..(class + 1) * n].iter().sum()
    }
}

/// Tallies a confusion matrix over the sorted union of observed labels.
pub fn confusion<S: AsRef<str>>(
    y_true: &[S],
    y_pred: &[S],
) -> Result<ConfusionMatrix, MetricsError> {
    let classes: BTreeSet<&str> = y_true
        .iter()
        .chain(y_pred.iter())
        .map(|s| s.as_ref())
        .collect();
    let classes: Vec<String> = classes.into_iter().map(|s| s.to_string()).collect();
    confusion_with_classes(&classes, y_true, y_pred)
}

/// Tallies a confusion matrix over a fixed, ordered class list.
///
/// Labels outside the list are an error; classes without observations simply
/// stay at zero, which keeps reports from different folds shape-compatible.
pub fn confusion_with_classes<S: AsRef<str>>(
    classes: &[String],
    y_true: &[S],
    y_pred: &[S],
) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let index = |label: &str| -> Result<usize, MetricsError> {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| MetricsError::UnknownClass(label.to_string()))
    };
    let n = classes.len();
    let mut counts = vec![0u64; n * n];
    for (t, p) in y_true.iter().zip(y_pred) {
        counts[index(t.as_ref())? * n + index(p.as_ref())?] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Precision, recall, and F1 for one class, in percent, with its support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: f64,
}

/// Unweighted or support-weighted mean of per-class metrics, in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Full per-class report with accuracy and both averaging conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub accuracy: f64,
    pub classes: Vec<String>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: AverageMetrics,
    pub weighted_avg: AverageMetrics,
}

/// Derives the percent-scale report from a confusion matrix.
pub fn report(cm: &ConfusionMatrix) -> ClassReport {
    let n = cm.classes().len();
    let total = cm.total() as f64;
    let mut per_class = Vec::with_capacity(n);
    let mut trace = 0u64;
    for c in 0..n {
        let tp = cm.count(c, c);
        trace += tp;
        let fn_: u64 = (0..n).filter(|&p| p != c).map(|p| cm.count(c, p)).sum();
        let fp: u64 = (0..n).filter(|&t| t != c).map(|t| cm.count(t, c)).sum();
        let precision = ratio_percent(tp, tp + fp);
        let recall = ratio_percent(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            support: (tp + fn_) as f64,
        });
    }
    let macro_avg = AverageMetrics {
        precision: mean(per_class.iter().map(|m| m.precision)),
        recall: mean(per_class.iter().map(|m| m.recall)),
        f1: mean(per_class.iter().map(|m| m.f1)),
    };
    let weight = |f: fn(&ClassMetrics) -> f64| -> f64 {
        if total == 0.0 {
            0.0
        } else {
            per_class.iter().map(|m| f(m) * m.support).sum::<f64>() / total
        }
    };
    let weighted_avg = AverageMetrics {
        precision: weight(|m| m.precision),
        recall: weight(|m| m.recall),
        f1: weight(|m| m.f1),
    };
    ClassReport {
        accuracy: if total == 0.0 {
            0.0
        } else {
            trace as f64 / total * 100.0
        },
        classes: cm.classes().to_vec(),
        per_class,
        macro_avg,
        weighted_avg,
    }
}

fn ratio_percent(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64 * 100.0
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Element-wise mean of shape-identical reports, e.g. across CV folds.
///
/// Supports are averaged alongside the metrics, so the result reads as a
/// per-fold expectation.
pub fn average_reports(reports: &[ClassReport]) -> Option<ClassReport> {
    let first = reports.first()?;
    if reports.iter().any(|r| r.classes != first.classes) {
        return None;
    }
    let k = reports.len() as f64;
    let n = first.classes.len();
    let mut per_class = Vec::with_capacity(n);
    for c in 0..n {
        per_class.push(ClassMetrics {
            precision: reports.iter().map(|r| r.per_class[c].precision).sum::<f64>() / k,
            recall: reports.iter().map(|r| r.per_class[c].recall).sum::<f64>() / k,
            f1: reports.iter().map(|r| r.per_class[c].f1).sum::<f64>() / k,
            support: reports.iter().map(|r| r.per_class[c].support).sum::<f64>() / k,
        });
    }
    let avg = |f: fn(&AverageMetrics) -> f64, pick: fn(&ClassReport) -> &AverageMetrics| -> f64 {
        reports.iter().map(|r| f(pick(r))).sum::<f64>() / k
    };
    Some(ClassReport {
        accuracy: reports.iter().map(|r| r.accuracy).sum::<f64>() / k,
        classes: first.classes.clone(),
        per_class,
        macro_avg: AverageMetrics {
            precision: avg(|a| a.precision, |r| &r.macro_avg),
            recall: avg(|a| a.recall, |r| &r.macro_avg),
            f1: avg(|a| a.f1, |r| &r.macro_avg),
        },
        weighted_avg: AverageMetrics {
            precision: avg(|a| a.precision, |r| &r.weighted_avg),
            recall: avg(|a| a.recall, |r| &r.weighted_avg),
            f1: avg(|a| a.f1, |r| &r.weighted_avg),
        },
    })
}

impl ClassReport {
    /// Renders the report as an aligned text table with two-decimal percents.
    pub fn to_text(&self) -> String {
        let name_width = self
            .classes
            .iter()
            .map(|c| c.len())
            .chain(["weighted avg".len()].into_iter())
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:name_width$}  {:>9}  {:>9}  {:>9}  {:>9}",
            "class", "precision", "recall", "f1", "support"
        );
        for (class, m) in self.classes.iter().zip(&self.per_class) {
            let _ = writeln!(
                out,
                "{class:name_width$}  {:>9.2}  {:>9.2}  {:>9.2}  {:>9.1}",
                m.precision, m.recall, m.f1, m.support
            );
        }
        let _ = writeln!(
            out,
            "{:name_width$}  {:>9.2}  {:>9.2}  {:>9.2}",
            "macro avg", self.macro_avg.precision, self.macro_avg.recall, self.macro_avg.f1
        );
        let _ = writeln!(
            out,
            "{:name_width$}  {:>9.2}  {:>9.2}  {:>9.2}",
            "weighted avg",
            self.weighted_avg.precision,
            self.weighted_avg.recall,
            self.weighted_avg.f1
        );
        let _ = writeln!(out, "accuracy: {:.2}", self.accuracy);
        out
    }

    /// Serialises the report as JSON with full double precision.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }
}
