//! Confusion matrices and per-class precision / recall / F1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SCHEMA_VERSION;

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub rows: String,
    pub columns: String,
    /// Row-major `labels.len() x labels.len()` counts.
    pub counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(labels: &[&str]) -> Self {
        Self {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            rows: "actual".into(),
            columns: "predicted".into(),
            counts: vec![0; labels.len() * labels.len()],
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.n() + predicted]
    }

    pub fn add(&mut self, actual: usize, predicted: usize) {
        let n = self.n();
        self.counts[actual * n + predicted] += 1;
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if self.labels != other.labels {
            return Err(Error::invalid("cannot merge confusion matrices with different labels"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, actual: usize) -> u64 {
        (0..self.n()).map(|p| self.get(actual, p)).sum()
    }

    pub fn col_sum(&self, predicted: usize) -> u64 {
        (0..self.n()).map(|a| self.get(a, predicted)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n()).map(|i| self.get(i, i)).sum()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Unweighted mean of per-subject metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectMean {
    pub subjects: usize,
    pub accuracy: f64,
    pub per_class: Vec<ClassMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject: String,
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub schema_version: u32,
    pub task: String,
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassMetrics>,
    /// `trace(confusion) / total`.
    pub accuracy: f64,
    pub total: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject_mean: Option<SubjectMean>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subjects: Vec<SubjectReport>,
}

impl MetricsReport {
    pub fn from_confusion(task: &str, confusion: ConfusionMatrix) -> Self {
        let per_class = (0..confusion.n())
            .map(|i| {
                let precision = ratio(confusion.get(i, i), confusion.col_sum(i));
                let recall = ratio(confusion.get(i, i), confusion.row_sum(i));
                ClassMetrics {
                    label: confusion.labels[i].clone(),
                    precision,
                    recall,
                    f1: f1(precision, recall),
                    support: confusion.row_sum(i),
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            task: task.to_string(),
            accuracy: ratio(confusion.trace(), confusion.total()),
            total: confusion.total(),
            confusion,
            per_class,
            subject_mean: None,
            subjects: Vec::new(),
        }
    }

    /// Pools subject matrices into one report and attaches the per-subject
    /// breakdown and its unweighted mean.
    pub fn from_subjects(task: &str, subjects: Vec<SubjectReport>) -> Result<Self> {
        let first = subjects
            .first()
            .ok_or_else(|| Error::invalid("no subjects to aggregate"))?;
        let mut pooled = ConfusionMatrix::new(&[]);
        pooled.labels.clone_from(&first.report.confusion.labels);
        pooled.counts = vec![0; pooled.n() * pooled.n()];
        for s in &subjects {
            pooled.merge(&s.report.confusion)?;
        }
        let k = subjects.len() as f64;
        let per_class = (0..pooled.n())
            .map(|i| ClassMetrics {
                label: pooled.labels[i].clone(),
                precision: subjects.iter().map(|s| s.report.per_class[i].precision).sum::<f64>() / k,
                recall: subjects.iter().map(|s| s.report.per_class[i].recall).sum::<f64>() / k,
                f1: subjects.iter().map(|s| s.report.per_class[i].f1).sum::<f64>() / k,
                support: subjects.iter().map(|s| s.report.per_class[i].support).sum(),
            })
            .collect();
        let mean = SubjectMean {
            subjects: subjects.len(),
            accuracy: subjects.iter().map(|s| s.report.accuracy).sum::<f64>() / k,
            per_class,
        };
        let mut report = Self::from_confusion(task, pooled);
        report.subject_mean = Some(mean);
        report.subjects = subjects;
        Ok(report)
    }

    pub fn class(&self, label: &str) -> Option<&ClassMetrics> {
        self.per_class.iter().find(|c| c.label == label)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::format("metrics report", e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> ConfusionMatrix {
        let mut m = ConfusionMatrix::new(&["a", "b", "c"]);
        for (a, p, n) in [(0, 0, 5), (0, 1, 1), (1, 1, 3), (1, 2, 2), (2, 0, 1), (2, 2, 4)] {
            for _ in 0..n {
                m.add(a, p);
            }
        }
        m
    }

    #[test]
    fn metrics_follow_matrix() {
        let r = MetricsReport::from_confusion("t", matrix());
        assert_eq!(r.total, 16);
        assert!((r.accuracy - 12.0 / 16.0).abs() < 1e-15);
        let a = r.class("a").unwrap();
        assert!((a.precision - 5.0 / 6.0).abs() < 1e-15);
        assert!((a.recall - 5.0 / 6.0).abs() < 1e-15);
        let b = r.class("b").unwrap();
        assert!((b.precision - 3.0 / 4.0).abs() < 1e-15);
        assert!((b.recall - 3.0 / 5.0).abs() < 1e-15);
        assert!((b.f1 - 2.0 * 0.75 * 0.6 / 1.35).abs() < 1e-12);
        assert_eq!(b.support, 5);
    }

    #[test]
    fn empty_columns_give_zero_precision() {
        let mut m = ConfusionMatrix::new(&["x", "y"]);
        m.add(0, 0);
        m.add(1, 0);
        let r = MetricsReport::from_confusion("t", m);
        assert_eq!(r.class("y").unwrap().precision, 0.0);
        assert_eq!(r.class("y").unwrap().f1, 0.0);
    }

    #[test]
    fn subject_aggregation() {
        let s = |name: &str| SubjectReport {
            subject: name.into(),
            report: MetricsReport::from_confusion("t", matrix()),
        };
        let r = MetricsReport::from_subjects("t", vec![s("p1"), s("p2")]).unwrap();
        assert_eq!(r.total, 32);
        let mean = r.subject_mean.as_ref().unwrap();
        assert!((mean.accuracy - r.accuracy).abs() < 1e-15);
        assert!(MetricsReport::from_subjects("t", vec![]).is_err());
    }
}
