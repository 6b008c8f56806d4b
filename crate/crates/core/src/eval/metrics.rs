use serde::{Deserialize, Serialize};

use crate::eval::confusion::ConfusionMatrix;

/// Precision, recall and F1 for one class. A metric whose denominator is zero
/// is reported as 0 and flagged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub undefined_precision: bool,
    pub undefined_recall: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

pub fn class_metrics(m: &ConfusionMatrix, class: usize) -> ClassMetrics {
    let tp = m.get(class, class);
    let (precision, undefined_precision) = ratio(tp, m.predicted(class));
    let (recall, undefined_recall) = ratio(tp, m.support(class));
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    ClassMetrics {
        precision,
        recall,
        f1,
        support: m.support(class),
        undefined_precision,
        undefined_recall,
    }
}

/// Accuracy plus macro (unweighted class mean) and support-weighted F1.
pub fn metrics(m: &ConfusionMatrix) -> Metrics {
    let per_class: Vec<ClassMetrics> = (0..m.classes()).map(|c| class_metrics(m, c)).collect();
    let total = m.total();
    let accuracy = ratio(m.correct(), total).0;
    let macro_f1 = if per_class.is_empty() {
        0.0
    } else {
        per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
    };
    let weighted_f1 = if total == 0 {
        0.0
    } else {
        per_class.iter().map(|c| c.f1 * c.support as f64).sum::<f64>() / total as f64
    };
    Metrics {
        accuracy,
        macro_f1,
        weighted_f1,
        per_class,
        total,
    }
}
