//! Per-class accuracy (recall) and macro F1.

use crate::corpus::Label;

#[derive(Clone, Debug, PartialEq)]
pub struct ClassReport {
    pub label: Label,
    pub support: usize,
    /// Recall of this class: correct-in-class over total-in-class.
    /// `None` when the class is absent from the gold labels.
    pub accuracy: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassificationMetrics {
    pub classes: Vec<ClassReport>,
    /// Unweighted mean of per-class F1 over classes present in the gold
    /// labels.
    pub macro_f1: f64,
    pub warnings: Vec<String>,
}

impl ClassificationMetrics {
    pub fn accuracy_of(&self, label: Label) -> Option<f64> {
        self.classes
            .iter()
            .find(|c| c.label == label)
            .and_then(|c| c.accuracy)
    }
}

/// Compute metrics from `(gold, predicted)` pairs.
pub fn classification_metrics(pairs: &[(Label, Label)]) -> ClassificationMetrics {
    let mut classes = Vec::new();
    let mut warnings = Vec::new();
    let mut f1_sum = 0.0;
    let mut f1_count = 0;
    for label in [Label::True, Label::False] {
        let support = pairs.iter().filter(|(g, _)| *g == label).count();
        let tp = pairs
            .iter()
            .filter(|(g, p)| *g == label && *p == label)
            .count();
        let fp = pairs
            .iter()
            .filter(|(g, p)| *g != label && *p == label)
            .count();
        if support == 0 {
            warnings.push(format!(
                "class {label} absent from gold labels; excluded from macro F1"
            ));
            classes.push(ClassReport {
                label,
                support,
                accuracy: None,
                f1: None,
            });
            continue;
        }
        let recall = tp as f64 / support as f64;
        let precision = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        f1_sum += f1;
        f1_count += 1;
        classes.push(ClassReport {
            label,
            support,
            accuracy: Some(recall),
            f1: Some(f1),
        });
    }
    ClassificationMetrics {
        classes,
        macro_f1: if f1_count == 0 {
            0.0
        } else {
            f1_sum / f1_count as f64
        },
        warnings,
    }
}
