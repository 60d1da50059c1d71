use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Class never occurs in labels nor predictions; its F1 is 0 by convention.
    #[serde(default)]
    pub absent: bool,
}

/// Macro-averaged classification report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub f1: f64,
    #[serde(rename = "top1")]
    pub top1_accuracy: f64,
    pub per_class: Vec<ClassScore>,
    #[serde(rename = "samples")]
    pub sample_count: usize,
}

impl EvalReport {
    /// The minimisation objective derived from F1.
    pub fn error(&self) -> f64 {
        1.0 - self.f1
    }
}

/// Baseline validation F1 that compressed candidates must reach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub tau: f64,
}

impl Threshold {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidConfig(format!(
                "threshold {tau} outside [0, 1]"
            )));
        }
        Ok(Self { tau })
    }

    pub fn accepts(&self, f1: f64) -> bool {
        f1 >= self.tau
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// One-vs-rest precision, recall and F1 per class, plus their unweighted mean.
pub fn macro_f1(predictions: &[u32], labels: &[u32], num_classes: usize) -> Result<EvalReport> {
    if predictions.is_empty() {
        return Err(Error::EmptyInput("predictions"));
    }
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: labels.len(),
            actual: predictions.len(),
        });
    }
    let mut tp = vec![0u64; num_classes];
    let mut predicted = vec![0u64; num_classes];
    let mut actual = vec![0u64; num_classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        let (p, l) = (p as usize, l as usize);
        if p >= num_classes || l >= num_classes {
            return Err(Error::InvalidDataset(format!(
                "class index {} >= num_classes {num_classes}",
                p.max(l)
            )));
        }
        predicted[p] += 1;
        actual[l] += 1;
        if p == l {
            tp[p] += 1;
        }
    }
    let per_class: Vec<ClassScore> = (0..num_classes)
        .map(|c| {
            let precision = ratio(tp[c], predicted[c]);
            let recall = ratio(tp[c], actual[c]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScore {
                precision,
                recall,
                f1,
                absent: predicted[c] == 0 && actual[c] == 0,
            }
        })
        .collect();
    let f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / num_classes as f64;
    let correct: u64 = tp.iter().sum();
    Ok(EvalReport {
        f1,
        top1_accuracy: correct as f64 / predictions.len() as f64,
        per_class,
        sample_count: predictions.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let r = macro_f1(&[0, 1, 2, 1], &[0, 1, 2, 1], 3).unwrap();
        assert_eq!(r.f1, 1.0);
        assert_eq!(r.top1_accuracy, 1.0);
    }

    #[test]
    fn hand_confusion_matrix() {
        let r = macro_f1(&[0, 1, 0, 1], &[0, 0, 1, 1], 2).unwrap();
        assert_eq!(r.per_class[0].f1, 0.5);
        assert_eq!(r.per_class[1].f1, 0.5);
        assert_eq!(r.f1, 0.5);
    }

    #[test]
    fn absent_class_scores_zero_and_is_flagged() {
        let r = macro_f1(&[0, 1], &[0, 1], 3).unwrap();
        assert!(r.per_class[2].absent);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert!(!r.per_class[0].absent);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(macro_f1(&[], &[], 2), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn report_json_keys() {
        let r = macro_f1(&[0], &[0], 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["f1", "top1", "per_class", "samples"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn threshold_bounds() {
        assert!(Threshold::new(1.2).is_err());
        let t = Threshold::new(0.95).unwrap();
        assert!(t.accepts(0.96));
        assert!(!t.accepts(0.94));
    }
}
