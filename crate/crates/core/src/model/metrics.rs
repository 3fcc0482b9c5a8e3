use serde::{Deserialize, Serialize};

use crate::label::Label;

use super::{Dataset, ForestModel};

/// Binary screening metrics with AD as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_pos: usize,
    pub false_pos: usize,
    pub false_neg: usize,
    pub true_neg: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_counts(true_pos: usize, false_pos: usize, false_neg: usize, true_neg: usize) -> Self {
        let precision = ratio(true_pos, true_pos + false_pos);
        let recall = ratio(true_pos, true_pos + false_neg);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            accuracy: ratio(true_pos + true_neg, true_pos + false_pos + false_neg + true_neg),
            precision,
            recall,
            f1,
            true_pos,
            false_pos,
            false_neg,
            true_neg,
        }
    }

    /// Scores any list of predictions, e.g. ones produced by an external model.
    pub fn from_predictions(truth: &[Label], predicted: &[Label]) -> Self {
        assert_eq!(truth.len(), predicted.len(), "truth and predictions differ in length");
        let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
        for (t, p) in truth.iter().zip(predicted) {
            match (t, p) {
                (Label::Ad, Label::Ad) => tp += 1,
                (Label::Hc, Label::Ad) => fp += 1,
                (Label::Ad, Label::Hc) => fn_ += 1,
                (Label::Hc, Label::Hc) => tn += 1,
            }
        }
        Self::from_counts(tp, fp, fn_, tn)
    }

    /// ACC, PRE, REC, F1 as percentages with one decimal.
    pub fn percent_row(&self) -> [String; 4] {
        [self.accuracy, self.precision, self.recall, self.f1].map(|v| format!("{:.1}", 100.0 * v))
    }
}

pub fn evaluate(model: &ForestModel, test: &Dataset) -> EvalReport {
    let predicted: Vec<Label> = test.x.iter().map(|row| model.predict(row).label).collect();
    EvalReport::from_predictions(&test.y, &predicted)
}
