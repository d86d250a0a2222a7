use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub brier: f64,
}

impl Metrics {
    pub const NAMES: [&'static str; 4] = ["precision", "recall", "f1", "brier"];

    pub fn as_array(&self) -> [f64; 4] {
        [self.precision, self.recall, self.f1, self.brier]
    }
}

/// Precision, recall and F1 of the successful class at `threshold`, and the
/// Brier score. Empty denominators give 0.
pub fn evaluate(y: &[bool], p: &[f64], threshold: f64) -> Metrics {
    let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
    let mut brier = 0.0;
    for (yi, pi) in y.iter().zip(p) {
        let hit = *pi >= threshold;
        match (hit, *yi) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => {}
        }
        brier += (pi - f64::from(u8::from(*yi))).powi(2);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Metrics {
        precision,
        recall,
        f1,
        brier: if y.is_empty() { 0.0 } else { brier / y.len() as f64 },
    }
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}
