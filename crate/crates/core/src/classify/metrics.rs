use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub per_class_f1: Vec<f64>,
    /// Rows are true classes, columns predictions.
    pub confusion: Vec<Vec<usize>>,
    pub n_samples: usize,
}

impl MetricsReport {
    pub fn accuracy(&self) -> f64 {
        if self.n_samples == 0 {
            return 0.0;
        }
        let hits: usize = (0..self.confusion.len()).map(|i| self.confusion[i][i]).sum();
        hits as f64 / self.n_samples as f64
    }
}

pub fn metrics_from_predictions(truth: &[usize], pred: &[usize], n_classes: usize) -> MetricsReport {
    assert_eq!(truth.len(), pred.len(), "truth and predictions differ in length");
    let k = truth.iter().chain(pred).map(|&c| c + 1).max().unwrap_or(0).max(n_classes);
    let mut confusion = vec![vec![0usize; k]; k];
    for (&t, &p) in truth.iter().zip(pred) {
        confusion[t][p] += 1;
    }
    metrics_from_confusion(&confusion)
}

/// Per-class F1 = 2PR/(P+R) with 0/0 taken as 0. The macro mean runs over
/// classes that occur in the truth or the predictions.
pub fn metrics_from_confusion(confusion: &[Vec<usize>]) -> MetricsReport {
    let k = confusion.len();
    let n: usize = confusion.iter().flatten().sum();
    let mut per_class = Vec::with_capacity(k);
    let mut present = 0usize;
    let mut macro_sum = 0.0;
    let mut weighted = 0.0;
    for c in 0..k {
        let tp = confusion[c][c] as f64;
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|row| row[c]).sum();
        let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
        let recall = if support == 0 { 0.0 } else { tp / support as f64 };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(f1);
        if support > 0 || predicted > 0 {
            present += 1;
            macro_sum += f1;
        }
        if n > 0 {
            weighted += support as f64 / n as f64 * f1;
        }
    }
    MetricsReport {
        macro_f1: if present == 0 { 0.0 } else { macro_sum / present as f64 },
        weighted_f1: weighted,
        per_class_f1: per_class,
        confusion: confusion.to_vec(),
        n_samples: n,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_binary_confusion() {
        let m = metrics_from_confusion(&[vec![8, 2], vec![3, 7]]);
        // hand-derived: P0 = 8/11, R0 = 8/10; P1 = 7/9, R1 = 7/10
        let f0 = 2.0 * (8.0 / 11.0) * 0.8 / (8.0 / 11.0 + 0.8);
        let f1 = 2.0 * (7.0 / 9.0) * 0.7 / (7.0 / 9.0 + 0.7);
        assert!((m.per_class_f1[0] - 0.761_904_761_9).abs() < 1e-9);
        assert!((m.per_class_f1[1] - 0.736_842_105_3).abs() < 1e-9);
        assert!((m.per_class_f1[0] - f0).abs() < 1e-15);
        assert!((m.per_class_f1[1] - f1).abs() < 1e-15);
        assert!((m.macro_f1 - 0.749_373_433_6).abs() < 1e-9);
        assert!((m.weighted_f1 - 0.749_373_433_6).abs() < 1e-9);
        assert_eq!(m.n_samples, 20);
    }

    #[test]
    fn perfect_and_constant() {
        let t = [0, 1, 2, 1, 0];
        let m = metrics_from_predictions(&t, &t, 3);
        assert_eq!((m.macro_f1, m.weighted_f1), (1.0, 1.0));
        let m = metrics_from_predictions(&[0, 0, 1, 1], &[0, 0, 0, 0], 2);
        assert!(m.per_class_f1[0] > 0.0);
        assert_eq!(m.per_class_f1[1], 0.0);
    }

    #[test]
    fn confusion_invariants() {
        let truth = [0, 1, 2, 2, 1, 0, 0, 2];
        let pred = [0, 2, 2, 1, 1, 0, 1, 2];
        let m = metrics_from_predictions(&truth, &pred, 3);
        let supports: Vec<usize> = m.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(supports, vec![3, 2, 3]);
        assert_eq!(m.confusion.iter().flatten().sum::<usize>(), m.n_samples);
        let w: f64 = supports.iter().zip(&m.per_class_f1).map(|(s, f)| *s as f64 / 8.0 * f).sum();
        assert!((w - m.weighted_f1).abs() < 1e-15);
    }
}
