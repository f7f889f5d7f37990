use crate::corpus::Label;
use crate::error::{Error, Result};

pub const POSITIVE_CLASS: &str = "Suspended";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted.is_positive(), actual.is_positive()) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }
}

pub fn confusion(predictions: &[Label], labels: &[Label]) -> Result<ConfusionMatrix> {
    if predictions.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::invalid("nothing to evaluate"));
    }
    let mut m = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        m.record(p, l);
    }
    Ok(m)
}

/// Harmonic mean, 0 when `p + r = 0`.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Precision, recall and F1 of the positive class. Zero denominators give 0
/// and set the matching `*_undefined` flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
}

impl MetricsReport {
    pub fn is_degenerate(&self) -> bool {
        self.precision_undefined || self.recall_undefined
    }
}

pub fn binary_metrics(c: &ConfusionMatrix) -> MetricsReport {
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    MetricsReport {
        precision,
        recall,
        f1: f1_score(precision, recall),
        confusion: *c,
        precision_undefined: c.tp + c.fp == 0,
        recall_undefined: c.tp + c.fn_ == 0,
    }
}

/// Expected F1 of a predictor independent of the labels that flags a
/// fraction `q` of documents when a fraction `pi` are positive.
pub fn chance_f1(pi: f64, q: f64) -> f64 {
    f1_score(pi, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{NotSuspended as N, Suspended as S};

    #[test]
    fn confusion_examples() {
        let c = confusion(&[S, N, S, N], &[S, S, N, N]).unwrap();
        assert_eq!(c, ConfusionMatrix { tp: 1, fp: 1, fn_: 1, tn: 1 });
        let c = confusion(&[S, N, N], &[S, N, N]).unwrap();
        assert_eq!((c.fp, c.fn_), (0, 0));
        assert!(confusion(&[S], &[S, N]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn symmetric_case() {
        let m = binary_metrics(&ConfusionMatrix { tp: 1, fp: 1, fn_: 1, tn: 0 });
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        assert!(!m.is_degenerate());
    }

    #[test]
    fn reference_rows() {
        for (p, r, f) in [(0.708, 0.184, 0.292), (0.448, 0.218, 0.293), (0.390, 0.147, 0.214)] {
            assert!((f1_score(p, r) - f).abs() <= 0.0005, "{p} {r}");
        }
    }

    #[test]
    fn low_recall_row_needs_unrounded_inputs() {
        // 0.095 is only reached once P and R are read as rounded values
        assert!((f1_score(0.847, 0.051) - 0.09621).abs() < 5e-6);
        let lowest = f1_score(0.8465, 0.0505);
        assert!(lowest < 0.0955 && lowest > 0.0945);
    }

    #[test]
    fn inconsistent_rows_are_not_reproduced() {
        assert!((f1_score(0.424, 0.237) - 0.304).abs() < 0.0005);
        assert!((f1_score(0.416, 0.280) - 0.335).abs() < 0.0005);
    }

    #[test]
    fn no_positive_predictions() {
        let m = binary_metrics(&ConfusionMatrix { tp: 0, fp: 0, fn_: 4, tn: 6 });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.precision_undefined && !m.recall_undefined);
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500, tn in 0u64..500) {
            let m = binary_metrics(&ConfusionMatrix { tp, fp, fn_, tn });
            prop_assert!((0.0..=1.0).contains(&m.f1));
            if m.precision + m.recall > 0.0 {
                let h = 2.0 * m.precision * m.recall / (m.precision + m.recall);
                prop_assert!((m.f1 - h).abs() <= 1e-12);
            }
            prop_assert_eq!(m.confusion.total(), tp + fp + fn_ + tn);
        }
    }
}
