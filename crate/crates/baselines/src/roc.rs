//! Threshold selection by exhaustive Youden scan: every midpoint between
//! adjacent unique scores is a candidate, and the reported threshold is the
//! smallest one attaining the maximal J = sensitivity + specificity - 1.

use dynamics::zoo::DynClass;

use crate::FitError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocFit {
    pub threshold: f64,
    pub youden_j: f64,
}

/// Scores above the threshold predict PeriodicAttractor. Labels must
/// contain both classes.
pub fn fit_threshold_roc(scores: &[f64], labels: &[DynClass]) -> Result<RocFit, FitError> {
    assert_eq!(scores.len(), labels.len());
    let positives = labels.iter().filter(|l| **l == DynClass::PeriodicAttractor).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(FitError::DegenerateLabels);
    }

    let mut unique: Vec<f64> = scores.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();

    let mut best = RocFit { threshold: f64::NEG_INFINITY, youden_j: f64::NEG_INFINITY };
    for pair in unique.windows(2) {
        let threshold = 0.5 * (pair[0] + pair[1]);
        let mut tp = 0usize;
        let mut tn = 0usize;
        for (score, label) in scores.iter().zip(labels) {
            let cycle = *score > threshold;
            match label {
                DynClass::PeriodicAttractor if cycle => tp += 1,
                DynClass::PointAttractor if !cycle => tn += 1,
                _ => {}
            }
        }
        let j = tp as f64 / positives as f64 + tn as f64 / negatives as f64 - 1.0;
        if j > best.youden_j {
            best = RocFit { threshold, youden_j: j };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DynClass::{PeriodicAttractor as Cycle, PointAttractor as Point};

    #[test]
    fn separable_scores_split_at_the_gap_midpoint() {
        let fit = fit_threshold_roc(&[-0.5, -0.1, 0.01, 0.05], &[Point, Point, Cycle, Cycle])
            .unwrap();
        assert!((fit.threshold - -0.045).abs() < 1e-12);
        assert_eq!(fit.youden_j, 1.0);
    }

    #[test]
    fn training_accuracy_is_perfect_when_classes_separate() {
        let scores = [-3.0, -1.2, -0.7, 0.2, 0.4, 2.0];
        let labels = [Point, Point, Point, Cycle, Cycle, Cycle];
        let fit = fit_threshold_roc(&scores, &labels).unwrap();
        for (s, l) in scores.iter().zip(&labels) {
            let predicted = if *s > fit.threshold { Cycle } else { Point };
            assert_eq!(predicted, *l);
        }
    }

    #[test]
    fn permuted_labels_report_chance_level() {
        let scores = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
        let labels = [Cycle, Point, Cycle, Point, Cycle, Point, Cycle, Point];
        let fit = fit_threshold_roc(&scores, &labels).unwrap();
        assert!(fit.youden_j.abs() <= 0.25 + 1e-12, "J {}", fit.youden_j);
    }

    #[test]
    fn ties_resolve_to_the_smaller_threshold() {
        // Alternating labels make J = 0.5 at both the first and last gap;
        // the scan must keep the first.
        let fit =
            fit_threshold_roc(&[0.0, 1.0, 2.0, 3.0], &[Point, Cycle, Point, Cycle]).unwrap();
        assert!((fit.threshold - 0.5).abs() < 1e-12);
        assert!((fit.youden_j - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_inputs_are_rejected() {
        assert_eq!(
            fit_threshold_roc(&[0.1, 0.2], &[Point, Point]),
            Err(FitError::DegenerateLabels)
        );
    }
}
