use super::ap::{match_predictions, split_by_class, MatchOutcome};
use super::{GroundTruthTube, ScoredTube};
use crate::error::Result;

/// ROC area for one class from ranked matching outcomes.
///
/// The curve starts at the origin and gains one point per distinct score
/// while the threshold sweeps downwards: the true-positive rate is the number
/// of true positives over `gt_count`, the false-positive rate is the number
/// of false positives over all false positives. Equal scores form a single
/// step. Without false positives the area is the final true-positive rate.
pub fn class_auc(outcomes: &[MatchOutcome], gt_count: usize) -> f64 {
    if outcomes.is_empty() || gt_count == 0 {
        return 0.0;
    }
    let total_fp = outcomes.iter().filter(|o| !o.is_true_positive()).count();
    let total_tp = outcomes.len() - total_fp;
    if total_fp == 0 {
        return total_tp as f64 / gt_count as f64;
    }

    let (mut tp, mut fp) = (0usize, 0usize);
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    let mut area = 0.0;
    let mut i = 0;
    while i < outcomes.len() {
        let score = outcomes[i].score;
        while i < outcomes.len() && outcomes[i].score == score {
            if outcomes[i].is_true_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let tpr = tp as f64 / gt_count as f64;
        let fpr = fp as f64 / total_fp as f64;
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    area
}

/// Mean ROC area over classes with ground truth; `None` when there is no
/// ground truth at all.
pub fn auc_at(preds: &[ScoredTube], gts: &[GroundTruthTube], delta: f64) -> Result<Option<f64>> {
    let mut sum = 0.0;
    let mut classes = 0usize;
    for (_, (p, g)) in split_by_class(preds, gts) {
        let outcomes = match_predictions(&p, &g, delta)?;
        sum += class_auc(&outcomes, g.len());
        classes += 1;
    }
    Ok((classes > 0).then(|| sum / classes as f64))
}
