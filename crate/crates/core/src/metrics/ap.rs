use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{coco_thresholds, st_iou_boxes, GroundTruthTube, ScoredTube};
use crate::error::{Error, Result};

/// Decision for one prediction after greedy matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchOutcome {
    /// Index into the prediction slice.
    pub prediction: usize,
    pub score: f64,
    /// Ground-truth index claimed by this prediction, if it is a true positive.
    pub matched: Option<usize>,
    pub st_iou: f64,
}

impl MatchOutcome {
    pub fn is_true_positive(&self) -> bool {
        self.matched.is_some()
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "IoU threshold {delta} outside (0, 1]"
        )))
    }
}

/// Greedy matching of predictions to ground truth in descending score order
/// (input order on ties). Each prediction looks at the not yet claimed
/// ground-truth tubes of its video and class and picks the one with the
/// highest ST-IoU; it is a true positive iff that ST-IoU is at least `delta`.
pub fn match_predictions(
    preds: &[ScoredTube],
    gts: &[GroundTruthTube],
    delta: f64,
) -> Result<Vec<MatchOutcome>> {
    check_delta(delta)?;
    let mut by_key: HashMap<(&str, usize), Vec<usize>> = HashMap::new();
    for (i, g) in gts.iter().enumerate() {
        by_key
            .entry((g.video_id(), g.class_id()))
            .or_default()
            .push(i);
    }

    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| {
        preds[b]
            .score
            .partial_cmp(&preds[a].score)
            .unwrap_or(Ordering::Equal)
    });

    let mut claimed = vec![false; gts.len()];
    let mut out = Vec::with_capacity(preds.len());
    for p in order {
        let pred = &preds[p];
        let mut best: Option<(usize, f64)> = None;
        if let Some(cands) = by_key.get(&(pred.video_id.as_str(), pred.class_id)) {
            for &g in cands {
                if claimed[g] {
                    continue;
                }
                let v = st_iou_boxes(&pred.boxes, gts[g].boxes());
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
        }
        let (matched, st_iou) = match best {
            Some((g, v)) if v >= delta => {
                claimed[g] = true;
                (Some(g), v)
            }
            Some((_, v)) => (None, v),
            None => (None, 0.0),
        };
        out.push(MatchOutcome {
            prediction: p,
            score: pred.score,
            matched,
            st_iou,
        });
    }
    Ok(out)
}

/// Area under the precision envelope of ranked TP/FP decisions.
pub(crate) fn ap_from_outcomes(outcomes: &[MatchOutcome], gt_count: usize) -> f64 {
    if gt_count == 0 {
        return 0.0;
    }
    let mut tp = 0usize;
    let mut points = Vec::with_capacity(outcomes.len());
    for (i, o) in outcomes.iter().enumerate() {
        if o.is_true_positive() {
            tp += 1;
        }
        let precision = tp as f64 / (i + 1) as f64;
        let recall = tp as f64 / gt_count as f64;
        points.push((recall, precision));
    }
    // monotone envelope from the right
    for i in (0..points.len().saturating_sub(1)).rev() {
        points[i].1 = points[i].1.max(points[i + 1].1);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (recall, precision) in points {
        if recall > prev_recall {
            ap += (recall - prev_recall) * precision;
            prev_recall = recall;
        }
    }
    ap
}

fn single_class(preds: &[ScoredTube], gts: &[GroundTruthTube]) -> Result<Option<usize>> {
    let classes: BTreeSet<usize> = preds
        .iter()
        .map(|p| p.class_id)
        .chain(gts.iter().map(|g| g.class_id()))
        .collect();
    match classes.len() {
        0 => Ok(None),
        1 => Ok(classes.first().copied()),
        _ => Err(Error::domain(format!(
            "average precision needs a single class, got {classes:?}"
        ))),
    }
}

/// Average precision of one class. `None` when the class has no ground truth.
pub fn average_precision(
    preds: &[ScoredTube],
    gts: &[GroundTruthTube],
    delta: f64,
) -> Result<Option<f64>> {
    single_class(preds, gts)?;
    let outcomes = match_predictions(preds, gts, delta)?;
    if gts.is_empty() {
        return Ok(None);
    }
    Ok(Some(ap_from_outcomes(&outcomes, gts.len())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapReport {
    pub delta: f64,
    /// AP of every class that has ground truth.
    pub per_class: BTreeMap<usize, f64>,
}

impl MapReport {
    /// Mean over classes with ground truth; `None` if there are none.
    pub fn mean(&self) -> Option<f64> {
        (!self.per_class.is_empty())
            .then(|| self.per_class.values().sum::<f64>() / self.per_class.len() as f64)
    }
}

pub(crate) fn split_by_class<'a>(
    preds: &'a [ScoredTube],
    gts: &'a [GroundTruthTube],
) -> BTreeMap<usize, (Vec<ScoredTube>, Vec<GroundTruthTube>)> {
    let mut classes: BTreeMap<usize, (Vec<ScoredTube>, Vec<GroundTruthTube>)> = BTreeMap::new();
    for g in gts {
        classes.entry(g.class_id()).or_default().1.push(g.clone());
    }
    for p in preds {
        if let Some(entry) = classes.get_mut(&p.class_id) {
            entry.0.push(p.clone());
        }
    }
    classes
}

pub fn map_at(preds: &[ScoredTube], gts: &[GroundTruthTube], delta: f64) -> Result<MapReport> {
    check_delta(delta)?;
    let mut per_class = BTreeMap::new();
    for (class_id, (p, g)) in split_by_class(preds, gts) {
        if let Some(ap) = average_precision(&p, &g, delta)? {
            per_class.insert(class_id, ap);
        }
    }
    Ok(MapReport { delta, per_class })
}

/// mAP averaged over the thresholds 0.50:0.05:0.95.
pub fn map_avg_range(preds: &[ScoredTube], gts: &[GroundTruthTube]) -> Result<Option<f64>> {
    let mut total = 0.0;
    for delta in coco_thresholds() {
        match map_at(preds, gts, delta)?.mean() {
            Some(m) => total += m,
            None => return Ok(None),
        }
    }
    Ok(Some(total / 10.0))
}

#[cfg(test)]
mod tests {
    use super::super::testutil::*;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_detection() {
        let g = vec![gt("v", 0, 1..=10)];
        let p = vec![pred("v", 0, 0.9, 1..=10)];
        assert_eq!(average_precision(&p, &g, 0.5).unwrap(), Some(1.0));
    }

    #[test]
    fn below_threshold() {
        let g = vec![gt("v", 0, 1..=10)];
        let p = vec![pred("v", 0, 0.9, 1..=3)];
        assert_eq!(average_precision(&p, &g, 0.5).unwrap(), Some(0.0));
    }

    #[test]
    fn tp_then_fp_and_reversed() {
        let g = vec![gt("v", 0, 1..=10)];
        let tp_first = vec![pred("v", 0, 0.9, 1..=10), pred("v", 0, 0.8, 30..=40)];
        let ap = average_precision(&tp_first, &g, 0.5).unwrap().unwrap();
        assert!((ap - 1.0).abs() < 1e-9);

        let fp_first = vec![pred("v", 0, 0.8, 1..=10), pred("v", 0, 0.9, 30..=40)];
        let ap = average_precision(&fp_first, &g, 0.5).unwrap().unwrap();
        assert!((ap - 0.5).abs() < 1e-9);
    }

    #[test]
    fn duplicate_predictions_claim_once() {
        let g = vec![gt("v", 0, 1..=10)];
        let p = vec![pred("v", 0, 0.9, 1..=10), pred("v", 0, 0.8, 1..=10)];
        let m = match_predictions(&p, &g, 0.5).unwrap();
        assert_eq!(m.iter().filter(|o| o.is_true_positive()).count(), 1);
        // TP then FP at full recall: AP 1
        assert_eq!(average_precision(&p, &g, 0.5).unwrap(), Some(1.0));
    }

    #[test]
    fn matching_is_per_video() {
        let g = vec![gt("a", 0, 1..=10)];
        let p = vec![pred("b", 0, 0.9, 1..=10)];
        assert_eq!(average_precision(&p, &g, 0.5).unwrap(), Some(0.0));
    }

    #[test]
    fn no_ground_truth_is_undefined() {
        let p = vec![pred("v", 0, 0.9, 1..=10)];
        assert_eq!(average_precision(&p, &[], 0.5).unwrap(), None);
    }

    #[test]
    fn rejects_bad_inputs() {
        let g = vec![gt("v", 0, 1..=10), gt("v", 1, 1..=10)];
        assert!(average_precision(&[], &g, 0.5).is_err());
        assert!(average_precision(&[], &g[..1], 0.0).is_err());
        assert!(average_precision(&[], &g[..1], 1.5).is_err());
    }

    #[test]
    fn map_means_over_classes_with_gt() {
        let g = vec![gt("v", 0, 1..=10), gt("v", 1, 1..=10)];
        let p = vec![pred("v", 0, 0.9, 1..=10), pred("v", 2, 0.9, 1..=10)];
        let r = map_at(&p, &g, 0.5).unwrap();
        assert_eq!(r.per_class.len(), 2);
        assert_eq!(r.mean(), Some(0.5));

        let perfect = vec![pred("v", 0, 0.9, 1..=10), pred("v", 1, 0.9, 1..=10)];
        assert_eq!(map_at(&perfect, &g, 0.75).unwrap().mean(), Some(1.0));
    }

    #[test]
    fn averaged_map() {
        let g = vec![gt("v", 0, 1..=10), gt("w", 1, 1..=10)];
        let exact = vec![pred("v", 0, 0.9, 1..=10), pred("w", 1, 0.4, 1..=10)];
        assert_eq!(map_avg_range(&exact, &g).unwrap(), Some(1.0));
        // ST-IoU exactly 6/10: true positive at 0.50, 0.55 and 0.60 only
        let partial = vec![pred("v", 0, 0.9, 1..=6), pred("w", 1, 0.4, 5..=10)];
        assert_eq!(map_avg_range(&partial, &g).unwrap(), Some(0.3));
        assert_eq!(map_avg_range(&[], &g).unwrap(), Some(0.0));
    }

    fn arb_case() -> impl Strategy<Value = (Vec<ScoredTube>, Vec<GroundTruthTube>)> {
        let gts = prop::collection::vec((0usize..3, 1u64..30, 1u64..20), 1..5);
        let preds = prop::collection::vec((0usize..3, 0.0..1.0f64, 1u64..30, 1u64..20), 0..10);
        (gts, preds).prop_map(|(g, p)| {
            let videos = ["a", "b", "c"];
            (
                p.into_iter()
                    .map(|(v, s, st, len)| pred(videos[v], 0, s, st..=st + len))
                    .collect(),
                g.into_iter()
                    .map(|(v, st, len)| gt(videos[v], 0, st..=st + len))
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn ap_properties((p, g) in arb_case(), delta in 0.05..=1.0f64) {
            let ap = average_precision(&p, &g, delta).unwrap().unwrap();
            prop_assert!((0.0..=1.0).contains(&ap));

            // strictly monotone rescoring leaves AP unchanged
            let squashed: Vec<_> = p.iter().cloned().map(|mut t| { t.score *= 0.5; t }).collect();
            prop_assert_eq!(ap, average_precision(&squashed, &g, delta).unwrap().unwrap());

            let m = match_predictions(&p, &g, delta).unwrap();
            let mut seen = BTreeSet::new();
            for o in &m {
                if let Some(gi) = o.matched {
                    prop_assert!(seen.insert(gi));
                    prop_assert!(o.st_iou >= delta);
                }
            }
        }

        #[test]
        fn averaged_map_bounded_by_map_at_half((p, g) in arb_case()) {
            let avg = map_avg_range(&p, &g).unwrap().unwrap();
            let half = map_at(&p, &g, 0.5).unwrap().mean().unwrap();
            prop_assert!(avg <= half + 1e-12);
        }

        #[test]
        fn disjoint_video_sets_evaluate_independently((p, g) in arb_case()) {
            // renaming videos into two disjoint namespaces and concatenating
            // gives the same matches as evaluating each half separately
            let rename = |s: &str, tag: &str| format!("{tag}{s}");
            let p2: Vec<_> = p.iter().cloned().map(|mut t| { t.video_id = rename(&t.video_id, "x/"); t }).collect();
            let g2: Vec<_> = g.iter().map(|t| GroundTruthTube::new(rename(t.video_id(), "x/"), 0, t.boxes().to_vec()).unwrap()).collect();
            let joint_p: Vec<_> = p.iter().cloned().chain(p2.clone()).collect();
            let joint_g: Vec<_> = g.iter().cloned().chain(g2.clone()).collect();
            let joint = match_predictions(&joint_p, &joint_g, 0.5).unwrap();
            let tp_joint = joint.iter().filter(|o| o.is_true_positive()).count();
            let tp_a = match_predictions(&p, &g, 0.5).unwrap().iter().filter(|o| o.is_true_positive()).count();
            prop_assert_eq!(tp_joint, 2 * tp_a);
        }
    }
}
