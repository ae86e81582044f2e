//! Merging of appearance-stream and flow-stream detections for one frame.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{spatial_iou, ClassScores, Detection};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FusionStrategy {
    /// Keep both detection sets as-is.
    UnionSet,
    /// Amplify appearance scores with the best-overlapping flow box, then
    /// L1-normalise. `iou_threshold` gates the association.
    Boost { iou_threshold: f64 },
}

impl FusionStrategy {
    pub fn fuse(&self, appearance: &[Detection], flow: &[Detection]) -> Result<Vec<Detection>> {
        match *self {
            FusionStrategy::UnionSet => union_fuse(appearance, flow),
            FusionStrategy::Boost { iou_threshold } => boost_fuse(appearance, flow, iou_threshold),
        }
    }
}

fn check_class_counts(appearance: &[Detection], flow: &[Detection]) -> Result<()> {
    let mut all = appearance.iter().chain(flow);
    if let Some(first) = all.next() {
        let expected = first.class_count();
        if let Some(d) = all.find(|d| d.class_count() != expected) {
            return Err(Error::ClassCountMismatch {
                expected,
                found: d.class_count(),
            });
        }
    }
    Ok(())
}

/// Concatenation of both sets: appearance first, then flow.
pub fn union_fuse(appearance: &[Detection], flow: &[Detection]) -> Result<Vec<Detection>> {
    check_class_counts(appearance, flow)?;
    Ok(appearance.iter().chain(flow).cloned().collect())
}

fn l1_normalised(scores: Vec<f64>) -> ClassScores {
    let sum: f64 = scores.iter().sum();
    let scores = if sum > 0.0 {
        scores.into_iter().map(|s| (s / sum).min(1.0)).collect()
    } else {
        scores
    };
    ClassScores::new(scores).expect("normalised non-negative scores lie in [0, 1]")
}

/// Boost fusion.
///
/// Appearance boxes are visited by descending top score (input order on
/// ties). Each takes the still-unused flow box of maximal IoU, ties going to
/// the higher flow top score and then the earlier flow box. When that IoU
/// exceeds `iou_threshold` the fused score is `s_a(c) + iou * s_f(c)` and the
/// flow box is consumed. Every appearance score vector is L1-normalised.
/// Unconsumed flow boxes are appended unchanged.
pub fn boost_fuse(
    appearance: &[Detection],
    flow: &[Detection],
    iou_threshold: f64,
) -> Result<Vec<Detection>> {
    check_class_counts(appearance, flow)?;
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::domain(format!(
            "boost IoU threshold {iou_threshold} outside [0, 1]"
        )));
    }

    let mut order: Vec<usize> = (0..appearance.len()).collect();
    order.sort_by(|&a, &b| {
        appearance[b]
            .scores
            .top()
            .partial_cmp(&appearance[a].scores.top())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut flow_used = vec![false; flow.len()];
    let mut fused: Vec<Option<Detection>> = vec![None; appearance.len()];

    for ai in order {
        let a = &appearance[ai];
        let mut best: Option<(usize, f64)> = None;
        for (fi, f) in flow.iter().enumerate() {
            if flow_used[fi] {
                continue;
            }
            let iou = spatial_iou(&a.bbox, &f.bbox);
            let better = match best {
                None => true,
                Some((bi, biou)) => {
                    iou > biou || (iou == biou && f.scores.top() > flow[bi].scores.top())
                }
            };
            if better {
                best = Some((fi, iou));
            }
        }

        let raw: Vec<f64> = match best {
            Some((fi, iou)) if iou > iou_threshold => {
                flow_used[fi] = true;
                a.scores
                    .as_slice()
                    .iter()
                    .zip(flow[fi].scores.as_slice())
                    .map(|(sa, sf)| sa + iou * sf)
                    .collect()
            }
            _ => a.scores.as_slice().to_vec(),
        };
        fused[ai] = Some(Detection::new(a.bbox, l1_normalised(raw)));
    }

    let mut out: Vec<Detection> = fused.into_iter().flatten().collect();
    out.extend(
        flow.iter()
            .zip(&flow_used)
            .filter(|(_, &used)| !used)
            .map(|(f, _)| f.clone()),
    );
    Ok(out)
}
