//! Spatio-temporal localisation metrics.
//!
//! Predicted segments and ground-truth tubes are compared with ST-IoU: the
//! temporal Jaccard of their frame sets times the mean spatial IoU over the
//! shared frames. Detection quality is summarised per class by average
//! precision and ROC area, and over classes by their mean.

mod ap;
mod auc;
mod online;

pub use ap::{
    average_precision, map_at, map_avg_range, match_predictions, MapReport, MatchOutcome,
};
pub use auc::{auc_at, class_auc};
pub use online::{
    online_curves, prefix_len, MetricCurve, MetricKind, VideoStream, DEFAULT_CHECKPOINTS,
};

use crate::error::{Error, Result};
use crate::geometry::spatial_iou;
use crate::labeler::TubeSegment;
use crate::linker::TubeBox;

/// IoU thresholds of the averaged mAP: 0.50, 0.55, ..., 0.95.
pub fn coco_thresholds() -> [f64; 10] {
    std::array::from_fn(|i| (50 + 5 * i) as f64 / 100.0)
}

/// A predicted action segment of one video, ready for evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredTube {
    pub video_id: String,
    pub class_id: usize,
    pub score: f64,
    pub boxes: Vec<TubeBox>,
}

impl ScoredTube {
    pub fn from_segment(video_id: impl Into<String>, segment: &TubeSegment) -> Self {
        Self {
            video_id: video_id.into(),
            class_id: segment.class_id,
            score: segment.score,
            boxes: segment.boxes.clone(),
        }
    }

    pub fn start(&self) -> Option<u64> {
        self.boxes.first().map(|b| b.frame_index)
    }

    pub fn end(&self) -> Option<u64> {
        self.boxes.last().map(|b| b.frame_index)
    }
}

/// Annotated action instance: one box per frame over a contiguous interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTube {
    video_id: String,
    class_id: usize,
    boxes: Vec<TubeBox>,
}

impl GroundTruthTube {
    pub fn new(video_id: impl Into<String>, class_id: usize, boxes: Vec<TubeBox>) -> Result<Self> {
        if boxes.is_empty() {
            return Err(Error::EmptyTube);
        }
        if let Some(w) = boxes
            .windows(2)
            .find(|w| w[1].frame_index != w[0].frame_index + 1)
        {
            return Err(Error::domain(format!(
                "ground-truth frames must be contiguous, found {} followed by {}",
                w[0].frame_index, w[1].frame_index
            )));
        }
        Ok(Self {
            video_id: video_id.into(),
            class_id,
            boxes,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn class_id(&self) -> usize {
        self.class_id
    }

    pub fn boxes(&self) -> &[TubeBox] {
        &self.boxes
    }

    pub fn start(&self) -> u64 {
        self.boxes[0].frame_index
    }

    pub fn end(&self) -> u64 {
        self.boxes[self.boxes.len() - 1].frame_index
    }

    /// The part of the tube up to and including `last_frame`, if any.
    pub fn truncated(&self, last_frame: u64) -> Option<GroundTruthTube> {
        let keep = self.boxes.partition_point(|b| b.frame_index <= last_frame);
        (keep > 0).then(|| GroundTruthTube {
            video_id: self.video_id.clone(),
            class_id: self.class_id,
            boxes: self.boxes[..keep].to_vec(),
        })
    }

    pub fn as_scored(&self) -> ScoredTube {
        ScoredTube {
            video_id: self.video_id.clone(),
            class_id: self.class_id,
            score: 1.0,
            boxes: self.boxes.clone(),
        }
    }
}

/// ST-IoU of two frame-ordered box sequences.
pub fn st_iou_boxes(a: &[TubeBox], b: &[TubeBox]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut shared = 0usize;
    let mut union = 0usize;
    let mut iou_sum = 0.0;
    while i < a.len() || j < b.len() {
        union += 1;
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x.frame_index == y.frame_index => {
                shared += 1;
                iou_sum += spatial_iou(&x.bbox, &y.bbox);
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.frame_index < y.frame_index => i += 1,
            (Some(_), Some(_)) => j += 1,
            (Some(_), None) => i += 1,
            (None, _) => j += 1,
        }
    }
    if shared == 0 {
        return 0.0;
    }
    (shared as f64 / union as f64) * (iou_sum / shared as f64)
}

pub fn st_iou(pred: &ScoredTube, gt: &GroundTruthTube) -> Result<f64> {
    if pred.video_id != gt.video_id {
        return Err(Error::domain(format!(
            "cannot compare tubes of videos {:?} and {:?}",
            pred.video_id, gt.video_id
        )));
    }
    Ok(st_iou_boxes(&pred.boxes, &gt.boxes))
}


#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;

    #[test]
    fn st_iou_identity_and_disjoint() {
        let g = gt("v", 0, 1..=10);
        assert_eq!(st_iou(&g.as_scored(), &g).unwrap(), 1.0);
        assert_eq!(st_iou(&pred("v", 0, 1.0, 20..=30), &g).unwrap(), 0.0);
    }

    #[test]
    fn st_iou_partial_temporal() {
        // shared 6..=10 (5 frames) over union 1..=15 (15 frames)
        let v = st_iou(&pred("v", 0, 1.0, 1..=10), &gt("v", 0, 6..=15)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn st_iou_spatial_component() {
        // shifted by 5: spatial IoU 1/3 on every shared frame
        let p = ScoredTube {
            boxes: (1..=4).map(|f| tb(f, 5.0)).collect(),
            ..pred("v", 0, 1.0, 1..=1)
        };
        let v = st_iou(&p, &gt("v", 0, 1..=4)).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn st_iou_symmetric() {
        let a = pred("v", 0, 1.0, 3..=9);
        let b = gt("v", 0, 5..=12);
        assert_eq!(
            st_iou_boxes(&a.boxes, b.boxes()),
            st_iou_boxes(b.boxes(), &a.boxes)
        );
    }

    #[test]
    fn st_iou_other_video_errors() {
        assert!(st_iou(&pred("a", 0, 1.0, 1..=3), &gt("b", 0, 1..=3)).is_err());
    }

    #[test]
    fn gt_requires_contiguous_frames() {
        assert!(GroundTruthTube::new("v", 0, vec![tb(1, 0.0), tb(3, 0.0)]).is_err());
        assert_eq!(GroundTruthTube::new("v", 0, vec![]), Err(Error::EmptyTube));
    }

    #[test]
    fn truncation() {
        let g = gt("v", 0, 5..=10);
        assert_eq!(g.truncated(4), None);
        let t = g.truncated(7).unwrap();
        assert_eq!((t.start(), t.end()), (5, 7));
        assert_eq!(g.truncated(100).unwrap(), g);
    }

    #[test]
    fn thresholds() {
        let t = coco_thresholds();
        assert_eq!(t[0], 0.5);
        assert_eq!(t[2], 0.6);
        assert_eq!(t[9], 0.95);
    }
}
