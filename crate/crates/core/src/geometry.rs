//! Boxes, score vectors and per-frame detection carriers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Corner-encoded axis-aligned box in continuous pixel coordinates.
///
/// Construction enforces finite coordinates and strictly positive width and
/// height, so every `BoundingBox` in circulation has positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    x1: f64,
    y1: f64,
    x2: f64,
    y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        let invalid = |reason| Error::InvalidBox {
            x1,
            y1,
            x2,
            y2,
            reason,
        };
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        if x2 <= x1 || y2 <= y1 {
            return Err(invalid("zero or negative extent"));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    pub fn y1(&self) -> f64 {
        self.y1
    }

    pub fn x2(&self) -> f64 {
        self.x2
    }

    pub fn y2(&self) -> f64 {
        self.y2
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn corners(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x2.min(other.x2) - self.x1.max(other.x1);
        let h = self.y2.min(other.y2) - self.y1.max(other.y1);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    pub fn iou(&self, other: &BoundingBox) -> f64 {
        spatial_iou(self, other)
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(c: [f64; 4]) -> Result<Self> {
        BoundingBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        b.corners()
    }
}

/// Intersection over union of two boxes. Symmetric, in `[0, 1]`, and exactly
/// `1.0` for identical boxes.
pub fn spatial_iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    if a == b {
        return 1.0;
    }
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

/// Per-class confidence vector, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassScores(Vec<f64>);

impl ClassScores {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        for (class_id, &value) in scores.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidScore { class_id, value });
            }
        }
        Ok(Self(scores))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, class_id: usize) -> Option<f64> {
        self.0.get(class_id).copied()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Highest class score, `0.0` for an empty vector.
    pub fn top(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }
}

impl TryFrom<Vec<f64>> for ClassScores {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ClassScores::new(v)
    }
}

impl From<ClassScores> for Vec<f64> {
    fn from(s: ClassScores) -> Self {
        s.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
    pub scores: ClassScores,
}

impl Detection {
    pub fn new(bbox: BoundingBox, scores: ClassScores) -> Self {
        Self { bbox, scores }
    }

    pub fn class_count(&self) -> usize {
        self.scores.len()
    }
}

/// All detections of one frame of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDetections {
    pub video_id: String,
    pub frame_index: u64,
    pub detections: Vec<Detection>,
}

impl FrameDetections {
    pub fn new(video_id: impl Into<String>, frame_index: u64, detections: Vec<Detection>) -> Self {
        Self {
            video_id: video_id.into(),
            frame_index,
            detections,
        }
    }

    /// Fails if any detection's score vector does not have `class_count` entries.
    pub fn check_class_count(&self, class_count: usize) -> Result<()> {
        match self
            .detections
            .iter()
            .find(|d| d.class_count() != class_count)
        {
            Some(d) => Err(Error::ClassCountMismatch {
                expected: class_count,
                found: d.class_count(),
            }),
            None => Ok(()),
        }
    }
}
