//! Per-class non-maximum suppression with top-n truncation.

use std::cmp::Ordering;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{spatial_iou, BoundingBox, Detection};

/// A detection projected onto a single class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassDetection {
    pub bbox: BoundingBox,
    pub class_id: usize,
    pub score: f64,
}

/// Greedy NMS for `class_id`, returning at most `config.top_n` boxes in
/// descending score order. Equal scores keep input order. Boxes scoring
/// below `config.min_score` are discarded first.
pub fn nms_top_n(
    frame: &[Detection],
    class_id: usize,
    config: &Config,
) -> Result<Vec<ClassDetection>> {
    if class_id >= config.class_count {
        return Err(Error::ClassOutOfRange {
            class_id,
            class_count: config.class_count,
        });
    }

    let mut projected = Vec::with_capacity(frame.len());
    for d in frame {
        let score = d.scores.get(class_id).ok_or(Error::ClassOutOfRange {
            class_id,
            class_count: d.class_count(),
        })?;
        if score >= config.min_score {
            projected.push(ClassDetection {
                bbox: d.bbox,
                class_id,
                score,
            });
        }
    }
    // stable sort: ties stay in input order
    projected.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));

    let mut kept: Vec<ClassDetection> = Vec::with_capacity(config.top_n.min(projected.len()));
    for cand in projected {
        if kept.len() == config.top_n {
            break;
        }
        if kept
            .iter()
            .all(|k| spatial_iou(&k.bbox, &cand.bbox) <= config.nms_iou)
        {
            kept.push(cand);
        }
    }
    Ok(kept)
}

/// Runs [`nms_top_n`] for every class of the configuration.
pub fn candidates_per_class(
    frame: &[Detection],
    config: &Config,
) -> Result<Vec<Vec<ClassDetection>>> {
    (0..config.class_count)
        .map(|c| nms_top_n(frame, c, config))
        .collect()
}
