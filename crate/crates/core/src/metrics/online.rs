//! Metrics as a function of the fraction of each video observed so far.

use std::collections::BTreeMap;

use super::{auc_at, map_at, GroundTruthTube, ScoredTube};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::fusion::FusionStrategy;
use crate::geometry::FrameDetections;
use crate::pipeline::VideoTracker;

pub const DEFAULT_CHECKPOINTS: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MetricKind {
    Map,
    Auc,
    Accuracy,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Map => "map",
            MetricKind::Auc => "auc",
            MetricKind::Accuracy => "accuracy",
        }
    }
}

/// One metric sampled at increasing observation fractions. `values[i]` is
/// `None` where the metric is undefined, e.g. no ground truth observed yet.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricCurve {
    pub kind: MetricKind,
    /// IoU threshold; `None` for prediction accuracy.
    pub delta: Option<f64>,
    pub fractions: Vec<f64>,
    pub values: Vec<Option<f64>>,
}

/// The frame records of one video: appearance plus optional flow, frame
/// aligned by index.
#[derive(Debug, Clone)]
pub struct VideoStream {
    pub video_id: String,
    pub appearance: Vec<FrameDetections>,
    pub flow: Option<Vec<FrameDetections>>,
}

/// Number of leading frames observed at fraction `p` of `total`.
pub fn prefix_len(p: f64, total: usize) -> usize {
    ((p * total as f64 - 1e-9).ceil() as usize).clamp(1, total)
}

/// Ground-truth label of a video: the class covering the most annotated
/// frames, lower class id on ties.
fn video_labels(gts: &[GroundTruthTube]) -> BTreeMap<&str, usize> {
    let mut frames: BTreeMap<&str, BTreeMap<usize, usize>> = BTreeMap::new();
    for g in gts {
        *frames
            .entry(g.video_id())
            .or_default()
            .entry(g.class_id())
            .or_default() += g.boxes().len();
    }
    frames
        .into_iter()
        .map(|(v, per_class)| {
            let best = per_class
                .iter()
                .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
                .map(|(&c, _)| c)
                .expect("non-empty");
            (v, best)
        })
        .collect()
}

struct Snapshot {
    segments: Vec<ScoredTube>,
    last_frame: u64,
    predicted: Option<usize>,
}

/// Replays every video frame by frame and, at each checkpoint fraction,
/// evaluates the segments built so far against ground truth truncated to
/// the observed frames. Returns one curve per `(metric, delta)` plus the
/// prediction-accuracy curve.
pub fn online_curves(
    videos: &[VideoStream],
    gts: &[GroundTruthTube],
    config: &Config,
    fusion: Option<FusionStrategy>,
    deltas: &[f64],
    checkpoints: &[f64],
) -> Result<Vec<MetricCurve>> {
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain(
            "checkpoints must be non-empty and strictly increasing",
        ));
    }
    if checkpoints.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::domain("checkpoints must lie in (0, 1]"));
    }

    // snapshots[checkpoint][video]
    let mut snapshots: Vec<Vec<Snapshot>> = (0..checkpoints.len()).map(|_| Vec::new()).collect();
    for video in videos {
        let total = video.appearance.len();
        if total == 0 {
            return Err(Error::domain(format!(
                "video {:?} has no frames",
                video.video_id
            )));
        }
        let flow_by_frame: BTreeMap<u64, &FrameDetections> = video
            .flow
            .iter()
            .flatten()
            .map(|f| (f.frame_index, f))
            .collect();
        let mut tracker = VideoTracker::new(video.video_id.clone(), config.clone(), fusion)?;
        let mut next = 0;
        for (i, frame) in video.appearance.iter().enumerate() {
            tracker.push(frame, flow_by_frame.get(&frame.frame_index).copied())?;
            while next < checkpoints.len() && prefix_len(checkpoints[next], total) == i + 1 {
                snapshots[next].push(Snapshot {
                    segments: tracker.segments(),
                    last_frame: frame.frame_index,
                    predicted: tracker.prediction().map(|p| p.class_id),
                });
                next += 1;
            }
        }
    }

    let labels = video_labels(gts);
    let mut gts_by_video: BTreeMap<&str, Vec<&GroundTruthTube>> = BTreeMap::new();
    for g in gts {
        gts_by_video.entry(g.video_id()).or_default().push(g);
    }

    let mut map_values = vec![Vec::new(); deltas.len()];
    let mut auc_values = vec![Vec::new(); deltas.len()];
    let mut accuracy = Vec::new();
    for snaps in &snapshots {
        let mut preds = Vec::new();
        let mut truncated = Vec::new();
        let (mut correct, mut labelled) = (0usize, 0usize);
        for (video, snap) in videos.iter().zip(snaps) {
            preds.extend(snap.segments.iter().cloned());
            if let Some(list) = gts_by_video.get(video.video_id.as_str()) {
                truncated.extend(list.iter().filter_map(|g| g.truncated(snap.last_frame)));
            }
            if let Some(&label) = labels.get(video.video_id.as_str()) {
                labelled += 1;
                if snap.predicted == Some(label) {
                    correct += 1;
                }
            }
        }
        for (i, &delta) in deltas.iter().enumerate() {
            map_values[i].push(map_at(&preds, &truncated, delta)?.mean());
            auc_values[i].push(auc_at(&preds, &truncated, delta)?);
        }
        accuracy.push((labelled > 0).then(|| correct as f64 / labelled as f64));
    }

    let fractions = checkpoints.to_vec();
    let mut curves = Vec::new();
    for (i, &delta) in deltas.iter().enumerate() {
        curves.push(MetricCurve {
            kind: MetricKind::Map,
            delta: Some(delta),
            fractions: fractions.clone(),
            values: std::mem::take(&mut map_values[i]),
        });
        curves.push(MetricCurve {
            kind: MetricKind::Auc,
            delta: Some(delta),
            fractions: fractions.clone(),
            values: std::mem::take(&mut auc_values[i]),
        });
    }
    curves.push(MetricCurve {
        kind: MetricKind::Accuracy,
        delta: None,
        fractions,
        values: accuracy,
    });
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prefix_lengths() {
        assert_eq!(prefix_len(0.1, 200), 20);
        assert_eq!(prefix_len(0.7, 200), 140);
        assert_eq!(prefix_len(1.0, 7), 7);
        assert_eq!(prefix_len(0.1, 5), 1);
        assert_eq!(prefix_len(0.3, 10), 3);
    }

    #[test]
    fn rejects_bad_checkpoints_and_empty_video() {
        let cfg = Config::new(1);
        assert!(online_curves(&[], &[], &cfg, None, &[0.5], &[0.5, 0.2]).is_err());
        assert!(online_curves(&[], &[], &cfg, None, &[0.5], &[0.0]).is_err());
        let empty = VideoStream {
            video_id: "v".into(),
            appearance: vec![],
            flow: None,
        };
        assert!(online_curves(&[empty], &[], &cfg, None, &[0.5], &DEFAULT_CHECKPOINTS).is_err());
    }
}
