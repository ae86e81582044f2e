pub mod bench;
pub mod build;
pub mod eval;
pub mod simulate;

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context;
use log::warn;
use tubelink::io::{DetectionReader, FormatError};
use tubelink::FrameDetections;

use crate::{open, Exit};

pub(crate) fn format_error(path: &Path, e: FormatError) -> anyhow::Error {
    match e {
        FormatError::Malformed { line, message } => Exit::bad_input(format!(
            "{}:{line}: malformed record: {message}",
            path.display()
        ))
        .into(),
        FormatError::Io(e) => anyhow::Error::new(e).context(format!("reading {}", path.display())),
    }
}

pub(crate) fn detection_reader(
    path: &Path,
) -> anyhow::Result<DetectionReader<std::io::BufReader<std::fs::File>>> {
    Ok(DetectionReader::new(open(path)?))
}

/// Reads a whole detection file, grouped by video in first-seen order.
pub(crate) fn read_videos(path: &Path) -> anyhow::Result<Vec<(String, Vec<FrameDetections>)>> {
    let mut order = Vec::new();
    let mut by_video: BTreeMap<String, Vec<FrameDetections>> = BTreeMap::new();
    for rec in detection_reader(path)? {
        let frame = rec.map_err(|e| format_error(path, e))?;
        if !by_video.contains_key(&frame.video_id) {
            order.push(frame.video_id.clone());
        }
        by_video
            .entry(frame.video_id.clone())
            .or_default()
            .push(frame);
    }
    Ok(order
        .into_iter()
        .map(|v| {
            let frames = by_video.remove(&v).expect("video recorded");
            (v, frames)
        })
        .collect())
}

/// Flow records indexed by (video, frame) for frame-aligned fusion.
pub(crate) fn read_flow_index(
    path: &Path,
) -> anyhow::Result<BTreeMap<(String, u64), FrameDetections>> {
    let mut index = BTreeMap::new();
    for rec in detection_reader(path)? {
        let frame = rec.map_err(|e| format_error(path, e))?;
        let key = (frame.video_id.clone(), frame.frame_index);
        if index.insert(key, frame).is_some() {
            warn!(
                "{}: duplicate flow record, keeping the last",
                path.display()
            );
        }
    }
    Ok(index)
}

/// Class count from the flag or the first detection in the file.
pub(crate) fn class_count(explicit: Option<usize>, path: &Path) -> anyhow::Result<usize> {
    if let Some(c) = explicit {
        return Ok(c);
    }
    for rec in detection_reader(path)? {
        let frame = rec.map_err(|e| format_error(path, e))?;
        if let Some(d) = frame.detections.first() {
            return Ok(d.class_count());
        }
    }
    Err(Exit::bad_input(format!(
        "{}: no detections to infer the class count from; pass --classes",
        path.display()
    )))
    .context("class count")
}

pub(crate) fn evenly_spaced(count: usize) -> anyhow::Result<Vec<f64>> {
    if count == 0 {
        anyhow::bail!(Exit::bad_input("--checkpoints must be positive"));
    }
    Ok((1..=count).map(|i| i as f64 / count as f64).collect())
}

pub(crate) fn create_dir(path: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}
