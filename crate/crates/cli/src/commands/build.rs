use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::Context;
use log::{info, warn};
use tubelink::io::{fixed6, write_tubes};
use tubelink::metrics::prefix_len;
use tubelink::{Error, ScoredTube, VideoPrediction, VideoTracker};

use super::{
    class_count, create_dir, detection_reader, evenly_spaced, format_error, read_flow_index,
};
use crate::args::BuildArgs;
use crate::Exit;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildSummary {
    pub videos: usize,
    pub frames: usize,
    pub segments: usize,
}

struct VideoRun {
    tracker: VideoTracker,
    predictions: Vec<(u64, Option<VideoPrediction>)>,
}

/// Processes the appearance file record by record, one tracker per video,
/// then writes `tubes.json` and `predictions.csv` into the output directory.
pub fn run(args: &BuildArgs) -> anyhow::Result<BuildSummary> {
    let stream = &args.stream;
    let fusion = stream.fusion().map_err(Exit::bad_input)?;
    let classes = class_count(stream.tube.classes, &stream.appearance)?;
    let config = stream.tube.config(classes);
    config
        .validate()
        .map_err(|e| Exit::bad_input(e.to_string()))?;
    let checkpoints = evenly_spaced(args.checkpoints)?;

    let flow = match &stream.flow {
        Some(p) => Some(read_flow_index(p)?),
        None => None,
    };

    let path = &stream.appearance;
    let mut videos: BTreeMap<String, VideoRun> = BTreeMap::new();
    let mut reader = detection_reader(path)?;
    let mut frames = 0usize;
    while let Some(rec) = reader.next() {
        let frame = rec.map_err(|e| format_error(path, e))?;
        let line = reader.line();
        let run = match videos.get_mut(&frame.video_id) {
            Some(r) => r,
            None => {
                let tracker = VideoTracker::new(frame.video_id.clone(), config.clone(), fusion)?
                    .with_parallel_classes(args.parallel);
                videos.entry(frame.video_id.clone()).or_insert(VideoRun {
                    tracker,
                    predictions: Vec::new(),
                })
            }
        };

        let flow_frame = flow.as_ref().and_then(|index| {
            let found = index.get(&(frame.video_id.clone(), frame.frame_index));
            if found.is_none() {
                warn!(
                    "no flow record for video {:?} frame {}; using appearance only",
                    frame.video_id, frame.frame_index
                );
            }
            found
        });

        run.tracker.push(&frame, flow_frame).map_err(|e| match e {
            Error::FrameOrder { .. } => Exit::frame_order(format!(
                "{}:{line}: video {:?}: {e}",
                path.display(),
                frame.video_id
            )),
            e => Exit::bad_input(format!("{}:{line}: {e}", path.display())),
        })?;
        run.predictions
            .push((frame.frame_index, run.tracker.prediction()));
        frames += 1;
    }

    create_dir(&args.out)?;
    let mut tubes: Vec<ScoredTube> = Vec::new();
    for run in videos.values() {
        tubes.extend(run.tracker.segments());
    }
    let tubes_path = args.out.join("tubes.json");
    let mut w = BufWriter::new(
        File::create(&tubes_path).with_context(|| format!("creating {}", tubes_path.display()))?,
    );
    write_tubes(&mut w, &tubes)?;
    w.flush()?;

    let pred_path = args.out.join("predictions.csv");
    let mut w = BufWriter::new(
        File::create(&pred_path).with_context(|| format!("creating {}", pred_path.display()))?,
    );
    writeln!(w, "video,observed,frame,class,tube,score")?;
    for (video, run) in &videos {
        let total = run.predictions.len();
        for &p in &checkpoints {
            let (frame, pred) = run.predictions[prefix_len(p, total) - 1];
            match pred {
                Some(pr) => writeln!(
                    w,
                    "{video},{},{frame},{},{},{}",
                    fixed6(p),
                    pr.class_id,
                    pr.tube_id,
                    fixed6(pr.score)
                )?,
                None => writeln!(w, "{video},{},{frame},,,", fixed6(p))?,
            }
        }
    }
    w.flush()?;

    info!(
        "{} videos, {frames} frames, {} segments -> {}",
        videos.len(),
        tubes.len(),
        args.out.display()
    );
    Ok(BuildSummary {
        videos: videos.len(),
        frames,
        segments: tubes.len(),
    })
}
