use std::time::Instant;

use tubelink::simulator::dense_stream;
use tubelink::{Config, FrameDetections, VideoTracker};

use super::{class_count, read_videos};
use crate::args::BenchArgs;
use crate::Exit;

#[derive(Debug, Clone, PartialEq)]
pub struct LatencyReport {
    pub frames: usize,
    pub classes: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
    pub frames_per_sec: f64,
    /// Active tubes per frame, averaged over frames and summed over classes.
    pub mean_active_tubes: f64,
}

/// Times suppression, linking and Viterbi updates per frame. Input is
/// already in memory, so no file I/O is included.
pub fn measure(
    stream: &[FrameDetections],
    config: &Config,
    repetitions: usize,
    parallel: bool,
) -> anyhow::Result<LatencyReport> {
    let mut samples = Vec::with_capacity(stream.len() * repetitions.max(1));
    let mut active = 0usize;
    let started = Instant::now();
    for _ in 0..repetitions.max(1) {
        let mut trackers: std::collections::BTreeMap<&str, VideoTracker> = Default::default();
        for frame in stream {
            let tracker = match trackers.get_mut(frame.video_id.as_str()) {
                Some(t) => t,
                None => trackers.entry(&frame.video_id).or_insert(
                    VideoTracker::new(frame.video_id.clone(), config.clone(), None)?
                        .with_parallel_classes(parallel),
                ),
            };
            let t0 = Instant::now();
            tracker.push_fused(frame.frame_index, &frame.detections)?;
            samples.push(t0.elapsed().as_secs_f64() * 1e3);
            active += tracker.linker().active_count();
        }
    }
    let total = started.elapsed().as_secs_f64();
    if samples.is_empty() {
        anyhow::bail!(Exit::bad_input("no frames to benchmark"));
    }
    let n = samples.len();
    let mean_ms = samples.iter().sum::<f64>() / n as f64;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    let p95_ms = sorted[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
    Ok(LatencyReport {
        frames: n,
        classes: config.class_count,
        mean_ms,
        p95_ms,
        max_ms: sorted[n - 1],
        frames_per_sec: n as f64 / total,
        mean_active_tubes: active as f64 / n as f64,
    })
}

pub fn run(args: &BenchArgs) -> anyhow::Result<LatencyReport> {
    let (stream, classes) = match &args.appearance {
        Some(path) => {
            let classes = class_count(args.tube.classes, path)?;
            let frames = read_videos(path)?
                .into_iter()
                .flat_map(|(_, f)| f)
                .collect();
            (frames, classes)
        }
        None => {
            let classes = args.tube.classes.unwrap_or(24);
            (
                dense_stream(classes, args.instances, args.frames, args.seed)?,
                classes,
            )
        }
    };
    let config = args.tube.config(classes);
    config
        .validate()
        .map_err(|e| Exit::bad_input(e.to_string()))?;
    let report = measure(&stream, &config, args.repetitions, args.parallel)?;
    println!(
        "classes={} n={} frames={} mean_ms={:.4} p95_ms={:.4} max_ms={:.4} fps={:.1} active_tubes={:.1}",
        report.classes,
        config.top_n,
        report.frames,
        report.mean_ms,
        report.p95_ms,
        report.max_ms,
        report.frames_per_sec,
        report.mean_active_tubes
    );
    Ok(report)
}
