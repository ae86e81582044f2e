use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Context;
use log::warn;
use serde::Serialize;
use tubelink::io::{fixed6, read_ground_truth, read_tubes, Fixed};
use tubelink::metrics::{
    auc_at, map_at, map_avg_range, online_curves, MetricCurve, MetricKind, VideoStream,
};
use tubelink::{GroundTruthTube, ScoredTube};

use super::{class_count, create_dir, evenly_spaced, format_error, read_flow_index, read_videos};
use crate::args::EvalArgs;
use crate::{open, Exit};

#[derive(Debug, Serialize)]
struct ClassAp {
    class: usize,
    ap: Fixed,
}

#[derive(Debug, Serialize)]
struct ThresholdReport {
    delta: Fixed,
    map: Option<Fixed>,
    auc: Option<Fixed>,
    per_class: Vec<ClassAp>,
}

#[derive(Debug, Serialize)]
struct Report {
    videos: usize,
    ground_truth_tubes: usize,
    predicted_tubes: usize,
    thresholds: Vec<ThresholdReport>,
    #[serde(rename = "map_0.5:0.95")]
    map_avg: Option<Fixed>,
}

/// Headline numbers, also returned to callers.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    /// `(delta, mAP)` in the order requested.
    pub map: Vec<(f64, Option<f64>)>,
    pub map_avg: Option<f64>,
    pub auc: Vec<(f64, Option<f64>)>,
    pub curves: Option<Vec<MetricCurve>>,
}

fn cell(v: Option<f64>) -> String {
    v.map(fixed6).unwrap_or_default()
}

fn delta_label(d: f64) -> String {
    // 0.2 -> "0.2", 0.75 -> "0.75"
    let s = format!("{d}");
    if s.contains('.') {
        s
    } else {
        format!("{d:.1}")
    }
}

fn load_ground_truth(path: &Path) -> anyhow::Result<Vec<GroundTruthTube>> {
    if !path.exists() {
        anyhow::bail!(Exit::bad_input(format!(
            "ground truth {} not found",
            path.display()
        )));
    }
    let gts = read_ground_truth(open(path)?).map_err(|e| format_error(path, e))?;
    if gts.is_empty() {
        anyhow::bail!(Exit::bad_input(format!(
            "ground truth {} is empty",
            path.display()
        )));
    }
    Ok(gts)
}

pub fn run(args: &EvalArgs) -> anyhow::Result<EvalSummary> {
    if args.deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        anyhow::bail!(Exit::bad_input("--delta values must lie in (0, 1]"));
    }
    let gts = load_ground_truth(&args.gt)?;
    let preds: Vec<ScoredTube> =
        read_tubes(open(&args.tubes)?).map_err(|e| format_error(&args.tubes, e))?;

    let gt_videos: BTreeSet<&str> = gts.iter().map(|g| g.video_id()).collect();
    let unknown: BTreeSet<&str> = preds
        .iter()
        .map(|p| p.video_id.as_str())
        .filter(|v| !gt_videos.contains(v))
        .collect();
    if !unknown.is_empty() {
        warn!("tubes for videos without ground truth: {unknown:?}");
    }

    let mut thresholds = Vec::new();
    let mut summary = EvalSummary {
        map: Vec::new(),
        map_avg: map_avg_range(&preds, &gts)?,
        auc: Vec::new(),
        curves: None,
    };
    for &delta in &args.deltas {
        let report = map_at(&preds, &gts, delta)?;
        let auc = auc_at(&preds, &gts, delta)?;
        summary.map.push((delta, report.mean()));
        summary.auc.push((delta, auc));
        thresholds.push(ThresholdReport {
            delta: Fixed(delta),
            map: report.mean().map(Fixed),
            auc: auc.map(Fixed),
            per_class: report
                .per_class
                .iter()
                .map(|(&class, &ap)| ClassAp {
                    class,
                    ap: Fixed(ap),
                })
                .collect(),
        });
    }

    create_dir(&args.out)?;
    let report = Report {
        videos: gt_videos.len(),
        ground_truth_tubes: gts.len(),
        predicted_tubes: preds.len(),
        thresholds,
        map_avg: summary.map_avg.map(Fixed),
    };
    let path = args.out.join("metrics.json");
    let mut w = BufWriter::new(
        File::create(&path).with_context(|| format!("creating {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut w, &report)?;
    writeln!(w)?;
    w.flush()?;

    // one table row: mAP per threshold, averaged mAP, AUC per threshold
    let path = args.out.join("metrics.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    let mut header: Vec<String> = args
        .deltas
        .iter()
        .map(|d| format!("map@{}", delta_label(*d)))
        .collect();
    header.push("map@0.5:0.95".into());
    header.extend(
        args.deltas
            .iter()
            .map(|d| format!("auc@{}", delta_label(*d))),
    );
    writeln!(w, "{}", header.join(","))?;
    let mut row: Vec<String> = summary.map.iter().map(|&(_, m)| cell(m)).collect();
    row.push(cell(summary.map_avg));
    row.extend(summary.auc.iter().map(|&(_, a)| cell(a)));
    writeln!(w, "{}", row.join(","))?;
    w.flush()?;

    // per-class AP table
    let path = args.out.join("per_class_ap.csv");
    let mut w = BufWriter::new(File::create(&path)?);
    let classes: BTreeSet<usize> = gts.iter().map(|g| g.class_id()).collect();
    let per_delta: Vec<BTreeMap<usize, f64>> = args
        .deltas
        .iter()
        .map(|&d| map_at(&preds, &gts, d).map(|r| r.per_class))
        .collect::<Result<_, _>>()?;
    writeln!(
        w,
        "class,{}",
        args.deltas
            .iter()
            .map(|d| format!("ap@{}", delta_label(*d)))
            .collect::<Vec<_>>()
            .join(",")
    )?;
    for c in classes {
        let cells: Vec<String> = per_delta.iter().map(|m| cell(m.get(&c).copied())).collect();
        writeln!(w, "{c},{}", cells.join(","))?;
    }
    w.flush()?;

    if let Some(stream) = args.stream() {
        let fusion = stream.fusion().map_err(Exit::bad_input)?;
        let classes = class_count(stream.tube.classes, &stream.appearance)?;
        let config = stream.tube.config(classes);
        config
            .validate()
            .map_err(|e| Exit::bad_input(e.to_string()))?;
        let mut flow = match &stream.flow {
            Some(p) => Some(read_flow_index(p)?),
            None => None,
        };
        let videos: Vec<VideoStream> = read_videos(&stream.appearance)?
            .into_iter()
            .map(|(video_id, appearance)| {
                let flow = flow.as_mut().map(|index| {
                    appearance
                        .iter()
                        .filter_map(|f| index.remove(&(video_id.clone(), f.frame_index)))
                        .collect()
                });
                VideoStream {
                    video_id,
                    appearance,
                    flow,
                }
            })
            .collect();
        let checkpoints = evenly_spaced(args.checkpoints)?;
        let curves = online_curves(&videos, &gts, &config, fusion, &args.deltas, &checkpoints)
            .map_err(|e| Exit::bad_input(e.to_string()))?;
        write_curves(&args.out.join("curves.csv"), &curves)?;
        summary.curves = Some(curves);
    }
    Ok(summary)
}

fn write_curves(path: &Path, curves: &[MetricCurve]) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = curves
        .iter()
        .map(|c| match (c.kind, c.delta) {
            (MetricKind::Accuracy, _) | (_, None) => c.kind.name().to_string(),
            (k, Some(d)) => format!("{}@{}", k.name(), delta_label(d)),
        })
        .collect();
    writeln!(w, "observed,{}", header.join(","))?;
    let rows = curves.first().map_or(0, |c| c.fractions.len());
    for i in 0..rows {
        let cells: Vec<String> = curves.iter().map(|c| cell(c.values[i])).collect();
        writeln!(w, "{},{}", fixed6(curves[0].fractions[i]), cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}
