use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tubelink::io::{read_detections, read_ground_truth, write_tubes};
use tubelink::{Config, VideoTracker};

fn tubelink(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tubelink"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, extra: &[&str]) -> PathBuf {
    let data = dir.join("data");
    let mut args = vec![
        "simulate",
        "--out",
        p(&data),
        "--frames",
        "80",
        "--seed",
        "3",
    ];
    args.extend_from_slice(extra);
    let out = tubelink(&args);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    data
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn malformed_record_reports_line_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("det.jsonl");
    fs::write(
        &input,
        "{\"video\":\"v\",\"frame\":1,\"boxes\":[]}\n{\"video\":\"v\",\"frame\":2,\"boxes\":[{\"box\":[5,5,1,1],\"scores\":[0.5]}]}\n",
    )
    .unwrap();
    let out = tubelink(&[
        "build",
        "--appearance",
        p(&input),
        "--out",
        p(&dir.path().join("o")),
        "--classes",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(":2:"), "{}", stderr(&out));
}

#[test]
fn frame_order_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("det.jsonl");
    fs::write(
        &input,
        "{\"video\":\"v\",\"frame\":2,\"boxes\":[]}\n{\"video\":\"v\",\"frame\":2,\"boxes\":[]}\n",
    )
    .unwrap();
    let out = tubelink(&[
        "build",
        "--appearance",
        p(&input),
        "--out",
        p(&dir.path().join("o")),
        "--classes",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains(":2:"), "{}", stderr(&out));
}

#[test]
fn interleaved_videos_are_tracked_independently() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("det.jsonl");
    fs::write(
        &input,
        "{\"video\":\"a\",\"frame\":1,\"boxes\":[]}\n{\"video\":\"b\",\"frame\":1,\"boxes\":[]}\n{\"video\":\"a\",\"frame\":2,\"boxes\":[]}\n",
    )
    .unwrap();
    let out = tubelink(&[
        "build",
        "--appearance",
        p(&input),
        "--out",
        p(&dir.path().join("o")),
        "--classes",
        "1",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn missing_ground_truth_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), &[]);
    let o = dir.path().join("o");
    assert!(tubelink(&[
        "build",
        "--appearance",
        p(&data.join("appearance.jsonl")),
        "--out",
        p(&o)
    ])
    .status
    .success());
    let out = tubelink(&[
        "eval",
        "--tubes",
        p(&o.join("tubes.json")),
        "--gt",
        p(&dir.path().join("nope.json")),
        "--out",
        p(&o),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let empty = dir.path().join("empty.json");
    fs::write(&empty, "[]").unwrap();
    let out = tubelink(&[
        "eval",
        "--tubes",
        p(&o.join("tubes.json")),
        "--gt",
        p(&empty),
        "--out",
        p(&o),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fusion_without_flow_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), &[]);
    let out = tubelink(&[
        "build",
        "--appearance",
        p(&data.join("appearance.jsonl")),
        "--fusion",
        "boost",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn eval_emits_default_columns_and_ten_curve_rows() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), &["--flow", "--drop", "0.1", "--fp-rate", "0.5"]);
    let o = dir.path().join("o");
    let app = data.join("appearance.jsonl");
    let flow = data.join("flow.jsonl");
    for fusion in ["union-set", "boost"] {
        let out = tubelink(&[
            "build",
            "--appearance",
            p(&app),
            "--flow",
            p(&flow),
            "--fusion",
            fusion,
            "--out",
            p(&o),
        ]);
        assert!(out.status.success(), "{fusion}: {}", stderr(&out));
    }
    let out = tubelink(&[
        "eval",
        "--tubes",
        p(&o.join("tubes.json")),
        "--gt",
        p(&data.join("gt.json")),
        "--appearance",
        p(&app),
        "--flow",
        p(&flow),
        "--fusion",
        "boost",
        "--out",
        p(&o),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));

    let metrics = fs::read_to_string(o.join("metrics.csv")).unwrap();
    let header = metrics.lines().next().unwrap();
    assert_eq!(
        header,
        "map@0.2,map@0.5,map@0.75,map@0.5:0.95,auc@0.2,auc@0.5,auc@0.75"
    );
    let row: Vec<&str> = metrics.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row.len(), 7);
    for cell in row {
        let v: f64 = cell.parse().unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert_eq!(cell.split('.').nth(1).unwrap().len(), 6, "{cell}");
    }

    let curves = fs::read_to_string(o.join("curves.csv")).unwrap();
    let lines: Vec<&str> = curves.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("observed,") && lines[0].ends_with(",accuracy"));
    assert!(lines[1].starts_with("0.100000,"));
    assert!(lines[10].starts_with("1.000000,"));

    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(o.join("metrics.json")).unwrap()).unwrap();
    assert!(json.is_object());
}

#[test]
fn streaming_build_matches_offline_tracking() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(
        dir.path(),
        &[
            "--videos",
            "2",
            "--drop",
            "0.2",
            "--jitter",
            "2",
            "--fp-rate",
            "1",
        ],
    );
    let app = data.join("appearance.jsonl");
    let o = dir.path().join("o");
    let out = tubelink(&["build", "--appearance", p(&app), "--out", p(&o)]);
    assert!(out.status.success(), "{}", stderr(&out));

    let frames = read_detections(std::io::BufReader::new(fs::File::open(&app).unwrap())).unwrap();
    let mut videos: Vec<String> = frames.iter().map(|f| f.video_id.clone()).collect();
    videos.sort();
    videos.dedup();
    let mut tubes = Vec::new();
    for v in videos {
        let mut t = VideoTracker::new(v.clone(), Config::new(3), None).unwrap();
        for f in frames.iter().filter(|f| f.video_id == v) {
            t.push(f, None).unwrap();
        }
        tubes.extend(t.segments());
    }
    let mut expected = Vec::new();
    write_tubes(&mut expected, &tubes).unwrap();
    assert_eq!(fs::read(o.join("tubes.json")).unwrap(), expected);
}

#[test]
fn ground_truth_round_trips_through_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), &["--videos", "2", "--instances", "3"]);
    let gts = read_ground_truth(std::io::BufReader::new(
        fs::File::open(data.join("gt.json")).unwrap(),
    ))
    .unwrap();
    assert_eq!(gts.len(), 2 * 3);
}

#[test]
fn bench_reports_latency() {
    let out = tubelink(&["bench", "--frames", "30", "--repetitions", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("ms"));
}
