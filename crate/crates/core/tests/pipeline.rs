use tubelink::io::{detection_line, parse_detection_line, read_tubes, write_tubes};
use tubelink::metrics::{map_at, st_iou};
use tubelink::simulator::{generate_scenario, ScenarioSpec};
use tubelink::{Config, FusionStrategy, VideoTracker};

#[test]
fn detection_records_round_trip() {
    let s = generate_scenario(&ScenarioSpec::new("v", 2, 9)).unwrap();
    for f in &s.frames {
        let line = detection_line(f);
        let back = parse_detection_line(&line).unwrap();
        assert_eq!(&back, f);
        assert_eq!(detection_line(&back), line);
    }
}

#[test]
fn fused_duplicate_stream_still_recovers_instances() {
    let s = generate_scenario(&ScenarioSpec::new("v", 2, 4)).unwrap();
    for fusion in [
        FusionStrategy::UnionSet,
        FusionStrategy::Boost { iou_threshold: 0.3 },
    ] {
        let mut t = VideoTracker::new("v", Config::new(2), Some(fusion)).unwrap();
        for f in &s.frames {
            t.push(f, Some(f)).unwrap();
        }
        let tubes = t.segments();
        for g in &s.ground_truth {
            let best = tubes
                .iter()
                .filter(|p| p.class_id == g.class_id())
                .map(|p| st_iou(p, g).unwrap())
                .fold(0.0, f64::max);
            assert!(best >= 0.95, "{fusion:?}: {best}");
        }
        assert_eq!(
            map_at(&tubes, &s.ground_truth, 0.5).unwrap().mean(),
            Some(1.0)
        );
    }
}

#[test]
fn written_tubes_read_back() {
    let s = generate_scenario(&ScenarioSpec::new("v", 3, 1)).unwrap();
    let mut t = VideoTracker::new("v", Config::new(3), None).unwrap();
    for f in &s.frames {
        t.push(f, None).unwrap();
    }
    let tubes = t.segments();
    let mut buf = Vec::new();
    write_tubes(&mut buf, &tubes).unwrap();
    let back = read_tubes(buf.as_slice()).unwrap();
    assert_eq!(back.len(), tubes.len());
    let mut again = Vec::new();
    write_tubes(&mut again, &back).unwrap();
    assert_eq!(buf, again);
}
