//! File formats.
//!
//! Detections: JSON lines, one frame per line,
//! `{"video": str, "frame": int, "boxes": [{"box": [x1, y1, x2, y2], "scores": [..]}]}`.
//!
//! Tubes (predicted segments and ground truth alike): a JSON array of
//! `{"video", "class", "segment": {"start", "end"}, "score", "boxes": [{"frame", "box", "score"}]}`.
//! On input, `segment` and both scores may be omitted.
//!
//! Every float is written with exactly six decimals so outputs are
//! byte-for-byte reproducible.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;
use thiserror::Error;

use crate::geometry::{BoundingBox, Detection, FrameDetections};
use crate::linker::TubeBox;
use crate::metrics::{GroundTruthTube, ScoredTube};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Float serialised with six decimals.
#[derive(Debug, Clone, Copy)]
pub struct Fixed(pub f64);

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::Error;
        if !self.0.is_finite() {
            return Err(S::Error::custom(format!("cannot serialise {}", self.0)));
        }
        // avoid "-0.000000"
        let v = if self.0 == 0.0 { 0.0 } else { self.0 };
        let text = format!("{v:.6}");
        let text = if text == "-0.000000" {
            "0.000000".to_string()
        } else {
            text
        };
        RawValue::from_string(text)
            .map_err(S::Error::custom)?
            .serialize(serializer)
    }
}

/// Six-decimal rendering used for CSV cells.
pub fn fixed6(v: f64) -> String {
    let text = format!("{v:.6}");
    if text == "-0.000000" {
        "0.000000".into()
    } else {
        text
    }
}

/// Rounds to the nearest multiple of 1e-6, the precision of every output.
pub fn quantise(v: f64) -> f64 {
    (v * 1e6).round() / 1e6
}

fn fixed_box(b: &BoundingBox) -> [Fixed; 4] {
    b.corners().map(Fixed)
}

#[derive(Deserialize)]
struct FrameRecord {
    video: String,
    frame: u64,
    boxes: Vec<Detection>,
}

#[derive(Serialize)]
struct DetectionOut {
    #[serde(rename = "box")]
    bbox: [Fixed; 4],
    scores: Vec<Fixed>,
}

#[derive(Serialize)]
struct FrameOut<'a> {
    video: &'a str,
    frame: u64,
    boxes: Vec<DetectionOut>,
}

pub fn parse_detection_line(line: &str) -> serde_json::Result<FrameDetections> {
    let r: FrameRecord = serde_json::from_str(line)?;
    Ok(FrameDetections::new(r.video, r.frame, r.boxes))
}

pub fn detection_line(frame: &FrameDetections) -> String {
    let out = FrameOut {
        video: &frame.video_id,
        frame: frame.frame_index,
        boxes: frame
            .detections
            .iter()
            .map(|d| DetectionOut {
                bbox: fixed_box(&d.bbox),
                scores: d.scores.as_slice().iter().copied().map(Fixed).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&out).expect("finite detection values serialise")
}

/// Streams frame records from a JSONL source. Blank lines are skipped;
/// errors carry the 1-based line number.
pub struct DetectionReader<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> DetectionReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    /// Line number of the record most recently returned.
    pub fn line(&self) -> usize {
        self.line
    }
}

impl<R: BufRead> Iterator for DetectionReader<R> {
    type Item = Result<FrameDetections, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line += 1;
            let text = self.buf.trim();
            if text.is_empty() {
                continue;
            }
            return Some(
                parse_detection_line(text).map_err(|e| FormatError::Malformed {
                    line: self.line,
                    message: e.to_string(),
                }),
            );
        }
    }
}

pub fn read_detections<R: BufRead>(reader: R) -> Result<Vec<FrameDetections>, FormatError> {
    DetectionReader::new(reader).collect()
}

pub fn write_detections<W: Write>(mut w: W, frames: &[FrameDetections]) -> std::io::Result<()> {
    for f in frames {
        writeln!(w, "{}", detection_line(f))?;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct Span {
    start: u64,
    end: u64,
}

#[derive(Deserialize)]
struct TubeBoxIn {
    frame: u64,
    #[serde(rename = "box")]
    bbox: BoundingBox,
    #[serde(default = "unit_score")]
    score: f64,
}

fn unit_score() -> f64 {
    1.0
}

/// `segment` and scores are optional on input; ground truth rarely has them.
#[derive(Deserialize)]
struct TubeIn {
    video: String,
    class: usize,
    segment: Option<Span>,
    #[serde(default = "unit_score")]
    score: f64,
    boxes: Vec<TubeBoxIn>,
}

#[derive(Serialize)]
struct TubeBoxOut {
    frame: u64,
    #[serde(rename = "box")]
    bbox: [Fixed; 4],
    score: Fixed,
}

#[derive(Serialize)]
struct TubeOut<'a> {
    video: &'a str,
    class: usize,
    segment: Span,
    score: Fixed,
    boxes: Vec<TubeBoxOut>,
}

fn tube_out<'a>(video: &'a str, class: usize, score: f64, boxes: &[TubeBox]) -> TubeOut<'a> {
    TubeOut {
        video,
        class,
        segment: Span {
            start: boxes.first().map_or(0, |b| b.frame_index),
            end: boxes.last().map_or(0, |b| b.frame_index),
        },
        score: Fixed(score),
        boxes: boxes
            .iter()
            .map(|b| TubeBoxOut {
                frame: b.frame_index,
                bbox: fixed_box(&b.bbox),
                score: Fixed(b.score),
            })
            .collect(),
    }
}

fn write_array<W: Write, T: Serialize>(mut w: W, items: &[T]) -> std::io::Result<()> {
    if items.is_empty() {
        return writeln!(w, "[]");
    }
    writeln!(w, "[")?;
    for (i, item) in items.iter().enumerate() {
        let sep = if i + 1 == items.len() { "" } else { "," };
        writeln!(w, "  {}{sep}", serde_json::to_string(item)?)?;
    }
    writeln!(w, "]")
}

/// Writes segments with one tube object per line.
pub fn write_tubes<W: Write>(w: W, tubes: &[ScoredTube]) -> std::io::Result<()> {
    let out: Vec<_> = tubes
        .iter()
        .map(|t| tube_out(&t.video_id, t.class_id, t.score, &t.boxes))
        .collect();
    write_array(w, &out)
}

pub fn write_ground_truth<W: Write>(w: W, gts: &[GroundTruthTube]) -> std::io::Result<()> {
    let out: Vec<_> = gts
        .iter()
        .map(|g| tube_out(g.video_id(), g.class_id(), 1.0, g.boxes()))
        .collect();
    write_array(w, &out)
}

fn read_tube_records(text: &str) -> Result<Vec<TubeIn>, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::Malformed {
        line: e.line(),
        message: e.to_string(),
    })
}

fn to_boxes(r: &TubeIn) -> Result<Vec<TubeBox>, String> {
    if r.boxes.windows(2).any(|w| w[0].frame >= w[1].frame) {
        return Err("tube box frames must be strictly increasing".into());
    }
    if let (Some(first), Some(last), Some(seg)) = (r.boxes.first(), r.boxes.last(), &r.segment) {
        if first.frame != seg.start || last.frame != seg.end {
            return Err("segment bounds disagree with box frames".into());
        }
    }
    r.boxes
        .iter()
        .map(|b| {
            if !(0.0..=1.0).contains(&b.score) {
                return Err(format!("box score {} outside [0, 1]", b.score));
            }
            Ok(TubeBox {
                frame_index: b.frame,
                bbox: b.bbox,
                score: b.score,
            })
        })
        .collect()
}

pub fn read_tubes<R: std::io::Read>(mut r: R) -> Result<Vec<ScoredTube>, FormatError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    read_tube_records(&text)?
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            let boxes = to_boxes(&rec).map_err(|message| FormatError::Malformed {
                line: i + 2,
                message,
            })?;
            Ok(ScoredTube {
                video_id: rec.video,
                class_id: rec.class,
                score: rec.score,
                boxes,
            })
        })
        .collect()
}

pub fn read_ground_truth<R: std::io::Read>(mut r: R) -> Result<Vec<GroundTruthTube>, FormatError> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    read_tube_records(&text)?
        .into_iter()
        .enumerate()
        .map(|(i, rec)| {
            let malformed = |message: String| FormatError::Malformed {
                line: i + 2,
                message,
            };
            let boxes = to_boxes(&rec).map_err(malformed)?;
            GroundTruthTube::new(rec.video, rec.class, boxes).map_err(|e| malformed(e.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ClassScores;

    #[test]
    fn fixed_formatting() {
        assert_eq!(serde_json::to_string(&Fixed(0.5)).unwrap(), "0.500000");
        assert_eq!(serde_json::to_string(&Fixed(-0.0)).unwrap(), "0.000000");
        assert_eq!(
            serde_json::to_string(&Fixed(1.0 / 3.0)).unwrap(),
            "0.333333"
        );
        assert!(serde_json::to_string(&Fixed(f64::NAN)).is_err());
        assert_eq!(fixed6(-1e-9), "0.000000");
    }

    #[test]
    fn detection_line_format() {
        let f = FrameDetections::new(
            "vid",
            3,
            vec![Detection::new(
                BoundingBox::new(1.0, 2.0, 3.5, 4.0).unwrap(),
                ClassScores::new(vec![0.25, 0.75]).unwrap(),
            )],
        );
        let line = detection_line(&f);
        assert_eq!(
            line,
            r#"{"video":"vid","frame":3,"boxes":[{"box":[1.000000,2.000000,3.500000,4.000000],"scores":[0.250000,0.750000]}]}"#
        );
        assert_eq!(parse_detection_line(&line).unwrap(), f);
    }

    #[test]
    fn reader_reports_line_numbers() {
        let text = "{\"video\":\"v\",\"frame\":1,\"boxes\":[]}\n\n{\"video\":\"v\",\"frame\":2,\"boxes\":[{\"box\":[0,0,0,1],\"scores\":[0.5]}]}\n";
        let mut r = DetectionReader::new(text.as_bytes());
        assert!(r.next().unwrap().is_ok());
        match r.next().unwrap() {
            Err(FormatError::Malformed { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected malformed record, got {other:?}"),
        }
        assert!(r.next().is_none());
    }

    #[test]
    fn rejects_bad_scores() {
        let line = r#"{"video":"v","frame":1,"boxes":[{"box":[0,0,1,1],"scores":[1.5]}]}"#;
        assert!(parse_detection_line(line).is_err());
    }

    #[test]
    fn tubes_roundtrip() {
        let boxes: Vec<TubeBox> = (4..=6)
            .map(|f| TubeBox {
                frame_index: f,
                bbox: BoundingBox::new(f as f64, 0.0, f as f64 + 10.0, 10.0).unwrap(),
                score: 0.5,
            })
            .collect();
        let tubes = vec![ScoredTube {
            video_id: "v".into(),
            class_id: 2,
            score: 0.5,
            boxes: boxes.clone(),
        }];
        let mut buf = Vec::new();
        write_tubes(&mut buf, &tubes).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(r#""segment":{"start":4,"end":6}"#));
        assert_eq!(read_tubes(buf.as_slice()).unwrap(), tubes);

        let gt = vec![GroundTruthTube::new("v", 2, boxes).unwrap()];
        let mut buf = Vec::new();
        write_ground_truth(&mut buf, &gt).unwrap();
        assert_eq!(read_ground_truth(buf.as_slice()).unwrap(), gt);

        let mut empty = Vec::new();
        write_tubes(&mut empty, &[]).unwrap();
        assert_eq!(empty, b"[]\n");
    }

    #[test]
    fn gt_must_be_contiguous() {
        let text = r#"[{"video":"v","class":0,"segment":{"start":1,"end":3},"score":1.0,
            "boxes":[{"frame":1,"box":[0,0,1,1],"score":1.0},{"frame":3,"box":[0,0,1,1],"score":1.0}]}]"#;
        assert!(read_ground_truth(text.as_bytes()).is_err());
        assert_eq!(read_tubes(text.as_bytes()).unwrap().len(), 1);
    }

    #[test]
    fn minimal_ground_truth_record() {
        let text = r#"[{"video":"v","class":1,"boxes":[{"frame":4,"box":[0,0,2,2]},{"frame":5,"box":[0,0,2,2]}]}]"#;
        let gt = read_ground_truth(text.as_bytes()).unwrap();
        assert_eq!((gt[0].start(), gt[0].end(), gt[0].class_id()), (4, 5, 1));
    }
}
