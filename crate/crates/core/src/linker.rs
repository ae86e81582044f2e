//! Greedy online association of per-class detections into action tubes.
//!
//! For every class independently, at each new frame:
//!
//! 1. active tubes are visited in decreasing order of mean box score
//!    (older tube first on ties);
//! 2. each tube takes the highest-scoring still-free candidate whose IoU
//!    with the tube's last box is strictly above `lambda`;
//! 3. a tube without such a candidate records a miss and is terminated once
//!    it has missed `max_misses` consecutive frames;
//! 4. every candidate left over starts a new tube.
//!
//! Each appended box is pushed into the tube's [`ViterbiState`].

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{spatial_iou, BoundingBox};
use crate::labeler::{self, TubeSegment, ViterbiState};
use crate::suppression::ClassDetection;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeBox {
    pub frame_index: u64,
    pub bbox: BoundingBox,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionTube {
    /// Sequence number within the tube's class, in creation order.
    pub tube_id: u32,
    pub class_id: usize,
    pub boxes: Vec<TubeBox>,
    pub miss_count: u32,
    pub viterbi: ViterbiState,
    pub terminated: bool,
    score_sum: f64,
}

impl ActionTube {
    fn start(tube_id: u32, frame_index: u64, det: &ClassDetection, alpha: f64) -> Self {
        let mut tube = Self {
            tube_id,
            class_id: det.class_id,
            boxes: Vec::new(),
            miss_count: 0,
            viterbi: ViterbiState::new(),
            terminated: false,
            score_sum: 0.0,
        };
        tube.push(frame_index, det, alpha);
        tube
    }

    fn push(&mut self, frame_index: u64, det: &ClassDetection, alpha: f64) {
        self.boxes.push(TubeBox {
            frame_index,
            bbox: det.bbox,
            score: det.score,
        });
        self.score_sum += det.score;
        self.viterbi.append_box(det.score, alpha);
    }

    pub fn last_box(&self) -> Option<&TubeBox> {
        self.boxes.last()
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Mean class score of the member boxes, kept as a running sum.
    pub fn mean_score(&self) -> Option<f64> {
        (!self.boxes.is_empty()).then(|| self.score_sum / self.boxes.len() as f64)
    }

    pub fn segments(&self) -> Result<Vec<TubeSegment>> {
        labeler::trim_to_segments(self)
    }
}

pub fn tube_mean_score(tube: &ActionTube) -> Result<f64> {
    tube.mean_score().ok_or(Error::EmptyTube)
}

/// What happened to one class during one [`LinkerState::advance_frame`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassStep {
    pub candidates: usize,
    pub matched: usize,
    pub spawned: usize,
    pub missed: usize,
    pub terminated: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassTubes {
    pub active: Vec<ActionTube>,
    pub terminated: Vec<ActionTube>,
    next_id: u32,
}

impl ClassTubes {
    pub fn iter(&self) -> impl Iterator<Item = &ActionTube> {
        self.active.iter().chain(&self.terminated)
    }

    fn advance(
        &mut self,
        frame_index: u64,
        candidates: &[ClassDetection],
        config: &Config,
    ) -> ClassStep {
        let mut step = ClassStep {
            candidates: candidates.len(),
            ..Default::default()
        };

        let mut order: Vec<usize> = (0..self.active.len()).collect();
        order.sort_by(|&a, &b| {
            let (ta, tb) = (&self.active[a], &self.active[b]);
            tb.score_sum_mean()
                .partial_cmp(&ta.score_sum_mean())
                .unwrap_or(Ordering::Equal)
                .then(ta.tube_id.cmp(&tb.tube_id))
        });

        let mut free = vec![true; candidates.len()];
        for i in order {
            let tube = &mut self.active[i];
            let last = tube
                .boxes
                .last()
                .expect("active tubes are never empty")
                .bbox;
            let mut best: Option<usize> = None;
            for (j, cand) in candidates.iter().enumerate() {
                if !free[j] || spatial_iou(&last, &cand.bbox) <= config.lambda {
                    continue;
                }
                if best.is_none_or(|b| cand.score > candidates[b].score) {
                    best = Some(j);
                }
            }
            match best {
                Some(j) => {
                    free[j] = false;
                    tube.push(frame_index, &candidates[j], config.alpha);
                    tube.miss_count = 0;
                    step.matched += 1;
                }
                None => {
                    tube.miss_count += 1;
                    step.missed += 1;
                    if tube.miss_count >= config.max_misses {
                        tube.terminated = true;
                    }
                }
            }
        }

        if self.active.iter().any(|t| t.terminated) {
            let (done, alive): (Vec<_>, Vec<_>) = self.active.drain(..).partition(|t| t.terminated);
            step.terminated = done.len();
            self.active = alive;
            self.terminated.extend(done);
        }

        for (j, cand) in candidates.iter().enumerate() {
            if free[j] {
                self.active.push(ActionTube::start(
                    self.next_id,
                    frame_index,
                    cand,
                    config.alpha,
                ));
                self.next_id += 1;
                step.spawned += 1;
            }
        }
        step
    }
}

impl ActionTube {
    #[inline]
    fn score_sum_mean(&self) -> f64 {
        self.score_sum / self.boxes.len() as f64
    }
}

/// Tube sets of every class for one video stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkerState {
    config: Config,
    classes: Vec<ClassTubes>,
    current_frame: Option<u64>,
}

impl LinkerState {
    pub fn new(config: Config) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            classes: vec![ClassTubes::default(); config.class_count],
            config,
            current_frame: None,
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn current_frame(&self) -> Option<u64> {
        self.current_frame
    }

    pub fn class(&self, class_id: usize) -> &ClassTubes {
        &self.classes[class_id]
    }

    pub fn classes(&self) -> &[ClassTubes] {
        &self.classes
    }

    /// Every tube, active and terminated, grouped by class.
    pub fn tubes(&self) -> impl Iterator<Item = &ActionTube> {
        self.classes.iter().flat_map(|c| c.iter())
    }

    pub fn active_count(&self) -> usize {
        self.classes.iter().map(|c| c.active.len()).sum()
    }

    fn check(&self, frame_index: u64, candidates: &[Vec<ClassDetection>]) -> Result<()> {
        if let Some(current) = self.current_frame {
            if frame_index <= current {
                return Err(Error::FrameOrder {
                    current,
                    got: frame_index,
                });
            }
        }
        if candidates.len() != self.config.class_count {
            return Err(Error::ClassCountMismatch {
                expected: self.config.class_count,
                found: candidates.len(),
            });
        }
        for (c, list) in candidates.iter().enumerate() {
            if let Some(d) = list.iter().find(|d| d.class_id != c) {
                return Err(Error::domain(format!(
                    "candidate for class {} found in slot {c}",
                    d.class_id
                )));
            }
        }
        Ok(())
    }

    /// Advances every class by one frame. `candidates[c]` holds the class-`c`
    /// output of suppression for this frame.
    pub fn advance_frame(
        &mut self,
        frame_index: u64,
        candidates: &[Vec<ClassDetection>],
    ) -> Result<Vec<ClassStep>> {
        self.check(frame_index, candidates)?;
        let config = &self.config;
        let steps = self
            .classes
            .iter_mut()
            .zip(candidates)
            .map(|(tubes, cands)| tubes.advance(frame_index, cands, config))
            .collect();
        self.current_frame = Some(frame_index);
        Ok(steps)
    }

    /// Same as [`advance_frame`](Self::advance_frame) with classes advanced
    /// on the rayon pool.
    pub fn advance_frame_parallel(
        &mut self,
        frame_index: u64,
        candidates: &[Vec<ClassDetection>],
    ) -> Result<Vec<ClassStep>> {
        self.check(frame_index, candidates)?;
        let config = &self.config;
        let steps = self
            .classes
            .par_iter_mut()
            .zip(candidates)
            .map(|(tubes, cands)| tubes.advance(frame_index, cands, config))
            .collect();
        self.current_frame = Some(frame_index);
        Ok(steps)
    }

    /// Trimmed action segments of every tube, ordered by class, tube id and
    /// start frame.
    pub fn segments(&self) -> Vec<TubeSegment> {
        let mut out: Vec<TubeSegment> = self
            .tubes()
            .flat_map(|t| t.segments().expect("tubes are never empty"))
            .collect();
        out.sort_by_key(|s| (s.class_id, s.tube_id, s.start));
        out
    }
}
