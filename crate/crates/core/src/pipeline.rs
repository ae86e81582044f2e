//! Per-video streaming driver: fuse, suppress, link, label.

use crate::config::Config;
use crate::error::{Error, Result};
use crate::fusion::FusionStrategy;
use crate::geometry::{Detection, FrameDetections};
use crate::linker::{ClassStep, LinkerState};
use crate::metrics::ScoredTube;
use crate::predictor::{predict_label, VideoPrediction};
use crate::suppression::candidates_per_class;

/// Consumes one video's frames strictly in order and keeps its tube state.
#[derive(Debug, Clone)]
pub struct VideoTracker {
    video_id: String,
    fusion: Option<FusionStrategy>,
    linker: LinkerState,
    frames_seen: usize,
    parallel: bool,
}

impl VideoTracker {
    /// `fusion` is `None` for appearance-only input.
    pub fn new(
        video_id: impl Into<String>,
        config: Config,
        fusion: Option<FusionStrategy>,
    ) -> Result<Self> {
        Ok(Self {
            video_id: video_id.into(),
            fusion,
            linker: LinkerState::new(config)?,
            frames_seen: 0,
            parallel: false,
        })
    }

    /// Advance classes concurrently on the rayon pool.
    pub fn with_parallel_classes(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn config(&self) -> &Config {
        self.linker.config()
    }

    pub fn linker(&self) -> &LinkerState {
        &self.linker
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.linker.current_frame()
    }

    fn check_frame(&self, frame: &FrameDetections) -> Result<()> {
        if frame.video_id != self.video_id {
            return Err(Error::domain(format!(
                "frame of video {:?} fed to tracker of {:?}",
                frame.video_id, self.video_id
            )));
        }
        frame.check_class_count(self.config().class_count)
    }

    /// Fuses the two streams of one frame according to the tracker's mode.
    /// A missing flow frame counts as an empty flow detection set.
    pub fn fuse(
        &self,
        appearance: &FrameDetections,
        flow: Option<&FrameDetections>,
    ) -> Result<Vec<Detection>> {
        self.check_frame(appearance)?;
        if let Some(f) = flow {
            self.check_frame(f)?;
            if f.frame_index != appearance.frame_index {
                return Err(Error::domain(format!(
                    "flow frame {} paired with appearance frame {}",
                    f.frame_index, appearance.frame_index
                )));
            }
        }
        match self.fusion {
            None => Ok(appearance.detections.clone()),
            Some(strategy) => {
                let flow_dets = flow.map(|f| f.detections.as_slice()).unwrap_or(&[]);
                strategy.fuse(&appearance.detections, flow_dets)
            }
        }
    }

    pub fn push(
        &mut self,
        appearance: &FrameDetections,
        flow: Option<&FrameDetections>,
    ) -> Result<Vec<ClassStep>> {
        let fused = self.fuse(appearance, flow)?;
        self.push_fused(appearance.frame_index, &fused)
    }

    /// Runs suppression and linking on already fused detections.
    pub fn push_fused(
        &mut self,
        frame_index: u64,
        detections: &[Detection],
    ) -> Result<Vec<ClassStep>> {
        let candidates = candidates_per_class(detections, self.linker.config())?;
        let steps = if self.parallel {
            self.linker
                .advance_frame_parallel(frame_index, &candidates)?
        } else {
            self.linker.advance_frame(frame_index, &candidates)?
        };
        self.frames_seen += 1;
        Ok(steps)
    }

    pub fn prediction(&self) -> Option<VideoPrediction> {
        predict_label(&self.linker)
    }

    /// Current trimmed segments of every tube.
    pub fn segments(&self) -> Vec<ScoredTube> {
        self.linker
            .segments()
            .iter()
            .map(|s| ScoredTube::from_segment(self.video_id.clone(), s))
            .collect()
    }
}
