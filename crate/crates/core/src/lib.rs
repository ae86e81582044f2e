//! Online construction and evaluation of spatio-temporal action tubes.
//!
//! Per-frame detection boxes flow through [`fusion`] (appearance + flow),
//! [`suppression`] (per-class NMS, top-n), the greedy [`linker`], and the
//! incremental Viterbi [`labeler`] that trims each tube into action
//! segments. [`predictor`] reads the current tube set to name the video's
//! action early, [`metrics`] scores segments against ground truth, and
//! [`simulator`] produces synthetic scenarios for closed-loop checks.

pub mod config;
pub mod error;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod labeler;
pub mod linker;
pub mod metrics;
pub mod pipeline;
pub mod predictor;
pub mod simulator;
pub mod suppression;

pub use config::Config;
pub use error::{Error, Result};
pub use fusion::FusionStrategy;
pub use geometry::{spatial_iou, BoundingBox, ClassScores, Detection, FrameDetections};
pub use labeler::{Label, Labeling, TubeSegment, ViterbiState};
pub use linker::{ActionTube, LinkerState, TubeBox};
pub use metrics::{GroundTruthTube, MetricCurve, MetricKind, ScoredTube};
pub use pipeline::VideoTracker;
pub use predictor::{predict_label, VideoPrediction};
pub use suppression::{nms_top_n, ClassDetection};
