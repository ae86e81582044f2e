use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tubelink::{Config, FusionStrategy};

#[derive(Debug, Parser)]
#[command(
    name = "tubelink",
    version,
    about = "Online action tube generation and evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build trimmed action tubes from per-frame detections.
    Build(BuildArgs),
    /// Score tubes against ground truth.
    Eval(EvalArgs),
    /// Measure per-frame tube generation latency.
    Bench(BenchArgs),
    /// Write a synthetic dataset: detections and ground truth.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    UnionSet,
    Boost,
    None,
}

#[derive(Debug, Clone, Args)]
pub struct TubeArgs {
    /// Linking IoU threshold.
    #[arg(long, default_value_t = Config::DEFAULT_LAMBDA)]
    pub lambda: f64,
    /// Detections kept per class and frame.
    #[arg(long, default_value_t = Config::DEFAULT_TOP_N)]
    pub n: usize,
    /// Consecutive misses that terminate a tube.
    #[arg(long, default_value_t = Config::DEFAULT_MAX_MISSES)]
    pub k: u32,
    /// Label-switch penalty of the temporal labelling.
    #[arg(long, default_value_t = Config::DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Per-class non-maximum suppression overlap
    #[arg(long = "nms-iou", default_value_t = Config::DEFAULT_NMS_IOU)]
    pub nms_iou: f64,
    /// Appearance/flow association IoU for boost fusion.
    #[arg(long = "boost-iou", default_value_t = Config::DEFAULT_BOOST_IOU)]
    pub boost_iou: f64,
    /// Detections scoring below this are dropped before suppression
    #[arg(long = "min-score", default_value_t = 0.0)]
    pub min_score: f64,
    /// Number of action classes; inferred from the first detection if omitted.
    #[arg(long)]
    pub classes: Option<usize>,
}

impl TubeArgs {
    pub fn config(&self, class_count: usize) -> Config {
        Config {
            lambda: self.lambda,
            top_n: self.n,
            max_misses: self.k,
            alpha: self.alpha,
            nms_iou: self.nms_iou,
            min_score: self.min_score,
            boost_iou: self.boost_iou,
            class_count,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    /// Appearance-stream detections (JSON lines).
    #[arg(long)]
    pub appearance: PathBuf,
    /// Flow-stream detections (JSON lines).
    #[arg(long)]
    pub flow: Option<PathBuf>,
    /// Fusion of the two streams; defaults to union-set with --flow, none without.
    #[arg(long, value_enum)]
    pub fusion: Option<FusionArg>,
    #[command(flatten)]
    pub tube: TubeArgs,
}

impl StreamArgs {
    /// Resolves the fusion mode. A flow stream is required exactly when a
    /// fusion strategy is selected.
    pub fn fusion(&self) -> Result<Option<FusionStrategy>, String> {
        let arg = self.fusion.unwrap_or(if self.flow.is_some() {
            FusionArg::UnionSet
        } else {
            FusionArg::None
        });
        match (arg, self.flow.is_some()) {
            (FusionArg::None, false) => Ok(None),
            (FusionArg::None, true) => Err("--flow given but --fusion is none".into()),
            (_, false) => Err("--fusion union-set/boost requires --flow".into()),
            (FusionArg::UnionSet, true) => Ok(Some(FusionStrategy::UnionSet)),
            (FusionArg::Boost, true) => Ok(Some(FusionStrategy::Boost {
                iou_threshold: self.tube.boost_iou,
            })),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct BuildArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Output directory for tubes.json and predictions.csv
    #[arg(long)]
    pub out: PathBuf,
    /// Number of evenly spaced observation checkpoints in the prediction log.
    #[arg(long, default_value_t = 10)]
    pub checkpoints: usize,
    /// Advance classes in parallel.
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Tubes written by `build`.
    #[arg(long)]
    pub tubes: PathBuf,
    /// Ground-truth tubes.
    #[arg(long)]
    pub gt: PathBuf,
    /// IoU thresholds (repeatable).
    #[arg(long = "delta", default_values_t = [0.2, 0.5, 0.75])]
    pub deltas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub checkpoints: usize,
    /// Detections to replay for observation-percentage curves.
    #[arg(long)]
    pub appearance: Option<PathBuf>,
    #[arg(long)]
    pub flow: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub fusion: Option<FusionArg>,
    #[command(flatten)]
    pub tube: TubeArgs,
    /// Output directory for the metric files
    #[arg(long)]
    pub out: PathBuf,
}

impl EvalArgs {
    pub fn stream(&self) -> Option<StreamArgs> {
        self.appearance.as_ref().map(|a| StreamArgs {
            appearance: a.clone(),
            flow: self.flow.clone(),
            fusion: self.fusion,
            tube: self.tube.clone(),
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Benchmark on this detection file instead of a synthetic stream.
    #[arg(long)]
    pub appearance: Option<PathBuf>,
    #[command(flatten)]
    pub tube: TubeArgs,
    /// Concurrent action instances in the synthetic stream.
    #[arg(long, default_value_t = 20)]
    pub instances: usize,
    #[arg(long, default_value_t = 300)]
    pub frames: u64,
    #[arg(long, default_value_t = 5)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub parallel: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 3)]
    pub videos: usize,
    /// Action instances per video.
    #[arg(long, default_value_t = 2)]
    pub instances: usize,
    #[arg(long, default_value_t = 200)]
    pub frames: u64,
    /// Latest instance onset as a fraction of the video.
    #[arg(long = "latest-start", default_value_t = 1.0)]
    pub latest_start: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub drop: f64,
    #[arg(long, default_value_t = 0.0)]
    pub jitter: f64,
    /// Mean false positives per frame.
    #[arg(long = "fp-rate", default_value_t = 0.0)]
    pub fp_rate: f64,
    #[arg(long = "score-noise", default_value_t = 0.0)]
    pub score_noise: f64,
    /// Also write an independently corrupted flow stream.
    #[arg(long)]
    pub flow: bool,
}
