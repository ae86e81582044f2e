use crate::error::{Error, Result};

/// Tube-generation parameters shared by suppression, linking and labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    /// Minimum IoU (exclusive) between a tube's last box and a candidate.
    pub lambda: f64,
    /// Detections kept per class per frame after NMS.
    pub top_n: usize,
    /// Consecutive misses after which a tube is terminated.
    pub max_misses: u32,
    /// Penalty per action/background label switch in the temporal labelling.
    pub alpha: f64,
    pub nms_iou: f64,
    /// Scores below this are dropped before NMS. Zero disables the floor.
    pub min_score: f64,
    /// Appearance/flow association threshold for boost fusion.
    pub boost_iou: f64,
    pub class_count: usize,
}

impl Config {
    pub const DEFAULT_LAMBDA: f64 = 0.1;
    pub const DEFAULT_TOP_N: usize = 10;
    pub const DEFAULT_MAX_MISSES: u32 = 5;
    pub const DEFAULT_ALPHA: f64 = 3.0;
    pub const DEFAULT_NMS_IOU: f64 = 0.45;
    pub const DEFAULT_BOOST_IOU: f64 = 0.3;

    pub fn new(class_count: usize) -> Self {
        Self {
            lambda: Self::DEFAULT_LAMBDA,
            top_n: Self::DEFAULT_TOP_N,
            max_misses: Self::DEFAULT_MAX_MISSES,
            alpha: Self::DEFAULT_ALPHA,
            nms_iou: Self::DEFAULT_NMS_IOU,
            min_score: 0.0,
            boost_iou: Self::DEFAULT_BOOST_IOU,
            class_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        unit("lambda", self.lambda)?;
        unit("nms_iou", self.nms_iou)?;
        unit("min_score", self.min_score)?;
        unit("boost_iou", self.boost_iou)?;
        if self.top_n == 0 {
            return Err(Error::Config("top_n must be positive".into()));
        }
        if self.max_misses == 0 {
            return Err(Error::Config("max_misses must be positive".into()));
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::Config(format!(
                "alpha = {} must be >= 0",
                self.alpha
            )));
        }
        if self.class_count == 0 {
            return Err(Error::Config("class_count must be positive".into()));
        }
        Ok(())
    }
}
