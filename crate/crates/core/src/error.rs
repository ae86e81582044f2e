use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid bounding box ({x1}, {y1}, {x2}, {y2}): {reason}")]
    InvalidBox {
        x1: f64,
        y1: f64,
        x2: f64,
        y2: f64,
        reason: &'static str,
    },

    #[error("score {value} at class {class_id} is outside [0, 1]")]
    InvalidScore { class_id: usize, value: f64 },

    #[error("class count mismatch: expected {expected}, found {found}")]
    ClassCountMismatch { expected: usize, found: usize },

    #[error("class id {class_id} out of range for {class_count} classes")]
    ClassOutOfRange { class_id: usize, class_count: usize },

    #[error("frame {got} does not follow frame {current}")]
    FrameOrder { current: u64, got: u64 },

    #[error("tube has no boxes")]
    EmptyTube,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Domain(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
