use std::fmt;

/// Failure carrying a specific process exit status.
#[derive(Debug)]
pub struct Exit {
    pub code: u8,
    pub message: String,
}

impl Exit {
    /// Malformed input record or missing required input.
    pub const BAD_INPUT: u8 = 2;
    /// Frame indices not strictly increasing within a video.
    pub const FRAME_ORDER: u8 = 3;

    pub fn bad_input(message: impl Into<String>) -> Self {
        Self {
            code: Self::BAD_INPUT,
            message: message.into(),
        }
    }

    pub fn frame_order(message: impl Into<String>) -> Self {
        Self {
            code: Self::FRAME_ORDER,
            message: message.into(),
        }
    }
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

/// Exit status for an error returned by a command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    err.chain()
        .find_map(|e| e.downcast_ref::<Exit>())
        .map_or(1, |e| e.code)
}
