//! Early video-level action prediction from the current tube set.

use crate::linker::LinkerState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoPrediction {
    pub class_id: usize,
    pub tube_id: u32,
    /// Mean box score of the winning tube.
    pub score: f64,
    /// Last frame processed when the prediction was made.
    pub frame_index: u64,
}

/// Labels the video with the class of its highest mean-scoring tube, active
/// or terminated. Ties go to the lower class id, then the older tube.
/// Returns `None` until the first tube exists.
pub fn predict_label(state: &LinkerState) -> Option<VideoPrediction> {
    let frame_index = state.current_frame()?;
    let mut best: Option<VideoPrediction> = None;
    // classes and, within a class, tube ids are visited in increasing order
    // only after sorting; a strict comparison then keeps the first on ties
    let mut tubes: Vec<_> = state.tubes().collect();
    tubes.sort_by_key(|t| (t.class_id, t.tube_id));
    for tube in tubes {
        let Some(score) = tube.mean_score() else {
            continue;
        };
        if best.is_none_or(|b| score > b.score) {
            best = Some(VideoPrediction {
                class_id: tube.class_id,
                tube_id: tube.tube_id,
                score,
                frame_index,
            });
        }
    }
    best
}
