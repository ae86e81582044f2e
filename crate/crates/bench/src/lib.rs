//! Workloads for the tube-generation benchmarks.

use tubelink::suppression::{candidates_per_class, ClassDetection};
use tubelink::{Config, FrameDetections};

pub use tubelink::simulator::dense_stream;

/// Suppression output for every frame, so linker benchmarks exclude NMS.
pub fn candidates(stream: &[FrameDetections], config: &Config) -> Vec<Vec<Vec<ClassDetection>>> {
    stream
        .iter()
        .map(|f| candidates_per_class(&f.detections, config).expect("consistent class count"))
        .collect()
}
