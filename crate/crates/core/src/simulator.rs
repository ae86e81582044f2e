//! Synthetic scenarios: ground-truth tubes plus the detections a detector
//! would produce for them, optionally corrupted.
//!
//! Every instance owns one cell of a grid laid over the frame and wanders
//! inside it with a bounded, edge-reflecting random walk, so boxes of
//! different instances never overlap. All emitted numbers are rounded to
//! 1e-6 so that scenarios survive the six-decimal file formats unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{BoundingBox, ClassScores, Detection, FrameDetections};
use crate::io::quantise;
use crate::linker::TubeBox;
use crate::metrics::GroundTruthTube;

/// Explicit placement of one instance (inclusive 1-based frame range).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstancePlan {
    pub class_id: usize,
    pub start: u64,
    pub end: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TemporalLayout {
    /// `per_class` instances of every listed class, each covering a fraction
    /// of the video drawn uniformly from `coverage_mean ± coverage_spread`,
    /// starting no later than `latest_start` of the way through.
    Random {
        classes: Vec<usize>,
        per_class: usize,
        coverage_mean: f64,
        coverage_spread: f64,
        latest_start: f64,
    },
    Explicit(Vec<InstancePlan>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSpec {
    /// Largest per-frame displacement in pixels along each axis.
    pub max_drift: f64,
    /// Largest per-frame change of width and height in pixels.
    pub size_jitter: f64,
    /// Initial box side as a fraction of the instance's cell.
    pub box_fill: f64,
}

impl Default for MotionSpec {
    fn default() -> Self {
        Self {
            max_drift: 2.0,
            size_jitter: 0.5,
            box_fill: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSpec {
    pub true_mean: f64,
    pub off_mean: f64,
    /// Half-width of the uniform spread around each mean.
    pub spread: f64,
}

impl Default for ScoreSpec {
    fn default() -> Self {
        Self {
            true_mean: 0.8,
            off_mean: 0.1,
            spread: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub video_id: String,
    pub frames: u64,
    pub width: f64,
    pub height: f64,
    pub class_count: usize,
    pub layout: TemporalLayout,
    pub motion: MotionSpec,
    pub scores: ScoreSpec,
}

impl ScenarioSpec {
    /// 200 frames of 320x240 with one instance of every class covering about
    /// 70% of the video.
    pub fn new(video_id: impl Into<String>, class_count: usize, seed: u64) -> Self {
        Self {
            seed,
            video_id: video_id.into(),
            frames: 200,
            width: 320.0,
            height: 240.0,
            class_count,
            layout: TemporalLayout::Random {
                classes: (0..class_count).collect(),
                per_class: 1,
                coverage_mean: 0.7,
                coverage_spread: 0.1,
                latest_start: 1.0,
            },
            motion: MotionSpec::default(),
            scores: ScoreSpec::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::domain(m));
        if self.frames == 0 || self.class_count == 0 {
            return bad("frame and class counts must be positive".into());
        }
        if !(self.width >= 16.0 && self.height >= 16.0) {
            return bad(format!("frame {}x{} too small", self.width, self.height));
        }
        if !(self.motion.box_fill > 0.0 && self.motion.box_fill <= 0.9) {
            return bad(format!(
                "box_fill {} outside (0, 0.9]",
                self.motion.box_fill
            ));
        }
        if self.motion.max_drift < 0.0 || self.motion.size_jitter < 0.0 {
            return bad("motion magnitudes must be >= 0".into());
        }
        let s = &self.scores;
        if !(0.0..=1.0).contains(&s.true_mean)
            || !(0.0..=1.0).contains(&s.off_mean)
            || s.spread < 0.0
        {
            return bad("score means must lie in [0, 1] and spread be >= 0".into());
        }
        match &self.layout {
            TemporalLayout::Random {
                classes,
                per_class,
                coverage_mean,
                coverage_spread,
                latest_start,
            } => {
                if classes.iter().any(|&c| c >= self.class_count) {
                    return bad("layout class out of range".into());
                }
                if *per_class == 0 || classes.is_empty() {
                    return bad("instance count must be positive".into());
                }
                if !(*coverage_mean > 0.0 && *coverage_mean <= 1.0) || *coverage_spread < 0.0 {
                    return bad(format!("coverage {coverage_mean} outside (0, 1]"));
                }
                if !(*latest_start > 0.0 && *latest_start <= 1.0) {
                    return bad(format!("latest_start {latest_start} outside (0, 1]"));
                }
            }
            TemporalLayout::Explicit(plans) => {
                if plans.is_empty() {
                    return bad("no instances".into());
                }
                for p in plans {
                    if p.class_id >= self.class_count {
                        return bad(format!("instance class {} out of range", p.class_id));
                    }
                    if p.start == 0 || p.start > p.end || p.end > self.frames {
                        return bad(format!(
                            "instance frames {}..={} do not fit a {}-frame video",
                            p.start, p.end, self.frames
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub ground_truth: Vec<GroundTruthTube>,
    /// One record per frame `1..=frames`, possibly empty.
    pub frames: Vec<FrameDetections>,
}

fn plan_instances(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Vec<InstancePlan> {
    match &spec.layout {
        TemporalLayout::Explicit(plans) => plans.clone(),
        TemporalLayout::Random {
            classes,
            per_class,
            coverage_mean,
            coverage_spread,
            latest_start,
        } => {
            let t = spec.frames;
            let mut plans = Vec::new();
            for &class_id in classes {
                for _ in 0..*per_class {
                    let cov = (coverage_mean + rng.random_range(-1.0..=1.0) * coverage_spread)
                        .clamp(1.0 / t as f64, 1.0);
                    let len = ((cov * t as f64).round() as u64).clamp(1, t);
                    let latest = ((latest_start * t as f64).ceil() as u64).max(1);
                    let max_start = (t - len + 1).min(latest);
                    let start = rng.random_range(1..=max_start);
                    plans.push(InstancePlan {
                        class_id,
                        start,
                        end: start + len - 1,
                    });
                }
            }
            plans
        }
    }
}

struct Cell {
    x0: f64,
    y0: f64,
    x1: f64,
    y1: f64,
}

fn cells(count: usize, width: f64, height: f64) -> Vec<Cell> {
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    let (cw, ch) = (width / cols as f64, height / rows as f64);
    (0..count)
        .map(|i| {
            let (c, r) = ((i % cols) as f64, (i / cols) as f64);
            Cell {
                x0: c * cw,
                y0: r * ch,
                x1: (c + 1.0) * cw,
                y1: (r + 1.0) * ch,
            }
        })
        .collect()
}

/// Reflects `pos` so that `[pos, pos + size]` stays inside `[lo, hi]`.
fn reflect(pos: f64, size: f64, lo: f64, hi: f64) -> f64 {
    let max = hi - size;
    if max <= lo {
        return lo;
    }
    let mut p = pos;
    if p < lo {
        p = 2.0 * lo - p;
    }
    if p > max {
        p = 2.0 * max - p;
    }
    p.clamp(lo, max)
}

fn walk(
    plan: &InstancePlan,
    cell: &Cell,
    motion: &MotionSpec,
    rng: &mut ChaCha8Rng,
) -> Vec<(u64, BoundingBox)> {
    let (cw, ch) = (cell.x1 - cell.x0, cell.y1 - cell.y0);
    // a 1e-3 margin keeps quantised boxes of neighbouring cells apart
    let (lo_x, hi_x) = (cell.x0 + 1e-3, cell.x1 - 1e-3);
    let (lo_y, hi_y) = (cell.y0 + 1e-3, cell.y1 - 1e-3);
    let (min_w, max_w) = (0.3 * cw, 0.7 * cw);
    let (min_h, max_h) = (0.3 * ch, 0.7 * ch);
    let mut w = (motion.box_fill * cw).clamp(min_w, max_w);
    let mut h = (motion.box_fill * ch).clamp(min_h, max_h);
    let mut x = rng.random_range(lo_x..=(hi_x - w));
    let mut y = rng.random_range(lo_y..=(hi_y - h));

    let mut out = Vec::with_capacity((plan.end - plan.start + 1) as usize);
    for frame in plan.start..=plan.end {
        if frame > plan.start {
            if motion.size_jitter > 0.0 {
                w = (w + rng.random_range(-motion.size_jitter..=motion.size_jitter))
                    .clamp(min_w, max_w);
                h = (h + rng.random_range(-motion.size_jitter..=motion.size_jitter))
                    .clamp(min_h, max_h);
            }
            if motion.max_drift > 0.0 {
                x += rng.random_range(-motion.max_drift..=motion.max_drift);
                y += rng.random_range(-motion.max_drift..=motion.max_drift);
            }
            x = reflect(x, w, lo_x, hi_x);
            y = reflect(y, h, lo_y, hi_y);
        }
        let (qx, qy) = (quantise(x), quantise(y));
        let bbox = BoundingBox::new(qx, qy, quantise(x + w), quantise(y + h))
            .expect("cell-bounded box has positive extent");
        out.push((frame, bbox));
    }
    out
}

fn draw_score(mean: f64, spread: f64, rng: &mut ChaCha8Rng) -> f64 {
    let v = if spread > 0.0 {
        mean + rng.random_range(-spread..=spread)
    } else {
        mean
    };
    quantise(v.clamp(0.0, 1.0))
}

/// Builds ground truth and the matching noise-free detection stream.
/// Deterministic in `spec`.
pub fn generate_scenario(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let plans = plan_instances(spec, &mut rng);
    let grid = cells(plans.len(), spec.width, spec.height);

    let paths: Vec<Vec<(u64, BoundingBox)>> = plans
        .iter()
        .zip(&grid)
        .map(|(p, c)| walk(p, c, &spec.motion, &mut rng))
        .collect();

    let ground_truth = plans
        .iter()
        .zip(&paths)
        .map(|(p, path)| {
            let boxes = path
                .iter()
                .map(|&(frame_index, bbox)| TubeBox {
                    frame_index,
                    bbox,
                    score: 1.0,
                })
                .collect();
            GroundTruthTube::new(spec.video_id.clone(), p.class_id, boxes)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut frames = Vec::with_capacity(spec.frames as usize);
    for frame in 1..=spec.frames {
        let mut detections = Vec::new();
        for (p, path) in plans.iter().zip(&paths) {
            if frame < p.start || frame > p.end {
                continue;
            }
            let bbox = path[(frame - p.start) as usize].1;
            let scores = (0..spec.class_count)
                .map(|c| {
                    let mean = if c == p.class_id {
                        spec.scores.true_mean
                    } else {
                        spec.scores.off_mean
                    };
                    draw_score(mean, spec.scores.spread, &mut rng)
                })
                .collect();
            detections.push(Detection::new(bbox, ClassScores::new(scores)?));
        }
        frames.push(FrameDetections::new(
            spec.video_id.clone(),
            frame,
            detections,
        ));
    }
    Ok(Scenario {
        ground_truth,
        frames,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub drop_prob: f64,
    /// Each corner coordinate moves by up to this many pixels.
    pub box_jitter: f64,
    /// Mean number of false positives injected per frame (Poisson).
    pub false_positive_rate: f64,
    /// Standard deviation of Gaussian noise added to every score.
    pub score_noise_std: f64,
    /// When set, the top-class score of each real detection is redrawn
    /// around this mean instead of perturbed.
    pub true_class_score_mean: Option<f64>,
    /// False-positive scores are uniform in `[0, fp_max_score]`.
    pub fp_max_score: f64,
    /// Length of false-positive score vectors.
    pub class_count: usize,
    pub width: f64,
    pub height: f64,
}

impl NoiseSpec {
    pub fn none(class_count: usize, width: f64, height: f64) -> Self {
        Self {
            drop_prob: 0.0,
            box_jitter: 0.0,
            false_positive_rate: 0.0,
            score_noise_std: 0.0,
            true_class_score_mean: None,
            fp_max_score: 0.3,
            class_count,
            width,
            height,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.drop_prob)
            && (0.0..=1.0).contains(&self.fp_max_score)
            && self.box_jitter >= 0.0
            && self.false_positive_rate >= 0.0
            && self.score_noise_std >= 0.0
            && self
                .true_class_score_mean
                .is_none_or(|m| (0.0..=1.0).contains(&m))
            && self.class_count > 0
            && self.width >= 16.0
            && self.height >= 16.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("invalid noise spec {self:?}")))
        }
    }
}

fn jitter_box(b: &BoundingBox, j: f64, noise: &NoiseSpec, rng: &mut ChaCha8Rng) -> BoundingBox {
    let mut c = b.corners();
    for v in &mut c {
        *v += rng.random_range(-j..=j);
    }
    let x1 = c[0].min(c[2]).clamp(0.0, noise.width - 1.0);
    let y1 = c[1].min(c[3]).clamp(0.0, noise.height - 1.0);
    let x2 = c[0].max(c[2]).clamp(x1 + 1.0, noise.width);
    let y2 = c[1].max(c[3]).clamp(y1 + 1.0, noise.height);
    BoundingBox::new(quantise(x1), quantise(y1), quantise(x2), quantise(y2))
        .expect("repaired box has at least one pixel of extent")
}

/// Drops, jitters and re-scores detections and injects false positives.
/// Deterministic in `(frames, noise, seed)`; a zero-noise spec is the
/// identity.
pub fn corrupt(
    frames: &[FrameDetections],
    noise: &NoiseSpec,
    seed: u64,
) -> Result<Vec<FrameDetections>> {
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let score_noise = Normal::new(0.0, noise.score_noise_std.max(f64::MIN_POSITIVE))
        .map_err(|e| Error::domain(e.to_string()))?;
    let fp_count = (noise.false_positive_rate > 0.0)
        .then(|| Poisson::new(noise.false_positive_rate))
        .transpose()
        .map_err(|e| Error::domain(e.to_string()))?;

    let mut out = Vec::with_capacity(frames.len());
    for frame in frames {
        let mut detections = Vec::with_capacity(frame.detections.len());
        for d in &frame.detections {
            if noise.drop_prob > 0.0 && rng.random::<f64>() < noise.drop_prob {
                continue;
            }
            let bbox = if noise.box_jitter > 0.0 {
                jitter_box(&d.bbox, noise.box_jitter, noise, &mut rng)
            } else {
                d.bbox
            };
            let scores = if noise.score_noise_std > 0.0 || noise.true_class_score_mean.is_some() {
                let top = d
                    .scores
                    .as_slice()
                    .iter()
                    .enumerate()
                    .fold(
                        (0, f64::NEG_INFINITY),
                        |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc },
                    )
                    .0;
                let v = d
                    .scores
                    .as_slice()
                    .iter()
                    .enumerate()
                    .map(|(c, &s)| {
                        let base = match noise.true_class_score_mean {
                            Some(m) if c == top => m,
                            _ => s,
                        };
                        let n = if noise.score_noise_std > 0.0 {
                            score_noise.sample(&mut rng)
                        } else {
                            0.0
                        };
                        quantise((base + n).clamp(0.0, 1.0))
                    })
                    .collect();
                ClassScores::new(v)?
            } else {
                d.scores.clone()
            };
            detections.push(Detection::new(bbox, scores));
        }

        if let Some(dist) = &fp_count {
            let n = dist.sample(&mut rng) as usize;
            for _ in 0..n {
                let w = rng.random_range(10.0..=noise.width / 3.0);
                let h = rng.random_range(10.0..=noise.height / 3.0);
                let x = rng.random_range(0.0..=noise.width - w);
                let y = rng.random_range(0.0..=noise.height - h);
                let bbox =
                    BoundingBox::new(quantise(x), quantise(y), quantise(x + w), quantise(y + h))?;
                let scores = (0..noise.class_count)
                    .map(|_| quantise(rng.random_range(0.0..=noise.fp_max_score)))
                    .collect();
                detections.push(Detection::new(bbox, ClassScores::new(scores)?));
            }
        }
        out.push(FrameDetections::new(
            frame.video_id.clone(),
            frame.frame_index,
            detections,
        ));
    }
    Ok(out)
}

/// One scenario per video, video `i` showing `instances` instances of class
/// `i % class_count`, each starting within the first `latest_start` of the
/// video. Seeds are derived from `seed` and the video index.
pub fn single_label_videos(
    class_count: usize,
    videos: usize,
    instances: usize,
    frames: u64,
    latest_start: f64,
    seed: u64,
) -> Vec<ScenarioSpec> {
    (0..videos)
        .map(|i| {
            let mut spec = ScenarioSpec::new(
                format!("video_{i:03}"),
                class_count,
                seed.wrapping_mul(0x9e37_79b9_7f4a_7c15)
                    .wrapping_add(i as u64),
            );
            spec.frames = frames;
            spec.layout = TemporalLayout::Random {
                classes: vec![i % class_count],
                per_class: instances,
                coverage_mean: 0.7,
                coverage_spread: 0.1,
                latest_start,
            };
            spec
        })
        .collect()
}

/// Noisy stream of `instances` concurrent actions spread round-robin over
/// `class_count` classes on a 1280x720 frame, with a few false positives per
/// frame. Used as the throughput workload.
pub fn dense_stream(
    class_count: usize,
    instances: usize,
    frames: u64,
    seed: u64,
) -> Result<Vec<FrameDetections>> {
    let mut spec = ScenarioSpec::new("dense", class_count, seed);
    spec.frames = frames;
    spec.width = 1280.0;
    spec.height = 720.0;
    spec.layout = TemporalLayout::Random {
        classes: (0..instances).map(|i| i % class_count).collect(),
        per_class: 1,
        coverage_mean: 0.7,
        coverage_spread: 0.2,
        latest_start: 1.0,
    };
    let scenario = generate_scenario(&spec)?;
    let noise = NoiseSpec {
        drop_prob: 0.05,
        box_jitter: 2.0,
        false_positive_rate: 2.0,
        score_noise_std: 0.05,
        ..NoiseSpec::none(class_count, spec.width, spec.height)
    };
    corrupt(&scenario.frames, &noise, seed ^ 0x5eed)
}
