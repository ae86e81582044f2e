//! Online temporal labelling of a tube's boxes as action or background.
//!
//! A labelling `l_1..l_T` of a tube with scores `s_1..s_T` has energy
//!
//! ```text
//! E(l) = sum_r u(l_r, s_r) - alpha * #{r >= 2 : l_r != l_(r-1)}
//! u(action, s) = s,  u(background, s) = 1 - s
//! ```
//!
//! [`ViterbiState`] keeps the forward accumulators and backpointers so that a
//! new box costs O(1) and the optimal labelling of the current prefix can be
//! read back in O(T) at any time.

use crate::error::{Error, Result};
use crate::linker::{ActionTube, TubeBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Action,
    Background,
}

impl Label {
    const ALL: [Label; 2] = [Label::Action, Label::Background];

    fn index(self) -> usize {
        match self {
            Label::Action => 0,
            Label::Background => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling(pub Vec<Label>);

impl Labeling {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Label] {
        &self.0
    }

    /// Half-open index ranges of maximal action runs.
    pub fn action_runs(&self) -> Vec<std::ops::Range<usize>> {
        let mut runs = Vec::new();
        let mut start = None;
        for (i, &l) in self.0.iter().enumerate() {
            match (l, start) {
                (Label::Action, None) => start = Some(i),
                (Label::Background, Some(s)) => {
                    runs.push(s..i);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push(s..self.0.len());
        }
        runs
    }
}

pub fn unary_score(label: Label, score: f64) -> f64 {
    match label {
        Label::Action => score,
        Label::Background => 1.0 - score,
    }
}

/// Direct evaluation of the labelling energy.
pub fn labeling_energy(labels: &Labeling, scores: &[f64], alpha: f64) -> Result<f64> {
    if labels.len() != scores.len() {
        return Err(Error::domain(format!(
            "labelling has {} entries but {} scores were given",
            labels.len(),
            scores.len()
        )));
    }
    let unary: f64 = labels
        .0
        .iter()
        .zip(scores)
        .map(|(&l, &s)| unary_score(l, s))
        .sum();
    let switches = labels.0.windows(2).filter(|w| w[0] != w[1]).count();
    Ok(unary - alpha * switches as f64)
}

/// Best predecessor for entering `to`; equal values prefer `Action`.
#[inline]
fn best_predecessor(acc: [f64; 2], to: Label, alpha: f64) -> (Label, f64) {
    let from = |l: Label| acc[l.index()] - if l == to { 0.0 } else { alpha };
    let a = from(Label::Action);
    let b = from(Label::Background);
    if a >= b {
        (Label::Action, a)
    } else {
        (Label::Background, b)
    }
}

#[inline]
fn final_label(acc: [f64; 2]) -> Label {
    if acc[0] >= acc[1] {
        Label::Action
    } else {
        Label::Background
    }
}

/// Incremental two-label Viterbi table for one tube.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ViterbiState {
    /// Best energy of a labelling of boxes `1..=len` ending in each label,
    /// indexed by `Label::index`.
    acc: [f64; 2],
    /// `backptr[r - 1][l]` is the label at position `r - 1` on the best path
    /// that has label `l` at position `r` (zero-based, `r >= 1`).
    backptr: Vec<[Label; 2]>,
    len: usize,
}

impl ViterbiState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Best energy among labellings ending in action, resp. background.
    pub fn accumulators(&self) -> (f64, f64) {
        (self.acc[0], self.acc[1])
    }

    pub fn backpointers(&self) -> &[[Label; 2]] {
        &self.backptr
    }

    pub fn best_energy(&self) -> Option<f64> {
        (self.len > 0).then(|| self.acc[0].max(self.acc[1]))
    }

    /// Extends the chain by one box with class score `score`.
    pub fn append_box(&mut self, score: f64, alpha: f64) {
        if self.len == 0 {
            self.acc = [
                unary_score(Label::Action, score),
                unary_score(Label::Background, score),
            ];
        } else {
            let mut next = [0.0; 2];
            let mut ptr = [Label::Action; 2];
            for to in Label::ALL {
                let (from, v) = best_predecessor(self.acc, to, alpha);
                next[to.index()] = v + unary_score(to, score);
                ptr[to.index()] = from;
            }
            self.acc = next;
            self.backptr.push(ptr);
        }
        self.len += 1;
    }

    /// Backtracks the optimal labelling of the boxes seen so far without
    /// modifying the table.
    pub fn extract_labeling(&self) -> Result<Labeling> {
        if self.len == 0 {
            return Err(Error::EmptyTube);
        }
        let mut labels = vec![Label::Action; self.len];
        let mut cur = final_label(self.acc);
        labels[self.len - 1] = cur;
        for r in (1..self.len).rev() {
            cur = self.backptr[r - 1][cur.index()];
            labels[r - 1] = cur;
        }
        Ok(Labeling(labels))
    }
}

/// Offline Viterbi over a complete score sequence, with the same tie rules as
/// [`ViterbiState`]. Builds the full forward table before backtracking.
pub fn viterbi_batch(scores: &[f64], alpha: f64) -> Result<Labeling> {
    if scores.is_empty() {
        return Err(Error::EmptyTube);
    }
    let t = scores.len();
    let mut table = vec![[0.0f64; 2]; t];
    let mut from = vec![[Label::Action; 2]; t];
    table[0] = [scores[0], 1.0 - scores[0]];
    for r in 1..t {
        for to in Label::ALL {
            let (p, v) = best_predecessor(table[r - 1], to, alpha);
            table[r][to.index()] = v + unary_score(to, scores[r]);
            from[r][to.index()] = p;
        }
    }
    let mut labels = vec![Label::Action; t];
    labels[t - 1] = final_label(table[t - 1]);
    for r in (1..t).rev() {
        labels[r - 1] = from[r][labels[r].index()];
    }
    Ok(Labeling(labels))
}

/// A maximal run of action-labelled boxes of one tube.
#[derive(Debug, Clone, PartialEq)]
pub struct TubeSegment {
    pub class_id: usize,
    pub tube_id: u32,
    pub start: u64,
    pub end: u64,
    pub boxes: Vec<TubeBox>,
    /// Mean class score of the member boxes.
    pub score: f64,
}

/// Splits a tube into its action segments, dropping background boxes.
pub fn trim_to_segments(tube: &ActionTube) -> Result<Vec<TubeSegment>> {
    let labeling = tube.viterbi.extract_labeling()?;
    Ok(segments_from_labeling(tube, &labeling))
}

pub(crate) fn segments_from_labeling(tube: &ActionTube, labeling: &Labeling) -> Vec<TubeSegment> {
    labeling
        .action_runs()
        .into_iter()
        .map(|run| {
            let boxes = tube.boxes[run].to_vec();
            let score = boxes.iter().map(|b| b.score).sum::<f64>() / boxes.len() as f64;
            TubeSegment {
                class_id: tube.class_id,
                tube_id: tube.tube_id,
                start: boxes[0].frame_index,
                end: boxes[boxes.len() - 1].frame_index,
                boxes,
                score,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Action as C, Background as B};

    /// Exhaustive maximum over all 2^T labellings.
    fn brute_force(scores: &[f64], alpha: f64) -> (f64, Vec<Labeling>) {
        let t = scores.len();
        let mut best = f64::NEG_INFINITY;
        let mut arg = Vec::new();
        for mask in 0u32..(1 << t) {
            let l = Labeling(
                (0..t)
                    .map(|r| if mask >> r & 1 == 1 { B } else { C })
                    .collect(),
            );
            let e = labeling_energy(&l, scores, alpha).unwrap();
            if e > best {
                best = e;
                arg = vec![l];
            } else if e == best {
                arg.push(l);
            }
        }
        (best, arg)
    }

    fn online(scores: &[f64], alpha: f64) -> ViterbiState {
        let mut v = ViterbiState::new();
        for &s in scores {
            v.append_box(s, alpha);
        }
        v
    }

    #[test]
    fn unary() {
        assert_eq!(unary_score(C, 0.9), 0.9);
        assert!((unary_score(B, 0.9) - 0.1).abs() < 1e-15);
        assert_eq!(unary_score(B, 0.5), unary_score(C, 0.5));
    }

    #[test]
    fn energy_examples() {
        let e = labeling_energy(&Labeling(vec![C, C]), &[0.9, 0.8], 3.0).unwrap();
        assert!((e - 1.7).abs() < 1e-12);
        let e = labeling_energy(&Labeling(vec![C, B]), &[0.9, 0.8], 3.0).unwrap();
        assert!((e - (-1.9)).abs() < 1e-12);
        for alpha in [0.0, 1.0, 7.5] {
            let e = labeling_energy(&Labeling(vec![B, B]), &[0.0, 0.0], alpha).unwrap();
            assert_eq!(e, 2.0);
        }
        assert!(labeling_energy(&Labeling(vec![C]), &[0.1, 0.2], 1.0).is_err());
    }

    #[test]
    fn append_base_case_and_one_step() {
        let mut v = ViterbiState::new();
        v.append_box(0.9, 3.0);
        let (c, b) = v.accumulators();
        assert_eq!(v.len(), 1);
        assert_eq!(c, 0.9);
        assert!((b - 0.1).abs() < 1e-15);

        v.append_box(0.9, 3.0);
        let (c, b) = v.accumulators();
        assert!((c - 1.8).abs() < 1e-12);
        assert!((b - 0.2).abs() < 1e-12);
        assert_eq!(v.backpointers(), &[[C, B]]);
    }

    #[test]
    fn neutral_score_keeps_gap() {
        let mut v = online(&[0.9, 0.7], 3.0);
        let (c0, b0) = v.accumulators();
        v.append_box(0.5, 3.0);
        let (c1, b1) = v.accumulators();
        assert!(((c1 - b1) - (c0 - b0)).abs() < 1e-12);
    }

    #[test]
    fn dominant_scores() {
        let v = online(&[0.9; 6], 1.0);
        assert_eq!(v.extract_labeling().unwrap(), Labeling(vec![C; 6]));
        let v = online(&[0.1; 6], 1.0);
        assert_eq!(v.extract_labeling().unwrap(), Labeling(vec![B; 6]));
    }

    #[test]
    fn matches_exhaustive_on_fixture() {
        let scores = [0.9, 0.9, 0.1, 0.1, 0.9, 0.9];
        let got = online(&scores, 0.3).extract_labeling().unwrap();
        let (best, args) = brute_force(&scores, 0.3);
        assert_eq!(labeling_energy(&got, &scores, 0.3).unwrap(), best);
        assert!(args.contains(&got));
        assert_eq!(got, Labeling(vec![C, C, B, B, C, C]));
    }

    #[test]
    fn empty_state_errors() {
        assert_eq!(
            ViterbiState::new().extract_labeling(),
            Err(Error::EmptyTube)
        );
        assert!(viterbi_batch(&[], 1.0).is_err());
    }

    #[test]
    fn ties_prefer_action() {
        let v = online(&[0.5, 0.5, 0.5], 1.0);
        assert_eq!(v.extract_labeling().unwrap(), Labeling(vec![C, C, C]));
    }

    #[test]
    fn runs() {
        let l = Labeling(vec![C, C, B, B, C]);
        assert_eq!(l.action_runs(), vec![0..2, 4..5]);
        assert!(Labeling(vec![B, B, B]).action_runs().is_empty());
        assert_eq!(Labeling(vec![C, C, C]).action_runs(), vec![0..3]);
    }

    proptest! {
        #[test]
        fn optimal_against_exhaustive(
            scores in prop::collection::vec(0.0..=1.0f64, 1..=10),
            alpha in prop::sample::select(vec![0.0, 0.3, 1.0, 3.0]),
        ) {
            let got = online(&scores, alpha).extract_labeling().unwrap();
            let (best, _) = brute_force(&scores, alpha);
            prop_assert_eq!(labeling_energy(&got, &scores, alpha).unwrap(), best);
        }

        #[test]
        fn online_equals_batch_on_every_prefix(
            scores in prop::collection::vec(0.0..=1.0f64, 1..40),
            alpha in 0.0..4.0f64,
        ) {
            let mut v = ViterbiState::new();
            for t in 0..scores.len() {
                v.append_box(scores[t], alpha);
                let on = v.extract_labeling().unwrap();
                let off = viterbi_batch(&scores[..=t], alpha).unwrap();
                prop_assert_eq!(on, off);
            }
        }

        #[test]
        fn larger_alpha_never_adds_segments(
            scores in prop::collection::vec(0.0..=1.0f64, 1..30),
            a1 in 0.0..3.0f64,
            extra in 0.0..3.0f64,
        ) {
            let lo = viterbi_batch(&scores, a1).unwrap().action_runs().len();
            let hi = viterbi_batch(&scores, a1 + extra).unwrap().action_runs().len();
            prop_assert!(hi <= lo);
        }
    }
}
