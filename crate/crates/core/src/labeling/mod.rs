//! Per-frame lane-change suitability labels.
//!
//! Two schemes are provided: action-based labels around observed lane
//! changes, filtered for information gain, and automatic labels that look at
//! the observed time gaps on the target lane over the next few seconds.

mod action;
mod augment;
mod automatic;
mod events;
mod io;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ngsim::{FrameId, Gaps, LaneId, NeighborContext, Side, VehicleId};

pub use action::{action_based_label, filter_pair, situation_distances, ActionLabelStats, SituationDistances};
pub use augment::{augment, AugmentConfig};
pub use automatic::{automatic_label, automatic_label_at, automatic_sequences, target_gaps_acceptable};
pub use events::{detect_lane_changes, lateral_velocity, LaneChangeEvent};
pub use io::{read_sequences, write_gap_sequences, write_sequences, SequenceRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
    /// Carries no loss weight and is not evaluated.
    Ignore,
}

impl Label {
    pub fn code(self) -> i8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
            Label::Ignore => -1,
        }
    }

    pub fn from_code(code: i8) -> Option<Self> {
        match code {
            1 => Some(Label::Positive),
            0 => Some(Label::Negative),
            -1 => Some(Label::Ignore),
            _ => None,
        }
    }

    pub fn from_bool(positive: bool) -> Self {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    /// Class index for the classifiers, `None` for ignore.
    pub fn class(self) -> Option<usize> {
        match self {
            Label::Positive => Some(1),
            Label::Negative => Some(0),
            Label::Ignore => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("filter parameter `{name}` must be strictly positive, got {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("absent {0} disqualifies the frame from the information-gain filter")]
    AbsentNeighbor(&'static str),
    #[error("ad of the negative frame is zero; relative change undefined")]
    ZeroReference,
}

/// Weights and thresholds of the information-gain filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    /// Target-lane weight γ.
    pub gamma: f64,
    /// Speed-to-distance weight β (s).
    pub beta: f64,
    pub rel_change_min: f64,
    /// Minimum spacing between differently labeled frames (s).
    pub min_label_gap: f64,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            beta: 1.8,
            rel_change_min: 0.35,
            min_label_gap: 1.0,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), LabelError> {
        for (name, value) in [
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("rel_change_min", self.rel_change_min),
            ("min_label_gap", self.min_label_gap),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(LabelError::InvalidParam { name, value });
            }
        }
        Ok(())
    }
}

/// Everything the two labeling schemes can be tuned with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LabelConfig {
    pub filter: FilterParams,
    /// Length of the negative window before a maneuver (s).
    pub negative_window: f64,
    /// Look-ahead of the automatic scheme (s).
    pub horizon: f64,
    /// Minimum acceptable closing time on the target lane (s).
    pub min_time_gap: f64,
    /// Lateral speed marking the start of a maneuver (m/s).
    pub lateral_speed_threshold: f64,
}

impl Default for LabelConfig {
    fn default() -> Self {
        Self {
            filter: FilterParams::default(),
            negative_window: 5.0,
            horizon: 3.0,
            min_time_gap: 1.0,
            lateral_speed_threshold: 0.213,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledContext {
    pub context: NeighborContext,
    pub label: Label,
}

/// Contiguous run of one ego vehicle's frames with a fixed target lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub recording: u32,
    pub vehicle_id: VehicleId,
    pub target_side: Side,
    pub source_lane: LaneId,
    pub target_lane: LaneId,
    pub frames: Vec<LabeledContext>,
}

impl LabeledSequence {
    pub fn first_frame(&self) -> Option<FrameId> {
        self.frames.first().map(|f| f.context.frame_id)
    }

    pub fn last_frame(&self) -> Option<FrameId> {
        self.frames.last().map(|f| f.context.frame_id)
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.frames.iter().map(|f| f.label)
    }

    pub fn to_gap_sequence(&self) -> GapSequence {
        GapSequence {
            recording: self.recording,
            vehicle_id: self.vehicle_id,
            target_side: self.target_side,
            source_lane: self.source_lane,
            target_lane: self.target_lane,
            frames: self
                .frames
                .iter()
                .map(|f| LabeledGaps {
                    frame_id: f.context.frame_id,
                    gaps: f.context.gaps,
                    label: f.label,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledGaps {
    pub frame_id: FrameId,
    pub gaps: Gaps,
    pub label: Label,
}

/// The part of a [`LabeledSequence`] the learned models consume: relative
/// distances and speeds with labels. This is also what sequence files hold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSequence {
    pub recording: u32,
    pub vehicle_id: VehicleId,
    pub target_side: Side,
    pub source_lane: LaneId,
    pub target_lane: LaneId,
    pub frames: Vec<LabeledGaps>,
}

impl GapSequence {
    pub fn first_frame(&self) -> Option<FrameId> {
        self.frames.first().map(|f| f.frame_id)
    }

    pub fn last_frame(&self) -> Option<FrameId> {
        self.frames.last().map(|f| f.frame_id)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Consecutive windows of at most `len` frames.
    pub fn windows(&self, len: usize) -> Vec<GapSequence> {
        assert!(len > 0);
        self.frames
            .chunks(len)
            .map(|chunk| GapSequence {
                frames: chunk.to_vec(),
                ..self.clone_header()
            })
            .collect()
    }

    fn clone_header(&self) -> GapSequence {
        GapSequence {
            recording: self.recording,
            vehicle_id: self.vehicle_id,
            target_side: self.target_side,
            source_lane: self.source_lane,
            target_lane: self.target_lane,
            frames: Vec::new(),
        }
    }
}

impl From<&LabeledSequence> for GapSequence {
    fn from(s: &LabeledSequence) -> Self {
        s.to_gap_sequence()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FrameKey {
    pub recording: u32,
    pub vehicle_id: VehicleId,
    pub frame_id: FrameId,
    pub side: Side,
}

pub type LabelMap = BTreeMap<FrameKey, Label>;

pub fn label_map<'a>(sequences: impl IntoIterator<Item = &'a GapSequence>) -> LabelMap {
    let mut map = LabelMap::new();
    for s in sequences {
        for f in &s.frames {
            map.insert(
                FrameKey {
                    recording: s.recording,
                    vehicle_id: s.vehicle_id,
                    frame_id: f.frame_id,
                    side: s.target_side,
                },
                f.label,
            );
        }
    }
    map
}

/// Fraction of frames labeled (non-ignore) by both schemes on which the labels
/// coincide; `None` when no frame is shared.
pub fn agreement(labels_a: &LabelMap, labels_b: &LabelMap) -> Option<f64> {
    let mut shared = 0usize;
    let mut equal = 0usize;
    for (key, a) in labels_a {
        if *a == Label::Ignore {
            continue;
        }
        match labels_b.get(key) {
            Some(b) if *b != Label::Ignore => {
                shared += 1;
                if a == b {
                    equal += 1;
                }
            }
            _ => {}
        }
    }
    (shared > 0).then(|| equal as f64 / shared as f64)
}
