//! Trajectory data: NGSIM ingestion, per-vehicle tracks, per-frame scenes and
//! the four decision-relevant neighbours of an ego vehicle.

mod neighbors;
mod parse;
mod store;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use neighbors::{
    identify_neighbors, leader_of, neighbors_in_lanes, observe, observe_in_lanes, Gaps, NeighborContext, NeighborError,
    Observation, Role,
};
pub use parse::{parse_ngsim, ParsedTracks};
pub use store::{read_store, write_store, Recording, StoreRow};

pub type VehicleId = u32;
pub type FrameId = i64;
pub type LaneId = i32;

/// NGSIM sampling rate.
pub const FRAMES_PER_SECOND: f64 = 10.0;
pub const FRAME_DT: f64 = 0.1;
pub const FEET_TO_METERS: f64 = 0.3048;

/// Whole number of frames spanned by `seconds`.
pub fn seconds_to_frames(seconds: f64) -> usize {
    (seconds * FRAMES_PER_SECOND).round().max(0.0) as usize
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{0}` in header")]
    MissingColumn(&'static str),
    #[error("line {line}: expected at least {expected} fields, found {found}")]
    ShortRow { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse `{value}` in column `{column}`")]
    BadValue {
        line: usize,
        column: &'static str,
        value: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Feet,
    Meters,
}

impl Units {
    pub fn to_meters(self) -> f64 {
        match self {
            Units::Feet => FEET_TO_METERS,
            Units::Meters => 1.0,
        }
    }
}

impl std::str::FromStr for Units {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "feet" | "ft" => Ok(Units::Feet),
            "meters" | "metres" | "m" => Ok(Units::Meters),
            other => Err(format!("unknown units `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Side {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "left" | "l" => Ok(Side::Left),
            "right" | "r" => Ok(Side::Right),
            other => Err(format!("unknown side `{other}`")),
        }
    }
}

/// One vehicle's state at one 10 Hz tick, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub vehicle_id: VehicleId,
    pub frame_id: FrameId,
    pub lane_id: LaneId,
    /// Along-lane coordinate (NGSIM `Local_Y`).
    pub longitudinal_pos: f64,
    /// Offset across the roadway (NGSIM `Local_X`), growing to the right.
    pub lateral_pos: f64,
    pub speed: f64,
    pub length: f64,
}

/// Frames of one vehicle, strictly increasing by one frame id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub vehicle_id: VehicleId,
    pub frames: Vec<TrajectoryFrame>,
}

impl Track {
    pub fn first_frame(&self) -> Option<FrameId> {
        self.frames.first().map(|f| f.frame_id)
    }

    pub fn last_frame(&self) -> Option<FrameId> {
        self.frames.last().map(|f| f.frame_id)
    }

    /// Frame at `frame_id`, relying on contiguity.
    pub fn frame(&self, frame_id: FrameId) -> Option<&TrajectoryFrame> {
        let first = self.first_frame()?;
        let idx = usize::try_from(frame_id - first).ok()?;
        self.frames.get(idx).filter(|f| f.frame_id == frame_id)
    }

    pub fn covers(&self, frame_id: FrameId) -> bool {
        self.frame(frame_id).is_some()
    }
}

/// All vehicles present at one frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub frame_id: FrameId,
    pub entries: BTreeMap<VehicleId, TrajectoryFrame>,
}

pub type Scenes = BTreeMap<FrameId, Scene>;

pub fn build_scenes(tracks: &[Track]) -> Scenes {
    let mut scenes: Scenes = BTreeMap::new();
    for track in tracks {
        for frame in &track.frames {
            scenes
                .entry(frame.frame_id)
                .or_insert_with(|| Scene {
                    frame_id: frame.frame_id,
                    entries: BTreeMap::new(),
                })
                .entries
                .insert(frame.vehicle_id, *frame);
        }
    }
    scenes
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneInfo {
    pub left: Option<LaneId>,
    pub right: Option<LaneId>,
    /// Whether vehicles may change *into* this lane.
    pub target_allowed: bool,
}

/// Lane adjacency table. Ramps are listed as valid source lanes but are never
/// returned as targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneLayout {
    lanes: BTreeMap<LaneId, LaneInfo>,
}

impl LaneLayout {
    pub fn new(lanes: BTreeMap<LaneId, LaneInfo>) -> Self {
        Self { lanes }
    }

    /// Mainline lanes numbered left to right `1..=mainline`, plus ramp lanes
    /// that sit to the right of the rightmost mainline lane.
    pub fn highway(mainline: LaneId, ramps: &[LaneId]) -> Self {
        let mut lanes = BTreeMap::new();
        for lane in 1..=mainline {
            lanes.insert(
                lane,
                LaneInfo {
                    left: (lane > 1).then_some(lane - 1),
                    right: if lane < mainline {
                        Some(lane + 1)
                    } else {
                        ramps.first().copied()
                    },
                    target_allowed: true,
                },
            );
        }
        for &ramp in ramps {
            lanes.insert(
                ramp,
                LaneInfo {
                    left: Some(mainline),
                    right: None,
                    target_allowed: false,
                },
            );
        }
        Self { lanes }
    }

    /// Six mainline lanes with on-ramp 7 and off-ramp 8 (I-80 / US 101).
    pub fn ngsim() -> Self {
        Self::highway(6, &[7, 8])
    }

    pub fn lane(&self, lane: LaneId) -> Option<&LaneInfo> {
        self.lanes.get(&lane)
    }

    pub fn target_lane(&self, lane: LaneId, side: Side) -> Option<LaneId> {
        let info = self.lanes.get(&lane)?;
        let candidate = match side {
            Side::Left => info.left,
            Side::Right => info.right,
        }?;
        self.lanes
            .get(&candidate)
            .filter(|c| c.target_allowed)
            .map(|_| candidate)
    }

    /// Direction of a move between two lanes, if they are adjacent.
    pub fn side_between(&self, from: LaneId, to: LaneId) -> Option<Side> {
        let info = self.lanes.get(&from)?;
        if info.left == Some(to) {
            Some(Side::Left)
        } else if info.right == Some(to) {
            Some(Side::Right)
        } else {
            None
        }
    }
}

impl Default for LaneLayout {
    fn default() -> Self {
        Self::ngsim()
    }
}
