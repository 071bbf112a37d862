use serde::{Deserialize, Serialize};

use crate::ngsim::{FrameId, LaneId, Side, Track, VehicleId, FRAME_DT};

/// A lane change: the maneuver runs from `t_start` until the vehicle is first
/// seen on the new lane at `t_cross`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LaneChangeEvent {
    pub vehicle_id: VehicleId,
    pub t_start: FrameId,
    pub t_cross: FrameId,
    pub direction: Side,
    pub source_lane: LaneId,
    pub target_lane: LaneId,
}

impl LaneChangeEvent {
    /// Frames of the maneuver spent on the source lane.
    pub fn maneuver_frames(&self) -> std::ops::Range<FrameId> {
        self.t_start..self.t_cross
    }
}

/// Lateral velocity at frame index `i`, centred over 0.3 s: positions at
/// ±0.15 s are interpolated from the two neighbouring samples on each side.
pub fn lateral_velocity(track: &Track, i: usize) -> Option<f64> {
    if i < 2 || i + 2 >= track.frames.len() {
        return None;
    }
    let x = |k: usize| track.frames[k].lateral_pos;
    let ahead = 0.5 * (x(i + 1) + x(i + 2));
    let behind = 0.5 * (x(i - 1) + x(i - 2));
    Some((ahead - behind) / (3.0 * FRAME_DT))
}

/// Finds lane changes by lane-id transitions and walks back from each
/// crossing while the vehicle moves towards the target lane at least at
/// `lateral_speed_threshold` without reversing.
///
/// Lane ids grow to the right, as do lateral positions.
pub fn detect_lane_changes(track: &Track, lateral_speed_threshold: f64) -> Vec<LaneChangeEvent> {
    let mut events = Vec::new();
    for cross in 1..track.frames.len() {
        let before = track.frames[cross - 1];
        let after = track.frames[cross];
        if before.lane_id == after.lane_id {
            continue;
        }
        let direction = if after.lane_id < before.lane_id {
            Side::Left
        } else {
            Side::Right
        };
        let toward = |v: f64| match direction {
            Side::Left => -v,
            Side::Right => v,
        };
        let mut start = None;
        let mut i = cross - 1;
        loop {
            if track.frames[i].lane_id != before.lane_id {
                break;
            }
            match lateral_velocity(track, i) {
                Some(v) if toward(v) >= lateral_speed_threshold => start = Some(i),
                _ => break,
            }
            if i == 0 {
                break;
            }
            i -= 1;
        }
        if let Some(s) = start {
            events.push(LaneChangeEvent {
                vehicle_id: track.vehicle_id,
                t_start: track.frames[s].frame_id,
                t_cross: after.frame_id,
                direction,
                source_lane: before.lane_id,
                target_lane: after.lane_id,
            });
        }
    }
    events
}
