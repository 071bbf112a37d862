use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FrameId, LaneId, LaneLayout, Scene, Side, TrajectoryFrame, VehicleId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NeighborError {
    #[error("vehicle {vehicle} not present in frame {frame}")]
    EgoNotFound { vehicle: VehicleId, frame: FrameId },
    #[error("lane {lane} has no {side} target lane")]
    NoTargetLane { lane: LaneId, side: Side },
}

/// Neighbour roles, in the fixed order used by every array in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    /// Preceding vehicle, ego lane.
    Pv,
    /// Rear vehicle, ego lane.
    Rv,
    /// Putative leading vehicle, target lane.
    Plv,
    /// Putative following vehicle, target lane.
    Pfv,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Pv, Role::Rv, Role::Plv, Role::Pfv];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_ahead(self) -> bool {
        matches!(self, Role::Pv | Role::Plv)
    }

    pub fn on_target_lane(self) -> bool {
        matches!(self, Role::Plv | Role::Pfv)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Pv => "pv",
            Role::Rv => "rv",
            Role::Plv => "plv",
            Role::Pfv => "pfv",
        }
    }
}

/// Relative distances and speeds of the four neighbours.
///
/// An absent neighbour has distance `+inf` and relative speed `0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaps {
    pub distance: [f64; 4],
    /// `v_ego - v_neighbour`.
    pub rel_speed: [f64; 4],
}

impl Gaps {
    pub const EMPTY: Gaps = Gaps {
        distance: [f64::INFINITY; 4],
        rel_speed: [0.0; 4],
    };

    pub fn distance(&self, role: Role) -> f64 {
        self.distance[role.index()]
    }

    pub fn rel_speed(&self, role: Role) -> f64 {
        self.rel_speed[role.index()]
    }

    pub fn is_present(&self, role: Role) -> bool {
        self.distance[role.index()].is_finite()
    }

    /// Rate at which the gap to `role` shrinks; negative when it opens.
    pub fn closing_speed(&self, role: Role) -> f64 {
        let v = self.rel_speed(role);
        if role.is_ahead() {
            v
        } else {
            -v
        }
    }

    /// Time until the gap to `role` closes at the current speeds, `+inf` when
    /// the neighbour is absent or the gap is not closing.
    pub fn closing_time(&self, role: Role) -> f64 {
        let d = self.distance(role);
        let closing = self.closing_speed(role);
        if !d.is_finite() || closing <= 0.0 {
            f64::INFINITY
        } else {
            d / closing
        }
    }
}

/// The ego vehicle together with PV, RV, PLV and PFV at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborContext {
    pub frame_id: FrameId,
    pub ego: TrajectoryFrame,
    pub target_side: Side,
    pub target_lane: LaneId,
    /// Indexed by [`Role::index`].
    pub neighbors: [Option<TrajectoryFrame>; 4],
    pub gaps: Gaps,
}

impl NeighborContext {
    pub fn from_frames(
        ego: TrajectoryFrame,
        target_side: Side,
        target_lane: LaneId,
        neighbors: [Option<TrajectoryFrame>; 4],
    ) -> Self {
        let mut gaps = Gaps::EMPTY;
        for role in Role::ALL {
            if let Some(n) = &neighbors[role.index()] {
                gaps.distance[role.index()] = (ego.longitudinal_pos - n.longitudinal_pos).abs();
                gaps.rel_speed[role.index()] = ego.speed - n.speed;
            }
        }
        Self {
            frame_id: ego.frame_id,
            ego,
            target_side,
            target_lane,
            neighbors,
            gaps,
        }
    }

    pub fn neighbor(&self, role: Role) -> Option<&TrajectoryFrame> {
        self.neighbors[role.index()].as_ref()
    }

    pub fn pv(&self) -> Option<&TrajectoryFrame> {
        self.neighbor(Role::Pv)
    }

    pub fn rv(&self) -> Option<&TrajectoryFrame> {
        self.neighbor(Role::Rv)
    }

    pub fn plv(&self) -> Option<&TrajectoryFrame> {
        self.neighbor(Role::Plv)
    }

    pub fn pfv(&self) -> Option<&TrajectoryFrame> {
        self.neighbor(Role::Pfv)
    }
}

/// Ahead-or-level is "ahead"; strictly lower is "behind". Ties on distance
/// go to the lower vehicle id.
fn nearest(scene: &Scene, exclude: VehicleId, lane: LaneId, pos: f64, ahead: bool) -> Option<TrajectoryFrame> {
    let mut best: Option<(f64, VehicleId, &TrajectoryFrame)> = None;
    for (id, f) in &scene.entries {
        if *id == exclude || f.lane_id != lane {
            continue;
        }
        let qualifies = if ahead {
            f.longitudinal_pos >= pos
        } else {
            f.longitudinal_pos < pos
        };
        if !qualifies {
            continue;
        }
        let d = (f.longitudinal_pos - pos).abs();
        let better = match best {
            None => true,
            Some((bd, bid, _)) => d < bd || (d == bd && *id < bid),
        };
        if better {
            best = Some((d, *id, f));
        }
    }
    best.map(|(_, _, f)| *f)
}

/// Neighbours of `ego_id` for an explicitly chosen pair of lanes. The ego need
/// not currently drive on `ego_lane`; its longitudinal position is what counts.
pub fn neighbors_in_lanes(
    scene: &Scene,
    ego_id: VehicleId,
    ego_lane: LaneId,
    target_lane: LaneId,
    target_side: Side,
) -> Result<NeighborContext, NeighborError> {
    let ego = *scene.entries.get(&ego_id).ok_or(NeighborError::EgoNotFound {
        vehicle: ego_id,
        frame: scene.frame_id,
    })?;
    let x = ego.longitudinal_pos;
    let neighbors = [
        nearest(scene, ego_id, ego_lane, x, true),
        nearest(scene, ego_id, ego_lane, x, false),
        nearest(scene, ego_id, target_lane, x, true),
        nearest(scene, ego_id, target_lane, x, false),
    ];
    Ok(NeighborContext::from_frames(ego, target_side, target_lane, neighbors))
}

pub fn identify_neighbors(
    scene: &Scene,
    ego_id: VehicleId,
    target_side: Side,
    layout: &LaneLayout,
) -> Result<NeighborContext, NeighborError> {
    let ego = scene.entries.get(&ego_id).ok_or(NeighborError::EgoNotFound {
        vehicle: ego_id,
        frame: scene.frame_id,
    })?;
    let target_lane = layout
        .target_lane(ego.lane_id, target_side)
        .ok_or(NeighborError::NoTargetLane {
            lane: ego.lane_id,
            side: target_side,
        })?;
    neighbors_in_lanes(scene, ego_id, ego.lane_id, target_lane, target_side)
}

/// Nearest vehicle strictly ahead of `vehicle` on its own lane.
pub fn leader_of(scene: &Scene, vehicle: &TrajectoryFrame) -> Option<TrajectoryFrame> {
    let mut best: Option<&TrajectoryFrame> = None;
    for (id, f) in &scene.entries {
        if *id == vehicle.vehicle_id || f.lane_id != vehicle.lane_id || f.longitudinal_pos < vehicle.longitudinal_pos {
            continue;
        }
        let better = match best {
            None => true,
            Some(b) => {
                f.longitudinal_pos < b.longitudinal_pos
                    || (f.longitudinal_pos == b.longitudinal_pos && f.vehicle_id < b.vehicle_id)
            }
        };
        if better {
            best = Some(f);
        }
    }
    best.copied()
}

/// What the prediction component needs at one frame: the context plus the
/// observed leaders of PV and PLV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub context: NeighborContext,
    pub pv_leader: Option<TrajectoryFrame>,
    pub plv_leader: Option<TrajectoryFrame>,
}

impl Observation {
    pub fn from_context(scene: &Scene, context: NeighborContext) -> Self {
        let pv_leader = context.pv().and_then(|pv| leader_of(scene, pv));
        let plv_leader = context.plv().and_then(|plv| leader_of(scene, plv));
        Self {
            context,
            pv_leader,
            plv_leader,
        }
    }
}

pub fn observe(
    scene: &Scene,
    ego_id: VehicleId,
    target_side: Side,
    layout: &LaneLayout,
) -> Result<Observation, NeighborError> {
    let context = identify_neighbors(scene, ego_id, target_side, layout)?;
    Ok(Observation::from_context(scene, context))
}

pub fn observe_in_lanes(
    scene: &Scene,
    ego_id: VehicleId,
    ego_lane: LaneId,
    target_lane: LaneId,
    target_side: Side,
) -> Result<Observation, NeighborError> {
    let context = neighbors_in_lanes(scene, ego_id, ego_lane, target_lane, target_side)?;
    Ok(Observation::from_context(scene, context))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn car(id: VehicleId, lane: LaneId, x: f64, v: f64) -> TrajectoryFrame {
        TrajectoryFrame {
            vehicle_id: id,
            frame_id: 1,
            lane_id: lane,
            longitudinal_pos: x,
            lateral_pos: 0.0,
            speed: v,
            length: 4.5,
        }
    }

    fn scene(cars: &[TrajectoryFrame]) -> Scene {
        Scene {
            frame_id: 1,
            entries: cars.iter().map(|c| (c.vehicle_id, *c)).collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn nearest_ahead_is_pv() {
        let s = scene(&[car(1, 3, 100.0, 20.0), car(2, 3, 150.0, 20.0), car(3, 3, 170.0, 20.0)]);
        let ctx = identify_neighbors(&s, 1, Side::Left, &LaneLayout::ngsim()).unwrap();
        assert_eq!(ctx.pv().unwrap().vehicle_id, 2);
        assert_eq!(ctx.gaps.distance(Role::Pv), 50.0);
        assert!(ctx.rv().is_none());
    }

    #[test]
    fn empty_target_lane_gives_infinite_sentinels() {
        let s = scene(&[car(1, 3, 100.0, 20.0), car(2, 3, 150.0, 20.0)]);
        let ctx = identify_neighbors(&s, 1, Side::Right, &LaneLayout::ngsim()).unwrap();
        assert!(ctx.plv().is_none() && ctx.pfv().is_none());
        assert_eq!(ctx.gaps.distance(Role::Plv), f64::INFINITY);
        assert_eq!(ctx.gaps.distance(Role::Pfv), f64::INFINITY);
        assert_eq!(ctx.gaps.rel_speed(Role::Plv), 0.0);
    }

    #[test]
    fn opening_gap_has_infinite_closing_time() {
        let s = scene(&[car(1, 3, 100.0, 20.0), car(2, 3, 140.0, 25.0)]);
        let ctx = identify_neighbors(&s, 1, Side::Left, &LaneLayout::ngsim()).unwrap();
        assert_eq!(ctx.gaps.rel_speed(Role::Pv), -5.0);
        assert_eq!(ctx.gaps.closing_time(Role::Pv), f64::INFINITY);
    }

    #[test]
    fn closing_time_sign_conventions() {
        let s = scene(&[car(1, 3, 100.0, 20.0), car(2, 2, 110.0, 15.0), car(3, 2, 80.0, 30.0)]);
        let ctx = identify_neighbors(&s, 1, Side::Left, &LaneLayout::ngsim()).unwrap();
        // ahead and slower: closing at 5 m/s over 10 m
        assert!((ctx.gaps.closing_time(Role::Plv) - 2.0).abs() < 1e-12);
        // behind and faster: closing at 10 m/s over 20 m
        assert!((ctx.gaps.closing_time(Role::Pfv) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ties_prefer_lower_vehicle_id() {
        let s = scene(&[car(5, 3, 100.0, 20.0), car(9, 3, 120.0, 20.0), car(7, 3, 120.0, 20.0)]);
        let ctx = identify_neighbors(&s, 5, Side::Left, &LaneLayout::ngsim()).unwrap();
        assert_eq!(ctx.pv().unwrap().vehicle_id, 7);
    }

    #[test]
    fn lookup_and_domain_errors_are_distinct() {
        let s = scene(&[car(1, 1, 100.0, 20.0)]);
        let layout = LaneLayout::ngsim();
        assert_eq!(
            identify_neighbors(&s, 2, Side::Left, &layout).unwrap_err(),
            NeighborError::EgoNotFound { vehicle: 2, frame: 1 }
        );
        assert_eq!(
            identify_neighbors(&s, 1, Side::Left, &layout).unwrap_err(),
            NeighborError::NoTargetLane {
                lane: 1,
                side: Side::Left
            }
        );
    }

    #[test]
    fn leaders_of_pv_and_plv_are_observed() {
        let s = scene(&[
            car(1, 3, 100.0, 20.0),
            car(2, 3, 130.0, 20.0),
            car(3, 3, 160.0, 20.0),
            car(4, 2, 120.0, 20.0),
        ]);
        let obs = observe(&s, 1, Side::Left, &LaneLayout::ngsim()).unwrap();
        assert_eq!(obs.pv_leader.unwrap().vehicle_id, 3);
        assert!(obs.plv_leader.is_none());
    }

    proptest! {
        #[test]
        fn no_vehicle_between_ego_and_any_neighbour(
            cars in prop::collection::vec((1i32..=3, 0.0f64..300.0, 0.0f64..35.0), 1..25),
            side in prop_oneof![Just(Side::Left), Just(Side::Right)],
        ) {
            let frames: Vec<_> = cars
                .iter()
                .enumerate()
                .map(|(i, (lane, x, v))| car(i as VehicleId + 1, *lane, *x, *v))
                .collect();
            let s = scene(&frames);
            let layout = LaneLayout::highway(3, &[]);
            let ego = frames[0];
            match identify_neighbors(&s, ego.vehicle_id, side, &layout) {
                Err(NeighborError::NoTargetLane { .. }) => {
                    prop_assert!(layout.target_lane(ego.lane_id, side).is_none());
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
                Ok(ctx) => {
                    prop_assert!(ctx.gaps.distance.iter().all(|d| *d >= 0.0));
                    for role in Role::ALL {
                        let lane = if role.on_target_lane() { ctx.target_lane } else { ego.lane_id };
                        let candidates = frames.iter().filter(|f| {
                            f.vehicle_id != ego.vehicle_id
                                && f.lane_id == lane
                                && if role.is_ahead() {
                                    f.longitudinal_pos >= ego.longitudinal_pos
                                } else {
                                    f.longitudinal_pos < ego.longitudinal_pos
                                }
                        });
                        let best = candidates
                            .map(|f| (f.longitudinal_pos - ego.longitudinal_pos).abs())
                            .fold(f64::INFINITY, f64::min);
                        prop_assert_eq!(best, ctx.gaps.distance(role));
                        if let Some(n) = ctx.neighbor(role) {
                            prop_assert_eq!(n.lane_id, lane);
                            if role.is_ahead() {
                                prop_assert!(n.longitudinal_pos >= ego.longitudinal_pos);
                            } else {
                                prop_assert!(n.longitudinal_pos <= ego.longitudinal_pos);
                            }
                        }
                    }
                }
            }
        }
    }
}
