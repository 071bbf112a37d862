use super::{Label, LabelConfig, LabeledContext, LabeledSequence};
use crate::ngsim::{
    neighbors_in_lanes, seconds_to_frames, FrameId, Gaps, LaneId, LaneLayout, Role, Scenes, Side, Track, VehicleId,
};

/// Both target-lane closing times are at least `min_time_gap`.
pub fn target_gaps_acceptable(gaps: &Gaps, min_time_gap: f64) -> bool {
    gaps.closing_time(Role::Plv) >= min_time_gap && gaps.closing_time(Role::Pfv) >= min_time_gap
}

/// Automatic label of one frame with explicitly fixed lanes, or `None` when
/// the ego is not observed for the whole horizon.
pub fn automatic_label_at(
    scenes: &Scenes,
    ego: VehicleId,
    frame_id: FrameId,
    ego_lane: LaneId,
    target_lane: LaneId,
    side: Side,
    cfg: &LabelConfig,
) -> Option<Label> {
    let horizon = seconds_to_frames(cfg.horizon) as i64;
    let mut ok = true;
    for offset in 1..=horizon {
        let scene = scenes.get(&(frame_id + offset))?;
        let ctx = neighbors_in_lanes(scene, ego, ego_lane, target_lane, side).ok()?;
        ok &= target_gaps_acceptable(&ctx.gaps, cfg.min_time_gap);
    }
    Some(Label::from_bool(ok))
}

/// Labels every frame of `track` that has a full horizon of real future
/// frames: positive iff both target-lane closing times stay at or above
/// `min_time_gap` at every future frame. The target lane is the one adjacent
/// to the ego's lane at the labeled frame.
pub fn automatic_label(
    track: &Track,
    scenes: &Scenes,
    side: Side,
    layout: &LaneLayout,
    cfg: &LabelConfig,
) -> Vec<(FrameId, Label)> {
    let horizon = seconds_to_frames(cfg.horizon);
    let n = track.frames.len();
    if n <= horizon {
        return Vec::new();
    }
    let mut out = Vec::new();

    // Runs of frames sharing a target lane; within a run, a prefix count of
    // failing frames answers each horizon query in O(1).
    let mut start = 0;
    while start + horizon < n {
        let lane = track.frames[start].lane_id;
        let Some(target) = layout.target_lane(lane, side) else {
            start += 1;
            continue;
        };
        let mut end = start;
        while end + 1 < n && track.frames[end + 1].lane_id == lane {
            end += 1;
        }
        // Failing flags cover frames start+1 ..= min(end + horizon, n - 1).
        let last = (end + horizon).min(n - 1);
        let mut failures = vec![0usize; last - start + 1];
        for k in start + 1..=last {
            let f = &track.frames[k];
            let ok = scenes
                .get(&f.frame_id)
                .and_then(|s| neighbors_in_lanes(s, track.vehicle_id, lane, target, side).ok())
                .map(|ctx| target_gaps_acceptable(&ctx.gaps, cfg.min_time_gap))
                .unwrap_or(false);
            failures[k - start] = failures[k - start - 1] + usize::from(!ok);
        }
        for i in start..=end {
            if i + horizon > last {
                break;
            }
            let failed = failures[i + horizon - start] - failures[i - start];
            out.push((track.frames[i].frame_id, Label::from_bool(failed == 0)));
        }
        start = end + 1;
    }
    out
}

/// Automatic labels of every track and side, grouped into contiguous
/// sequences with a fixed target lane.
pub fn automatic_sequences(
    recording: u32,
    tracks: &[Track],
    scenes: &Scenes,
    layout: &LaneLayout,
    cfg: &LabelConfig,
) -> Vec<LabeledSequence> {
    let mut out = Vec::new();
    for track in tracks {
        for side in Side::BOTH {
            let labels = automatic_label(track, scenes, side, layout, cfg);
            let mut current: Option<LabeledSequence> = None;
            for (frame_id, label) in labels {
                let ego = track.frame(frame_id).expect("label for a track frame");
                let target = layout
                    .target_lane(ego.lane_id, side)
                    .expect("labels only exist where a target lane exists");
                let continues = current
                    .as_ref()
                    .is_some_and(|s| s.source_lane == ego.lane_id && s.last_frame() == Some(frame_id - 1));
                if !continues {
                    if let Some(done) = current.take() {
                        out.push(done);
                    }
                    current = Some(LabeledSequence {
                        recording,
                        vehicle_id: track.vehicle_id,
                        target_side: side,
                        source_lane: ego.lane_id,
                        target_lane: target,
                        frames: Vec::new(),
                    });
                }
                let context = neighbors_in_lanes(&scenes[&frame_id], track.vehicle_id, ego.lane_id, target, side)
                    .expect("ego present in its own scene");
                current
                    .as_mut()
                    .expect("sequence opened above")
                    .frames
                    .push(LabeledContext { context, label });
            }
            if let Some(done) = current {
                out.push(done);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngsim::{build_scenes, TrajectoryFrame};

    fn car(id: u32, frame: i64, lane: i32, x: f64, v: f64) -> TrajectoryFrame {
        TrajectoryFrame {
            vehicle_id: id,
            frame_id: frame,
            lane_id: lane,
            longitudinal_pos: x,
            lateral_pos: 0.0,
            speed: v,
            length: 4.5,
        }
    }

    fn constant_track(id: u32, lane: i32, x0: f64, v: f64, frames: i64) -> Track {
        Track {
            vehicle_id: id,
            frames: (0..frames)
                .map(|f| car(id, f, lane, x0 + v * 0.1 * f as f64, v))
                .collect(),
        }
    }

    #[test]
    fn empty_target_lane_is_positive() {
        let tracks = vec![constant_track(1, 2, 0.0, 20.0, 60)];
        let scenes = build_scenes(&tracks);
        let labels = automatic_label(
            &tracks[0],
            &scenes,
            Side::Left,
            &LaneLayout::ngsim(),
            &LabelConfig::default(),
        );
        assert_eq!(labels.len(), 30);
        assert!(labels.iter().all(|(_, l)| *l == Label::Positive));
    }

    #[test]
    fn fast_closing_leader_is_negative() {
        // PLV 10 m ahead, ego 15 m/s faster: closing time 0.67 s
        let tracks = vec![
            constant_track(1, 2, 0.0, 25.0, 60),
            constant_track(2, 1, 11.5, 10.0, 60),
        ];
        let scenes = build_scenes(&tracks);
        let labels = automatic_label(
            &tracks[0],
            &scenes,
            Side::Left,
            &LaneLayout::ngsim(),
            &LabelConfig::default(),
        );
        let ctx = neighbors_in_lanes(&scenes[&1], 1, 2, 1, Side::Left).unwrap();
        assert!((ctx.gaps.closing_time(Role::Plv) - 10.0 / 15.0).abs() < 1e-9);
        assert_eq!(labels[0].1, Label::Negative);
    }

    #[test]
    fn opening_gaps_are_positive() {
        // PFV behind and slower, PLV ahead and faster
        let tracks = vec![
            constant_track(1, 2, 0.0, 20.0, 80),
            constant_track(2, 1, 3.0, 26.0, 80),
            constant_track(3, 1, -3.0, 15.0, 80),
        ];
        let scenes = build_scenes(&tracks);
        let labels = automatic_label(
            &tracks[0],
            &scenes,
            Side::Left,
            &LaneLayout::ngsim(),
            &LabelConfig::default(),
        );
        assert_eq!(labels.len(), 50);
        assert!(labels.iter().all(|(_, l)| *l == Label::Positive));
    }

    #[test]
    fn edge_lane_has_no_labels() {
        let tracks = vec![constant_track(1, 1, 0.0, 20.0, 60)];
        let scenes = build_scenes(&tracks);
        assert!(automatic_label(
            &tracks[0],
            &scenes,
            Side::Left,
            &LaneLayout::ngsim(),
            &LabelConfig::default()
        )
        .is_empty());
    }

    #[test]
    fn sequences_split_at_lane_changes() {
        let mut ego = constant_track(1, 3, 0.0, 20.0, 120);
        for f in ego.frames.iter_mut().skip(60) {
            f.lane_id = 2;
        }
        let tracks = vec![ego];
        let scenes = build_scenes(&tracks);
        let seqs = automatic_sequences(0, &tracks, &scenes, &LaneLayout::ngsim(), &LabelConfig::default());
        let left: Vec<_> = seqs.iter().filter(|s| s.target_side == Side::Left).collect();
        assert_eq!(left.len(), 2);
        assert_eq!(left[0].source_lane, 3);
        assert_eq!(left[0].target_lane, 2);
        assert_eq!(left[1].source_lane, 2);
        assert_eq!(left[1].frames.len(), 30);
    }
}
