//! Random scenes and a direct evaluation of the automatic labeling rule.
#![allow(dead_code)]

use lanegap::labeling::{Label, LabelConfig};
use lanegap::ngsim::{seconds_to_frames, FrameId, LaneLayout, Scene, Scenes, Side, Track, TrajectoryFrame};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const FRAMES: i64 = 60;

pub fn random_tracks(rng: &mut ChaCha8Rng) -> Vec<Track> {
    let n = rng.gen_range(2..9);
    (1..=n)
        .map(|id| {
            let first = if id == 1 { 0 } else { rng.gen_range(0..FRAMES / 2) };
            let last = if id == 1 {
                FRAMES - 1
            } else {
                rng.gen_range(first..FRAMES)
            };
            let mut lane = rng.gen_range(1..=3);
            let mut x = rng.gen_range(-40.0..40.0);
            let v = rng.gen_range(5.0..30.0);
            let frames = (first..=last)
                .map(|f| {
                    if rng.gen_bool(0.02) {
                        lane = rng.gen_range(1..=3);
                    }
                    x += v * 0.1 + rng.gen_range(-0.3..0.3);
                    TrajectoryFrame {
                        vehicle_id: id,
                        frame_id: f,
                        lane_id: lane,
                        longitudinal_pos: x,
                        lateral_pos: 0.0,
                        speed: (v + rng.gen_range(-2.0..2.0)).max(0.0),
                        length: 4.5,
                    }
                })
                .collect();
            Track { vehicle_id: id, frames }
        })
        .collect()
}

/// Nearest vehicle on `lane` ahead (x ≥ ego) or behind (x < ego), lower id
/// on equal distance, found by a plain scan.
fn nearest(scene: &Scene, ego: &TrajectoryFrame, lane: i32, ahead: bool) -> Option<TrajectoryFrame> {
    let mut cands: Vec<&TrajectoryFrame> = scene
        .entries
        .values()
        .filter(|f| f.vehicle_id != ego.vehicle_id && f.lane_id == lane)
        .filter(|f| (f.longitudinal_pos >= ego.longitudinal_pos) == ahead)
        .collect();
    cands.sort_by(|a, b| {
        let da = (a.longitudinal_pos - ego.longitudinal_pos).abs();
        let db = (b.longitudinal_pos - ego.longitudinal_pos).abs();
        da.total_cmp(&db).then(a.vehicle_id.cmp(&b.vehicle_id))
    });
    cands.first().map(|f| **f)
}

fn closing_time(ego: &TrajectoryFrame, other: Option<TrajectoryFrame>, ahead: bool) -> f64 {
    let Some(o) = other else { return f64::INFINITY };
    let closing = if ahead {
        ego.speed - o.speed
    } else {
        o.speed - ego.speed
    };
    if closing <= 0.0 {
        f64::INFINITY
    } else {
        (o.longitudinal_pos - ego.longitudinal_pos).abs() / closing
    }
}

pub fn oracle_labels(track: &Track, scenes: &Scenes, side: Side, cfg: &LabelConfig) -> Vec<(FrameId, Label)> {
    let layout = LaneLayout::ngsim();
    let h = seconds_to_frames(cfg.horizon);
    let mut out = Vec::new();
    for i in 0..track.frames.len() {
        if i + h >= track.frames.len() {
            break;
        }
        let lane = track.frames[i].lane_id;
        let Some(target) = layout.target_lane(lane, side) else {
            continue;
        };
        let ok = (1..=h).all(|k| {
            let f = &track.frames[i + k];
            let scene = &scenes[&f.frame_id];
            let t_plv = closing_time(f, nearest(scene, f, target, true), true);
            let t_pfv = closing_time(f, nearest(scene, f, target, false), false);
            t_plv >= cfg.min_time_gap && t_pfv >= cfg.min_time_gap
        });
        out.push((track.frames[i].frame_id, Label::from_bool(ok)));
    }
    out
}
