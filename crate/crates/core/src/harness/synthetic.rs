//! Seeded two-lane traffic episodes for end-to-end checks.
//!
//! The ego drives on lane 2 behind an IDM platoon and looks at lane 1, where
//! a scripted lead vehicle speeds up and slows down and IDM followers react.
//! Labels come from the exact simulated state; the recorded speeds carry
//! Gaussian noise, so kinematics are only partly observable at one frame.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Dataset, Scheme};
use crate::idm::{step_scene, Behavior, IdmParams, SimVehicle};
use crate::labeling::{automatic_label, GapSequence, LabelConfig, LabeledGaps};
use crate::ngsim::{build_scenes, neighbors_in_lanes, LaneLayout, Scenes, Side, Track, TrajectoryFrame, FRAME_DT};

pub const EGO_ID: u32 = 1;
pub const EGO_LANE: i32 = 2;
pub const TARGET_LANE: i32 = 1;
const LENGTH: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub sequences: usize,
    /// Recorded frames per episode, after the warm-up.
    pub frames: usize,
    pub warmup_frames: usize,
    /// Ego-lane speed range (m/s).
    pub ego_speed: (f64, f64),
    /// Largest target-lane speed offset from the ego lane (m/s).
    pub lane_speed_offset: f64,
    pub target_vehicles: usize,
    /// Bumper-to-bumper spacing range on the target lane (m).
    pub target_gap: (f64, f64),
    /// Rate at which the scripted lead starts a speed change (1/s).
    pub event_rate: f64,
    /// Magnitude of the scripted acceleration (m/s²).
    pub event_accel: f64,
    /// Duration range of a scripted speed change (s).
    pub event_duration: (f64, f64),
    /// Std. dev. of the noise on recorded speeds (m/s).
    pub speed_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            sequences: 2000,
            frames: 160,
            warmup_frames: 50,
            ego_speed: (18.0, 28.0),
            lane_speed_offset: 6.0,
            target_vehicles: 7,
            target_gap: (6.0, 45.0),
            event_rate: 0.25,
            event_accel: 2.5,
            event_duration: (1.5, 4.0),
            speed_noise: 2.0,
        }
    }
}

/// Clean and noisy recordings of one episode.
pub struct Episode {
    pub clean: Vec<Track>,
    pub noisy: Vec<Track>,
}

fn idm(v0: f64, leader: Option<usize>) -> (IdmParams, Behavior) {
    (
        IdmParams {
            desired_speed: v0.max(1.0),
            ..IdmParams::default()
        },
        Behavior::Idm { leader },
    )
}

fn vehicle(pos: f64, speed: f64, (params, behavior): (IdmParams, Behavior)) -> SimVehicle {
    SimVehicle {
        pos,
        speed,
        length: LENGTH,
        params,
        behavior,
    }
}

pub fn simulate_episode(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Episode {
    let total = cfg.warmup_frames + cfg.frames;
    let v_e = rng.gen_range(cfg.ego_speed.0..=cfg.ego_speed.1);
    let v_t = (v_e + rng.gen_range(-cfg.lane_speed_offset..=cfg.lane_speed_offset)).max(3.0);

    // ego lane: scripted-free lead, PV, EGO, RV
    let mut cars = Vec::new();
    let pv_x = rng.gen_range(15.0..50.0);
    let lead_x = pv_x + rng.gen_range(20.0..50.0);
    cars.push(vehicle(lead_x, v_e, (IdmParams::default(), Behavior::ConstantVelocity)));
    cars.push(vehicle(pv_x, v_e, idm(v_e * 1.15, Some(0))));
    cars.push(vehicle(0.0, v_e, idm(v_e * 1.15, Some(1))));
    cars.push(vehicle(-rng.gen_range(15.0..50.0), v_e, idm(v_e * 1.15, Some(2))));
    let ego = 2;
    let n_ego_lane = cars.len();

    // target lane platoon centred on the ego halfway through the episode
    let spacing: Vec<f64> = (1..cfg.target_vehicles)
        .map(|_| rng.gen_range(cfg.target_gap.0..cfg.target_gap.1) + LENGTH)
        .collect();
    let platoon: f64 = spacing.iter().sum();
    let t_mid = total as f64 * FRAME_DT / 2.0;
    let mut x = platoon / 2.0 - (v_t - v_e) * t_mid + rng.gen_range(-platoon / 3.0..=platoon / 3.0);
    let lead = cars.len();
    cars.push(vehicle(x, v_t, (IdmParams::default(), Behavior::ConstantVelocity)));
    for s in &spacing {
        x -= s;
        let leader = cars.len() - 1;
        let v0 = v_t * rng.gen_range(1.0..1.25);
        cars.push(vehicle(x, v_t, idm(v0, Some(leader))));
    }

    let lanes: Vec<i32> = (0..cars.len())
        .map(|i| if i < n_ego_lane { EGO_LANE } else { TARGET_LANE })
        .collect();
    let ids: Vec<u32> = (0..cars.len())
        .map(|i| {
            if i == ego {
                EGO_ID
            } else if i < ego {
                i as u32 + 2
            } else {
                i as u32 + 1
            }
        })
        .collect();

    let noise = Normal::new(0.0, cfg.speed_noise.max(0.0)).expect("finite noise level");
    let mut clean: Vec<Track> = ids
        .iter()
        .map(|&id| Track {
            vehicle_id: id,
            frames: Vec::new(),
        })
        .collect();
    let mut noisy = clean.clone();
    let mut event: Option<(f64, usize)> = None;

    for step in 0..total {
        if step >= cfg.warmup_frames {
            let frame_id = (step - cfg.warmup_frames + 1) as i64;
            for (i, car) in cars.iter().enumerate() {
                let f = TrajectoryFrame {
                    vehicle_id: ids[i],
                    frame_id,
                    lane_id: lanes[i],
                    longitudinal_pos: car.pos,
                    lateral_pos: 0.0,
                    speed: car.speed,
                    length: car.length,
                };
                clean[i].frames.push(f);
                noisy[i].frames.push(TrajectoryFrame {
                    speed: (car.speed + noise.sample(rng)).max(0.0),
                    ..f
                });
            }
        }
        // scripted lead speed changes
        match &mut event {
            Some((a, left)) => {
                cars[lead].speed = (cars[lead].speed + *a * FRAME_DT).clamp(2.0, 40.0);
                *left -= 1;
                if *left == 0 {
                    event = None;
                }
            }
            None => {
                if rng.gen_bool((cfg.event_rate * FRAME_DT).clamp(0.0, 1.0)) {
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    let frames =
                        (rng.gen_range(cfg.event_duration.0..=cfg.event_duration.1) / FRAME_DT).round() as usize;
                    event = Some((sign * cfg.event_accel, frames.max(1)));
                }
            }
        }
        cars = step_scene(&cars, FRAME_DT);
    }
    Episode { clean, noisy }
}

/// Labeled gaps of the ego looking left, with labels from the clean tracks
/// and gaps from the noisy ones.
pub fn label_episode(ep: &Episode, recording: u32, labels: &LabelConfig) -> (GapSequence, Scenes) {
    let layout = LaneLayout::ngsim();
    let clean_scenes = build_scenes(&ep.clean);
    let noisy_scenes = build_scenes(&ep.noisy);
    let ego = ep.clean.iter().find(|t| t.vehicle_id == EGO_ID).expect("ego track");
    let frames = automatic_label(ego, &clean_scenes, Side::Left, &layout, labels)
        .into_iter()
        .map(|(frame_id, label)| LabeledGaps {
            frame_id,
            gaps: neighbors_in_lanes(&noisy_scenes[&frame_id], EGO_ID, EGO_LANE, TARGET_LANE, Side::Left)
                .expect("ego recorded in every frame")
                .gaps,
            label,
        })
        .collect();
    let seq = GapSequence {
        recording,
        vehicle_id: EGO_ID,
        target_side: Side::Left,
        source_lane: EGO_LANE,
        target_lane: TARGET_LANE,
        frames,
    };
    (seq, noisy_scenes)
}

/// `cfg.sequences` episodes, one recording each. Episode `i` depends only on
/// `(seed, i)`.
pub fn generate(cfg: &SyntheticConfig, labels: &LabelConfig, seed: u64) -> Dataset {
    let parts: Vec<(GapSequence, Scenes)> = (0..cfg.sequences)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let ep = simulate_episode(cfg, &mut rng);
            label_episode(&ep, i as u32, labels)
        })
        .collect();
    let mut sequences = Vec::with_capacity(parts.len());
    let mut scenes = BTreeMap::new();
    for (i, (seq, sc)) in parts.into_iter().enumerate() {
        sequences.push(seq);
        scenes.insert(i as u32, sc);
    }
    Dataset {
        scheme: Scheme::Automatic,
        sequences,
        scenes,
    }
}
