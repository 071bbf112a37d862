//! Automatic labels against a direct re-evaluation of the rule, and the IDM
//! baseline with a perfect predictor.

use lanegap::baselines::idm_baseline_label;
use lanegap::idm::Predictor;
use lanegap::labeling::{automatic_label, LabelConfig};
use lanegap::ngsim::{
    build_scenes, neighbors_in_lanes, observe_in_lanes, Gaps, LaneLayout, Observation, Scenes, Side, VehicleId,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

mod common;
use common::{oracle_labels, random_tracks};

#[test]
fn automatic_label_matches_direct_evaluation() {
    let cfg = LabelConfig::default();
    let layout = LaneLayout::ngsim();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut counts = [0usize; 2];
    for case in 0..1000 {
        let tracks = random_tracks(&mut rng);
        let scenes = build_scenes(&tracks);
        for side in Side::BOTH {
            let got = automatic_label(&tracks[0], &scenes, side, &layout, &cfg);
            let want = oracle_labels(&tracks[0], &scenes, side, &cfg);
            assert_eq!(got, want, "case {case}, side {side}");
            for (_, l) in &got {
                counts[l.class().unwrap()] += 1;
            }
        }
    }
    // both outcomes are exercised
    assert!(counts[0] > 1000 && counts[1] > 1000, "{counts:?}");
}

/// Reads the future straight from the recorded scenes.
struct PerfectFuture<'a> {
    scenes: &'a Scenes,
    ego: VehicleId,
    lanes: (i32, i32),
}

impl Predictor for PerfectFuture<'_> {
    fn predict(&self, obs: &Observation, steps: usize) -> Vec<Gaps> {
        (1..=steps as i64)
            .map(|k| {
                let scene = &self.scenes[&(obs.context.frame_id + k)];
                neighbors_in_lanes(scene, self.ego, self.lanes.0, self.lanes.1, obs.context.target_side)
                    .unwrap()
                    .gaps
            })
            .collect()
    }
}

#[test]
fn idm_baseline_with_perfect_future_is_the_automatic_label() {
    let cfg = LabelConfig::default();
    let layout = LaneLayout::ngsim();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    for _ in 0..200 {
        let tracks = random_tracks(&mut rng);
        let scenes = build_scenes(&tracks);
        let ego = &tracks[0];
        for side in Side::BOTH {
            for (frame_id, label) in automatic_label(ego, &scenes, side, &layout, &cfg) {
                let lane = ego.frame(frame_id).unwrap().lane_id;
                let target = layout.target_lane(lane, side).unwrap();
                let obs = observe_in_lanes(&scenes[&frame_id], ego.vehicle_id, lane, target, side).unwrap();
                let oracle = PerfectFuture {
                    scenes: &scenes,
                    ego: ego.vehicle_id,
                    lanes: (lane, target),
                };
                assert_eq!(idm_baseline_label(&obs, &oracle, &cfg), label.class().unwrap() as u8);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}
