use crate::idm::Predictor;
use crate::labeling::{target_gaps_acceptable, LabelConfig};
use crate::ngsim::{seconds_to_frames, Observation};

/// The automatic-label rule applied to predicted instead of observed
/// futures: 1 iff both target-lane closing times stay at or above the
/// minimum over the whole horizon.
pub fn idm_baseline_label<P: Predictor + ?Sized>(obs: &Observation, predictor: &P, cfg: &LabelConfig) -> u8 {
    let horizon = seconds_to_frames(cfg.horizon);
    let future = predictor.predict(obs, horizon);
    u8::from(future.iter().all(|g| target_gaps_acceptable(g, cfg.min_time_gap)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::idm::IdmConfig;
    use crate::ngsim::{build_scenes, observe, LaneLayout, Side, Track, TrajectoryFrame};

    fn car(id: u32, lane: i32, x: f64, v: f64) -> Track {
        Track {
            vehicle_id: id,
            frames: vec![TrajectoryFrame {
                vehicle_id: id,
                frame_id: 0,
                lane_id: lane,
                longitudinal_pos: x,
                lateral_pos: 0.0,
                speed: v,
                length: 4.5,
            }],
        }
    }

    #[test]
    fn empty_target_lane_is_suitable() {
        let tracks = vec![car(1, 2, 0.0, 20.0), car(2, 2, 40.0, 18.0)];
        let scenes = build_scenes(&tracks);
        let obs = observe(&scenes[&0], 1, Side::Left, &LaneLayout::ngsim()).unwrap();
        assert_eq!(
            idm_baseline_label(&obs, &IdmConfig::default(), &LabelConfig::default()),
            1
        );
    }

    #[test]
    fn fast_closing_leader_is_unsuitable() {
        // PLV 15 m ahead and 12 m/s slower: closing time 1.25 s and falling
        let tracks = vec![car(1, 2, 0.0, 25.0), car(2, 1, 19.5, 13.0)];
        let scenes = build_scenes(&tracks);
        let obs = observe(&scenes[&0], 1, Side::Left, &LaneLayout::ngsim()).unwrap();
        assert!(obs.context.gaps.closing_time(crate::ngsim::Role::Plv) > 1.0);
        assert_eq!(
            idm_baseline_label(&obs, &IdmConfig::default(), &LabelConfig::default()),
            0
        );
    }
}
