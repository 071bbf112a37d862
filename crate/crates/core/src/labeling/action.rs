use log::warn;

use super::{FilterParams, Label, LabelConfig, LabelError, LabeledContext, LabeledSequence, LaneChangeEvent};
use crate::ngsim::{neighbors_in_lanes, seconds_to_frames, Gaps, NeighborContext, Role, Scenes};

/// The two situation scores of the information-gain filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SituationDistances {
    /// Weighted sum of distances and absolute relative speeds.
    pub ad: f64,
    /// Suitability score; higher means better suited.
    pub sd: f64,
}

/// `ad = d_PV + γ d_PLV + d_RV + γ d_PFV + β(|v_PV| + γ|v_PLV| + |v_RV| + γ|v_PFV|)`,
/// `sd = v_PV + γ v_PLV − v_RV − γ v_PFV − ad`.
pub fn situation_distances(gaps: &Gaps, params: &FilterParams) -> Result<SituationDistances, LabelError> {
    for role in Role::ALL {
        if !gaps.is_present(role) {
            return Err(LabelError::AbsentNeighbor(role.as_str()));
        }
    }
    let g = params.gamma;
    let d = |r: Role| gaps.distance(r);
    let v = |r: Role| gaps.rel_speed(r);
    let ad = d(Role::Pv)
        + g * d(Role::Plv)
        + d(Role::Rv)
        + g * d(Role::Pfv)
        + params.beta * (v(Role::Pv).abs() + g * v(Role::Plv).abs() + v(Role::Rv).abs() + g * v(Role::Pfv).abs());
    let sd = v(Role::Pv) + g * v(Role::Plv) - v(Role::Rv) - g * v(Role::Pfv) - ad;
    Ok(SituationDistances { ad, sd })
}

/// Relative change of `ad` between a negative and a positive frame.
fn relative_change(negative: &SituationDistances, positive: &SituationDistances) -> Result<f64, LabelError> {
    if negative.ad == 0.0 {
        return Err(LabelError::ZeroReference);
    }
    Ok((negative.ad - positive.ad).abs() / negative.ad)
}

/// Keeps a (negative, positive) pair only if the situation changed enough and
/// became more suitable.
pub fn filter_pair(negative: &Gaps, positive: &Gaps, params: &FilterParams) -> Result<bool, LabelError> {
    let n = situation_distances(negative, params)?;
    let p = situation_distances(positive, params)?;
    let change = relative_change(&n, &p)?;
    Ok(change >= params.rel_change_min && n.sd >= p.sd)
}

/// Why events did or did not make it into the action-based set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ActionLabelStats {
    pub events: usize,
    pub kept: usize,
    pub insufficient_history: usize,
    pub lane_mismatch: usize,
    pub missing_neighbors: usize,
    pub filtered: usize,
}

/// Builds one sequence per accepted event: `negative_window` of negatives,
/// `min_label_gap` of ignore, then the maneuver frames as positives.
///
/// The filter is applied to the last negative frame and the first maneuver
/// frame.
pub fn action_based_label(
    recording: u32,
    events: &[LaneChangeEvent],
    scenes: &Scenes,
    cfg: &LabelConfig,
) -> (Vec<LabeledSequence>, ActionLabelStats) {
    let mut stats = ActionLabelStats {
        events: events.len(),
        ..Default::default()
    };
    let negative_frames = seconds_to_frames(cfg.negative_window) as i64;
    let gap_frames = seconds_to_frames(cfg.filter.min_label_gap) as i64;
    let mut out = Vec::new();

    'events: for e in events {
        let first = e.t_start - gap_frames - negative_frames;
        let mut frames = Vec::with_capacity((e.t_cross - first) as usize);
        for frame_id in first..e.t_cross {
            let Some(scene) = scenes.get(&frame_id) else {
                stats.insufficient_history += 1;
                continue 'events;
            };
            let Some(ego) = scene.entries.get(&e.vehicle_id) else {
                stats.insufficient_history += 1;
                continue 'events;
            };
            if ego.lane_id != e.source_lane {
                stats.lane_mismatch += 1;
                continue 'events;
            }
            let context = neighbors_in_lanes(scene, e.vehicle_id, e.source_lane, e.target_lane, e.direction)
                .expect("ego checked above");
            let label = if frame_id < e.t_start - gap_frames {
                Label::Negative
            } else if frame_id < e.t_start {
                Label::Ignore
            } else {
                Label::Positive
            };
            frames.push(LabeledContext { context, label });
        }

        let last_negative: &NeighborContext = &frames[(negative_frames - 1) as usize].context;
        let first_positive: &NeighborContext = &frames[(negative_frames + gap_frames) as usize].context;
        match filter_pair(&last_negative.gaps, &first_positive.gaps, &cfg.filter) {
            Ok(true) => {}
            Ok(false) => {
                stats.filtered += 1;
                continue;
            }
            Err(_) => {
                stats.missing_neighbors += 1;
                continue;
            }
        }
        stats.kept += 1;
        out.push(LabeledSequence {
            recording,
            vehicle_id: e.vehicle_id,
            target_side: e.direction,
            source_lane: e.source_lane,
            target_lane: e.target_lane,
            frames,
        });
    }
    let skipped = stats.insufficient_history + stats.lane_mismatch;
    if skipped > 0 {
        warn!(
            "skipped {skipped} of {} lane changes without a complete labeling window",
            stats.events
        );
    }
    (out, stats)
}
