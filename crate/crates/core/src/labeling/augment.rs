use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::automatic::target_gaps_acceptable;
use super::{Label, LabelConfig, LabeledContext, LabeledSequence};
use crate::ngsim::{neighbors_in_lanes, seconds_to_frames, FrameId, Scenes};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    /// Start and end of a shifted variant move by up to this much (s).
    pub max_shift: f64,
    pub shifted_per_sequence: usize,
    pub pure_windows_per_sequence: usize,
    /// Length of the single-label windows (s).
    pub pure_window: f64,
    /// Shorter variants are discarded (s).
    pub min_window: f64,
    /// How far around a sequence single-label stretches are searched (s).
    pub search_radius: f64,
    pub labels: LabelConfig,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            max_shift: 5.0,
            shifted_per_sequence: 1,
            pure_windows_per_sequence: 1,
            pure_window: 10.0,
            min_window: 1.0,
            search_radius: 30.0,
            labels: LabelConfig::default(),
        }
    }
}

/// Automatic labels over a contiguous stretch of frames where the ego is on
/// the sequence's source lane.
struct Region {
    lo: FrameId,
    hi: FrameId,
    auto: Vec<Option<Label>>,
}

impl Region {
    fn around(seq: &LabeledSequence, scenes: &Scenes, radius: i64, cfg: &LabelConfig) -> Option<Region> {
        let (a, b) = (seq.first_frame()?, seq.last_frame()?);
        let on_source = |f: FrameId| {
            scenes
                .get(&f)
                .and_then(|s| s.entries.get(&seq.vehicle_id))
                .is_some_and(|e| e.lane_id == seq.source_lane)
        };
        let mut lo = a;
        while lo > a - radius && on_source(lo - 1) {
            lo -= 1;
        }
        let mut hi = b;
        while hi < b + radius && on_source(hi + 1) {
            hi += 1;
        }

        let horizon = seconds_to_frames(cfg.horizon) as i64;
        // flags[k] for frame lo + k; None once the ego disappears
        let flags: Vec<Option<bool>> = (lo..=hi + horizon)
            .map(|f| {
                let scene = scenes.get(&f)?;
                let ctx = neighbors_in_lanes(scene, seq.vehicle_id, seq.source_lane, seq.target_lane, seq.target_side)
                    .ok()?;
                Some(target_gaps_acceptable(&ctx.gaps, cfg.min_time_gap))
            })
            .collect();
        let auto = (lo..=hi)
            .map(|f| {
                let k = (f - lo) as usize;
                let window = &flags[k + 1..=k + horizon as usize];
                window
                    .iter()
                    .try_fold(true, |acc, v| v.map(|ok| acc && ok))
                    .map(Label::from_bool)
            })
            .collect();
        Some(Region { lo, hi, auto })
    }

    fn auto_label(&self, f: FrameId) -> Option<Label> {
        self.auto[(f - self.lo) as usize]
    }
}

fn build_window(
    seq: &LabeledSequence,
    scenes: &Scenes,
    region: &Region,
    from: FrameId,
    to: FrameId,
    pure: bool,
) -> LabeledSequence {
    let (a, b) = (seq.first_frame().unwrap(), seq.last_frame().unwrap());
    let frames = (from..=to)
        .map(|f| {
            if !pure && (a..=b).contains(&f) {
                return seq.frames[(f - a) as usize].clone();
            }
            let context = neighbors_in_lanes(
                &scenes[&f],
                seq.vehicle_id,
                seq.source_lane,
                seq.target_lane,
                seq.target_side,
            )
            .expect("region frames contain the ego");
            LabeledContext {
                context,
                label: region.auto_label(f).unwrap_or(Label::Ignore),
            }
        })
        .collect();
    LabeledSequence {
        frames,
        ..seq.clone_header()
    }
}

impl LabeledSequence {
    fn clone_header(&self) -> LabeledSequence {
        LabeledSequence {
            recording: self.recording,
            vehicle_id: self.vehicle_id,
            target_side: self.target_side,
            source_lane: self.source_lane,
            target_lane: self.target_lane,
            frames: Vec::new(),
        }
    }
}

/// Adds randomly prolonged or shortened copies of each sequence and windows
/// that carry a single label throughout.
///
/// Frames outside an original sequence take their automatic label, or ignore
/// where the automatic scheme is undefined. `scenes` must belong to the
/// recording the sequences were labeled on.
pub fn augment(sequences: &[LabeledSequence], scenes: &Scenes, seed: u64, cfg: &AugmentConfig) -> Vec<LabeledSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = seconds_to_frames(cfg.max_shift) as i64;
    let min_len = seconds_to_frames(cfg.min_window).max(1) as i64;
    let pure_len = seconds_to_frames(cfg.pure_window).max(1) as i64;
    let radius = seconds_to_frames(cfg.search_radius) as i64;

    let mut out: Vec<LabeledSequence> = sequences.to_vec();
    for (idx, seq) in sequences.iter().enumerate() {
        let Some(region) = Region::around(seq, scenes, radius.max(shift), &cfg.labels) else {
            continue;
        };
        let (a, b) = (seq.first_frame().unwrap(), seq.last_frame().unwrap());

        for _ in 0..cfg.shifted_per_sequence {
            let from = (a + rng.gen_range(-shift..=shift)).max(region.lo).max(a - shift);
            let to = (b + rng.gen_range(-shift..=shift)).min(region.hi).min(b + shift);
            if to - from + 1 >= min_len {
                out.push(build_window(seq, scenes, &region, from, to, false));
            }
        }

        for k in 0..cfg.pure_windows_per_sequence {
            let wanted = if (idx + k) % 2 == 0 {
                Label::Positive
            } else {
                Label::Negative
            };
            let stretches = |label: Label| {
                let mut found = Vec::new();
                let mut run_start: Option<FrameId> = None;
                for f in region.lo..=region.hi + 1 {
                    let same = f <= region.hi && region.auto_label(f) == Some(label);
                    match (same, run_start) {
                        (true, None) => run_start = Some(f),
                        (false, Some(s)) => {
                            if f - s >= pure_len {
                                found.push((s, f - 1));
                            }
                            run_start = None;
                        }
                        _ => {}
                    }
                }
                found
            };
            let mut candidates = stretches(wanted);
            if candidates.is_empty() {
                let other = if wanted == Label::Positive {
                    Label::Negative
                } else {
                    Label::Positive
                };
                candidates = stretches(other);
            }
            if candidates.is_empty() {
                continue;
            }
            let (s, e) = candidates[rng.gen_range(0..candidates.len())];
            let start = rng.gen_range(s..=e - pure_len + 1);
            out.push(build_window(seq, scenes, &region, start, start + pure_len - 1, true));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::{action_based_label, LaneChangeEvent};
    use crate::ngsim::{build_scenes, Side, Track, TrajectoryFrame};

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

    /// Ten egos on lane 3 with target-lane traffic whose gap changes over
    /// time, each with one accepted lane change.
    fn fixture() -> (Scenes, Vec<LabeledSequence>) {
        let len = 900i64;
        let mut tracks = Vec::new();
        let mut events = Vec::new();
        for e in 0..10u32 {
            let base = 1000.0 * e as f64;
            let ego_id = 100 + e * 10;
            tracks.push(Track {
                vehicle_id: ego_id,
                frames: (0..len)
                    .map(|f| car(ego_id, f, 3, base + 2.0 * f as f64, 20.0))
                    .collect(),
            });
            let spread = |f: i64| if f < 400 { 1.0 } else { 1.8 };
            let offsets = [(1, 3, 30.0), (2, 3, -20.0), (3, 2, 40.0), (4, 2, -25.0)];
            for (k, lane, off) in offsets {
                let id = ego_id + k;
                tracks.push(Track {
                    vehicle_id: id,
                    frames: (0..len)
                        .map(|f| {
                            // target-lane cars slowly approach during the first part
                            let drift = if lane == 2 && f < 400 { -0.01 * f as f64 } else { 0.0 };
                            car(id, f, lane, base + 2.0 * f as f64 + off * spread(f) + drift, 20.0)
                        })
                        .collect(),
                });
            }
            events.push(LaneChangeEvent {
                vehicle_id: ego_id,
                t_start: 400,
                t_cross: 420,
                direction: Side::Left,
                source_lane: 3,
                target_lane: 2,
            });
        }
        let scenes = build_scenes(&tracks);
        let (seqs, stats) = action_based_label(0, &events, &scenes, &LabelConfig::default());
        assert_eq!(stats.kept, 10);
        (scenes, seqs)
    }

    #[test]
    fn empty_input_gives_empty_output() {
        let scenes = Scenes::new();
        assert!(augment(&[], &scenes, 1, &AugmentConfig::default()).is_empty());
    }

    #[test]
    fn augmentation_is_deterministic_and_bounded() {
        let (scenes, seqs) = fixture();
        let cfg = AugmentConfig::default();
        let a = augment(&seqs, &scenes, 42, &cfg);
        let b = augment(&seqs, &scenes, 42, &cfg);
        assert_eq!(a, b);
        assert!(a.len() >= 10 && a.len() <= 30, "{}", a.len());
        assert_eq!(&a[..10], &seqs[..]);
        let c = augment(&seqs, &scenes, 43, &cfg);
        assert_ne!(a, c);
    }

    #[test]
    fn variants_are_contiguous_and_keep_original_labels() {
        let (scenes, seqs) = fixture();
        let out = augment(&seqs, &scenes, 7, &AugmentConfig::default());
        let originals: std::collections::BTreeMap<(u32, FrameId), Label> = seqs
            .iter()
            .flat_map(|s| {
                s.frames
                    .iter()
                    .map(move |f| ((s.vehicle_id, f.context.frame_id), f.label))
            })
            .collect();
        let mut saw_pure = false;
        for s in &out[10..] {
            assert!(s
                .frames
                .windows(2)
                .all(|w| w[1].context.frame_id == w[0].context.frame_id + 1));
            let labels: std::collections::BTreeSet<Label> = s.labels().collect();
            if labels.len() == 1 && s.frames.len() == 100 {
                saw_pure = true;
            }
            for f in &s.frames {
                assert_eq!(f.context.ego.lane_id, 3);
                if let Some(orig) = originals.get(&(s.vehicle_id, f.context.frame_id)) {
                    if labels.len() > 1 {
                        assert_eq!(*orig, f.label);
                    }
                }
            }
        }
        assert!(saw_pure);
    }
}
