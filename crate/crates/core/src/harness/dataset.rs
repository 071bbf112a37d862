use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::labeling::{
    action_based_label, augment, automatic_sequences, detect_lane_changes, AugmentConfig, GapSequence, LabelConfig,
};
use crate::ngsim::{observe_in_lanes, parse_ngsim, read_store, LaneLayout, Observation, Recording, Scenes, Units};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Action,
    Automatic,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Action => "action-based",
            Scheme::Automatic => "automatic",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "action" | "action-based" => Ok(Scheme::Action),
            "auto" | "automatic" => Ok(Scheme::Automatic),
            other => Err(format!("unknown labeling scheme `{other}`")),
        }
    }
}

/// Labeled sequences plus the scenes they were cut from, keyed by recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scheme: Scheme,
    pub sequences: Vec<GapSequence>,
    pub scenes: BTreeMap<u32, Scenes>,
}

impl Dataset {
    /// What the online predictors see at each frame of `seq`.
    pub fn observations(&self, seq: &GapSequence) -> Result<Vec<Observation>, HarnessError> {
        let scenes = self
            .scenes
            .get(&seq.recording)
            .ok_or_else(|| HarnessError::Missing(format!("scenes of recording {}", seq.recording)))?;
        seq.frames
            .iter()
            .map(|f| {
                let scene = scenes.get(&f.frame_id).ok_or_else(|| {
                    HarnessError::Missing(format!("frame {} of recording {}", f.frame_id, seq.recording))
                })?;
                observe_in_lanes(scene, seq.vehicle_id, seq.source_lane, seq.target_lane, seq.target_side)
                    .map_err(|e| HarnessError::Missing(e.to_string()))
            })
            .collect()
    }

    pub fn subset(&self, keep: impl Fn(&GapSequence) -> bool) -> Vec<GapSequence> {
        self.sequences.iter().filter(|s| keep(s)).cloned().collect()
    }
}

fn open(path: &Path) -> Result<BufReader<File>, HarnessError> {
    File::open(path).map(BufReader::new).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Fails before any parsing if one of `paths` does not exist.
pub fn check_files(paths: &[PathBuf]) -> Result<(), HarnessError> {
    for p in paths {
        if !p.is_file() {
            return Err(HarnessError::Io {
                path: p.clone(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            });
        }
    }
    Ok(())
}

/// Parses raw trajectory files, one recording per file, numbered in order.
pub fn load_ngsim(paths: &[PathBuf], units: Units) -> Result<Vec<Recording>, HarnessError> {
    check_files(paths)?;
    let mut out = Vec::with_capacity(paths.len());
    for (i, p) in paths.iter().enumerate() {
        let parsed = parse_ngsim(open(p)?, units)?;
        log::info!(
            "{}: {} tracks, {} rows dropped, {} duplicates",
            p.display(),
            parsed.tracks.len(),
            parsed.dropped_rows,
            parsed.duplicate_rows
        );
        out.push(Recording {
            id: i as u32,
            tracks: parsed.tracks,
        });
    }
    Ok(out)
}

pub fn load_store(path: &Path) -> Result<Vec<Recording>, HarnessError> {
    check_files(&[path.to_path_buf()])?;
    Ok(read_store(open(path)?)?)
}

/// Labels every recording with `scheme`. Action-based sequences are
/// augmented when `augment_cfg` is given.
pub fn label_recordings(
    recordings: &[Recording],
    scheme: Scheme,
    layout: &LaneLayout,
    labels: &LabelConfig,
    augment_cfg: Option<&AugmentConfig>,
    seed: u64,
) -> Dataset {
    let mut sequences = Vec::new();
    let mut scenes = BTreeMap::new();
    for rec in recordings {
        let sc = rec.scenes();
        match scheme {
            Scheme::Action => {
                let events: Vec<_> = rec
                    .tracks
                    .iter()
                    .flat_map(|t| detect_lane_changes(t, labels.lateral_speed_threshold))
                    .filter(|e| layout.target_lane(e.source_lane, e.direction) == Some(e.target_lane))
                    .collect();
                let (seqs, stats) = action_based_label(rec.id, &events, &sc, labels);
                log::info!("recording {}: {stats:?}", rec.id);
                let seqs = match augment_cfg {
                    Some(a) => {
                        let mut rng = ChaCha8Rng::seed_from_u64(seed);
                        rng.set_stream(u64::from(rec.id));
                        augment(&seqs, &sc, rng.next_u64(), a)
                    }
                    None => seqs,
                };
                sequences.extend(seqs.iter().map(|s| s.to_gap_sequence()));
            }
            Scheme::Automatic => {
                let seqs = automatic_sequences(rec.id, &rec.tracks, &sc, layout, labels);
                sequences.extend(seqs.iter().map(|s| s.to_gap_sequence()));
            }
        }
        scenes.insert(rec.id, sc);
    }
    Dataset {
        scheme,
        sequences,
        scenes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::synthetic::{generate, SyntheticConfig};

    #[test]
    fn missing_file_is_an_io_error() {
        let err = load_ngsim(&[PathBuf::from("/definitely/not/here.csv")], Units::Feet).unwrap_err();
        assert!(matches!(err, HarnessError::Io { .. }));
    }

    #[test]
    fn observations_match_sequence_gaps() {
        let d = generate(
            &SyntheticConfig {
                sequences: 3,
                frames: 50,
                ..SyntheticConfig::default()
            },
            &LabelConfig::default(),
            5,
        );
        for s in &d.sequences {
            let obs = d.observations(s).unwrap();
            assert_eq!(obs.len(), s.len());
            for (o, f) in obs.iter().zip(&s.frames) {
                assert_eq!(o.context.gaps, f.gaps);
                assert_eq!(o.context.frame_id, f.frame_id);
            }
        }
    }

    #[test]
    fn scheme_names() {
        assert_eq!("auto".parse::<Scheme>().unwrap(), Scheme::Automatic);
        assert_eq!("action".parse::<Scheme>().unwrap(), Scheme::Action);
        assert!("other".parse::<Scheme>().is_err());
    }
}
