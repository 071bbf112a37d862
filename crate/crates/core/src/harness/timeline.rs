use std::io::Write;
use std::ops::RangeInclusive;

use serde::{Deserialize, Serialize};

use super::eval::svm_row;
use super::{Dataset, HarnessError};
use crate::baselines::{svm_predict, SvmModel};
use crate::grid::encode_gaps;
use crate::idm::Predictor;
use crate::labeling::GapSequence;
use crate::neural::{forward, predict_online, ModelWeights};
use crate::ngsim::{FrameId, Side, VehicleId};

/// Per-frame outputs behind a probability-over-time plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineRow {
    pub frame_id: FrameId,
    pub label: i8,
    pub svm: Option<u8>,
    /// Recurrent probability of class 1.
    pub p: Option<f64>,
    pub o: Option<u8>,
}

pub struct TimelineModels<'a> {
    pub svm: Option<(&'a SvmModel, &'a [usize])>,
    pub recurrent: Option<&'a ModelWeights>,
    /// Future source of a bidirectional model; real frames when `None`.
    pub predictor: Option<&'a (dyn Predictor + Sync)>,
    pub block_frames: usize,
}

/// Rows for every frame of `vehicle`'s `side` sequences that falls inside
/// `window`. The recurrent state starts fresh at the first row of each
/// sequence.
pub fn export_timeline(
    dataset: &Dataset,
    recording: u32,
    vehicle: VehicleId,
    side: Side,
    window: RangeInclusive<FrameId>,
    models: &TimelineModels<'_>,
) -> Result<Vec<TimelineRow>, HarnessError> {
    let mut rows = Vec::new();
    for seq in dataset
        .sequences
        .iter()
        .filter(|s| s.recording == recording && s.vehicle_id == vehicle && s.target_side == side)
    {
        let idx: Vec<usize> = (0..seq.len())
            .filter(|&i| window.contains(&seq.frames[i].frame_id))
            .collect();
        let (Some(&lo), Some(&hi)) = (idx.first(), idx.last()) else {
            continue;
        };
        let part = GapSequence {
            frames: seq.frames[lo..=hi].to_vec(),
            ..seq.clone()
        };
        let outputs = match models.recurrent {
            None => None,
            Some(w) => Some(match models.predictor {
                Some(pred) if w.is_bidirectional() => {
                    predict_online(w, &dataset.observations(&part)?, pred, models.block_frames)
                }
                _ => {
                    let grids: Vec<_> = part.frames.iter().map(|f| encode_gaps(&f.gaps)).collect();
                    forward(&grids, w, models.block_frames)
                }
            }),
        };
        for (k, i) in (lo..=hi).enumerate() {
            let f = &seq.frames[i];
            let out = outputs.as_ref().map(|o| o[k]);
            rows.push(TimelineRow {
                frame_id: f.frame_id,
                label: f.label.code(),
                svm: models.svm.map(|(m, offsets)| svm_predict(m, &svm_row(seq, i, offsets))),
                p: out.map(|o| o.p()),
                o: out.map(|o| o.class()),
            });
        }
    }
    Ok(rows)
}

/// CSV with a header line even when `rows` is empty; absent outputs are
/// empty cells.
pub fn write_timeline<W: Write>(writer: W, rows: &[TimelineRow]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frame_id", "label", "svm", "p", "o"])?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        w.write_record([
            r.frame_id.to_string(),
            r.label.to_string(),
            opt(r.svm.map(|v| v.to_string())),
            opt(r.p.map(|v| v.to_string())),
            opt(r.o.map(|v| v.to_string())),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
