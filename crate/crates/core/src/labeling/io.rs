//! Sequence files: one CSV row per frame, grouped by a sequence index.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{GapSequence, Label, LabeledGaps, LabeledSequence};
use crate::ngsim::{DataError, FrameId, Gaps, LaneId, Side, VehicleId};

/// Distances of absent neighbours are written as `inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRow {
    pub sequence: usize,
    pub recording: u32,
    pub vehicle_id: VehicleId,
    pub frame_id: FrameId,
    pub target_side: Side,
    pub source_lane: LaneId,
    pub target_lane: LaneId,
    pub d_pv: f64,
    pub d_rv: f64,
    pub d_plv: f64,
    pub d_pfv: f64,
    pub v_pv: f64,
    pub v_rv: f64,
    pub v_plv: f64,
    pub v_pfv: f64,
    pub label: i8,
}

impl SequenceRow {
    fn new(sequence: usize, s: &GapSequence, f: &LabeledGaps) -> Self {
        let [d_pv, d_rv, d_plv, d_pfv] = f.gaps.distance;
        let [v_pv, v_rv, v_plv, v_pfv] = f.gaps.rel_speed;
        SequenceRow {
            sequence,
            recording: s.recording,
            vehicle_id: s.vehicle_id,
            frame_id: f.frame_id,
            target_side: s.target_side,
            source_lane: s.source_lane,
            target_lane: s.target_lane,
            d_pv,
            d_rv,
            d_plv,
            d_pfv,
            v_pv,
            v_rv,
            v_plv,
            v_pfv,
            label: f.label.code(),
        }
    }

    fn gaps(&self) -> Gaps {
        Gaps {
            distance: [self.d_pv, self.d_rv, self.d_plv, self.d_pfv],
            rel_speed: [self.v_pv, self.v_rv, self.v_plv, self.v_pfv],
        }
    }
}

pub fn write_gap_sequences<W: Write>(writer: W, sequences: &[GapSequence]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, s) in sequences.iter().enumerate() {
        for f in &s.frames {
            w.serialize(SequenceRow::new(i, s, f))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sequences<W: Write>(writer: W, sequences: &[LabeledSequence]) -> Result<(), DataError> {
    let gap: Vec<GapSequence> = sequences.iter().map(GapSequence::from).collect();
    write_gap_sequences(writer, &gap)
}

/// Reads a sequence file; rows sharing a sequence index must be adjacent.
pub fn read_sequences<R: Read>(reader: R) -> Result<Vec<GapSequence>, DataError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut out: Vec<GapSequence> = Vec::new();
    let mut current: Option<usize> = None;
    for (line, row) in r.deserialize::<SequenceRow>().enumerate() {
        let row = row?;
        let label = Label::from_code(row.label).ok_or_else(|| DataError::BadValue {
            line: line + 2,
            column: "label",
            value: row.label.to_string(),
        })?;
        if current != Some(row.sequence) {
            current = Some(row.sequence);
            out.push(GapSequence {
                recording: row.recording,
                vehicle_id: row.vehicle_id,
                target_side: row.target_side,
                source_lane: row.source_lane,
                target_lane: row.target_lane,
                frames: Vec::new(),
            });
        }
        let seq = out.last_mut().expect("pushed above");
        seq.frames.push(LabeledGaps {
            frame_id: row.frame_id,
            gaps: row.gaps(),
            label,
        });
    }
    Ok(out)
}
