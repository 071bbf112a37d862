//! Line-delimited cache of normalized tracks: one frame per line, SI units,
//! columns `recording,vehicle_id,frame_id,lane_id,longitudinal_pos,lateral_pos,speed,length`.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::parse::assemble_tracks;
use super::{build_scenes, DataError, FrameId, LaneId, Scenes, Track, TrajectoryFrame, VehicleId};

/// Tracks from one recording session. Frame and vehicle ids are only unique
/// within a recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub id: u32,
    pub tracks: Vec<Track>,
}

impl Recording {
    pub fn scenes(&self) -> Scenes {
        build_scenes(&self.tracks)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StoreRow {
    pub recording: u32,
    pub vehicle_id: VehicleId,
    pub frame_id: FrameId,
    pub lane_id: LaneId,
    pub longitudinal_pos: f64,
    pub lateral_pos: f64,
    pub speed: f64,
    pub length: f64,
}

pub fn write_store<W: Write>(writer: W, recordings: &[Recording]) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    for rec in recordings {
        for track in &rec.tracks {
            for f in &track.frames {
                w.serialize(StoreRow {
                    recording: rec.id,
                    vehicle_id: f.vehicle_id,
                    frame_id: f.frame_id,
                    lane_id: f.lane_id,
                    longitudinal_pos: f.longitudinal_pos,
                    lateral_pos: f.lateral_pos,
                    speed: f.speed,
                    length: f.length,
                })?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_store<R: Read>(reader: R) -> Result<Vec<Recording>, DataError> {
    let mut r = csv::Reader::from_reader(reader);
    let mut grouped: BTreeMap<u32, BTreeMap<VehicleId, Vec<TrajectoryFrame>>> = BTreeMap::new();
    for row in r.deserialize::<StoreRow>() {
        let row = row?;
        grouped
            .entry(row.recording)
            .or_default()
            .entry(row.vehicle_id)
            .or_default()
            .push(TrajectoryFrame {
                vehicle_id: row.vehicle_id,
                frame_id: row.frame_id,
                lane_id: row.lane_id,
                longitudinal_pos: row.longitudinal_pos,
                lateral_pos: row.lateral_pos,
                speed: row.speed,
                length: row.length,
            });
    }
    Ok(grouped
        .into_iter()
        .map(|(id, by_vehicle)| Recording {
            id,
            tracks: assemble_tracks(by_vehicle).0,
        })
        .collect())
}
