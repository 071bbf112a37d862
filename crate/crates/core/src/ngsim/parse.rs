use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read};

use log::warn;

use super::{DataError, Track, TrajectoryFrame, Units, VehicleId};

/// Column order of the headerless public NGSIM trajectory text files.
const STANDARD_COLUMNS: [&str; 18] = [
    "Vehicle_ID",
    "Frame_ID",
    "Total_Frames",
    "Global_Time",
    "Local_X",
    "Local_Y",
    "Global_X",
    "Global_Y",
    "v_Length",
    "v_Width",
    "v_Class",
    "v_Vel",
    "v_Acc",
    "Lane_ID",
    "Preceding",
    "Following",
    "Space_Headway",
    "Time_Headway",
];

const VEHICLE_ID: &str = "Vehicle_ID";
const FRAME_ID: &str = "Frame_ID";
const LOCAL_X: &str = "Local_X";
const LOCAL_Y: &str = "Local_Y";
const V_VEL: &str = "v_Vel";
const V_LENGTH: &str = "v_Length";
const LANE_ID: &str = "Lane_ID";

#[derive(Debug, Clone, Copy)]
struct ColumnMap {
    vehicle_id: usize,
    frame_id: usize,
    local_x: usize,
    local_y: usize,
    v_vel: usize,
    v_length: usize,
    lane_id: usize,
}

impl ColumnMap {
    fn from_names<'a>(names: impl IntoIterator<Item = &'a str> + Clone) -> Result<Self, DataError> {
        let find = |wanted: &'static str| {
            names
                .clone()
                .into_iter()
                .position(|n| n.trim().trim_matches('"').eq_ignore_ascii_case(wanted))
                .ok_or(DataError::MissingColumn(wanted))
        };
        Ok(Self {
            vehicle_id: find(VEHICLE_ID)?,
            frame_id: find(FRAME_ID)?,
            local_x: find(LOCAL_X)?,
            local_y: find(LOCAL_Y)?,
            v_vel: find(V_VEL)?,
            v_length: find(V_LENGTH)?,
            lane_id: find(LANE_ID)?,
        })
    }

    fn width(&self) -> usize {
        [
            self.vehicle_id,
            self.frame_id,
            self.local_x,
            self.local_y,
            self.v_vel,
            self.v_length,
            self.lane_id,
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
            + 1
    }
}

/// Result of [`parse_ngsim`].
#[derive(Debug, Clone, Default)]
pub struct ParsedTracks {
    pub tracks: Vec<Track>,
    /// Rows with a non-finite value, negative speed or non-positive length.
    pub dropped_rows: usize,
    /// Repeated (vehicle, frame) rows; the first occurrence is kept.
    pub duplicate_rows: usize,
}

fn split_fields(line: &str) -> Vec<&str> {
    if line.contains(',') {
        line.split(',').map(str::trim).collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn number(fields: &[&str], idx: usize, column: &'static str, line: usize) -> Result<f64, DataError> {
    let raw = fields[idx].trim_matches('"');
    raw.parse::<f64>().map_err(|_| DataError::BadValue {
        line,
        column,
        value: raw.to_string(),
    })
}

fn integer(fields: &[&str], idx: usize, column: &'static str, line: usize) -> Result<i64, DataError> {
    let v = number(fields, idx, column, line)?;
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(DataError::BadValue {
            line,
            column,
            value: fields[idx].to_string(),
        });
    }
    Ok(v as i64)
}

/// Parses an NGSIM trajectory table (comma or whitespace delimited, with or
/// without a header row) into per-vehicle tracks in SI units.
///
/// Tracks are split wherever a vehicle's frame ids jump by more than one.
pub fn parse_ngsim<R: Read>(source: R, units: Units) -> Result<ParsedTracks, DataError> {
    let scale = units.to_meters();
    let reader = BufReader::new(source);
    let mut columns: Option<ColumnMap> = None;
    let mut dropped_rows = 0usize;
    let mut by_vehicle: BTreeMap<VehicleId, Vec<TrajectoryFrame>> = BTreeMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields = split_fields(trimmed);
        let map = match columns {
            Some(m) => m,
            None => {
                let first = fields[0].trim_matches('"');
                let m = if first.parse::<f64>().is_ok() {
                    ColumnMap::from_names(STANDARD_COLUMNS.iter().copied())?
                } else {
                    let m = ColumnMap::from_names(fields.iter().copied())?;
                    columns = Some(m);
                    continue;
                };
                columns = Some(m);
                m
            }
        };
        if fields.len() < map.width() {
            return Err(DataError::ShortRow {
                line: line_no,
                expected: map.width(),
                found: fields.len(),
            });
        }
        let vehicle_id = integer(&fields, map.vehicle_id, VEHICLE_ID, line_no)?;
        let frame_id = integer(&fields, map.frame_id, FRAME_ID, line_no)?;
        let lane_id = integer(&fields, map.lane_id, LANE_ID, line_no)?;
        let lateral = number(&fields, map.local_x, LOCAL_X, line_no)? * scale;
        let longitudinal = number(&fields, map.local_y, LOCAL_Y, line_no)? * scale;
        let speed = number(&fields, map.v_vel, V_VEL, line_no)? * scale;
        let length = number(&fields, map.v_length, V_LENGTH, line_no)? * scale;

        let valid = [lateral, longitudinal, speed, length].iter().all(|v| v.is_finite())
            && speed >= 0.0
            && length > 0.0
            && vehicle_id >= 0;
        if !valid {
            dropped_rows += 1;
            continue;
        }
        by_vehicle
            .entry(vehicle_id as VehicleId)
            .or_default()
            .push(TrajectoryFrame {
                vehicle_id: vehicle_id as VehicleId,
                frame_id,
                lane_id: lane_id as i32,
                longitudinal_pos: longitudinal,
                lateral_pos: lateral,
                speed,
                length,
            });
    }

    if dropped_rows > 0 {
        warn!("dropped {dropped_rows} NGSIM rows with invalid values");
    }
    let (tracks, duplicate_rows) = assemble_tracks(by_vehicle);
    if duplicate_rows > 0 {
        warn!("ignored {duplicate_rows} duplicate (vehicle, frame) rows");
    }
    Ok(ParsedTracks {
        tracks,
        dropped_rows,
        duplicate_rows,
    })
}

/// Sorts each vehicle's frames, drops duplicates and splits at frame gaps.
pub(crate) fn assemble_tracks(by_vehicle: BTreeMap<VehicleId, Vec<TrajectoryFrame>>) -> (Vec<Track>, usize) {
    let mut tracks = Vec::new();
    let mut duplicates = 0;
    for (vehicle_id, mut frames) in by_vehicle {
        frames.sort_by_key(|f| f.frame_id);
        let before = frames.len();
        frames.dedup_by_key(|f| f.frame_id);
        duplicates += before - frames.len();

        let mut current: Vec<TrajectoryFrame> = Vec::new();
        for f in frames {
            if let Some(last) = current.last() {
                if f.frame_id - last.frame_id > 1 {
                    tracks.push(Track {
                        vehicle_id,
                        frames: std::mem::take(&mut current),
                    });
                }
            }
            current.push(f);
        }
        if !current.is_empty() {
            tracks.push(Track {
                vehicle_id,
                frames: current,
            });
        }
    }
    (tracks, duplicates)
}
