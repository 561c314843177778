use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::plant::Gear;

/// Fixed-rate record of one simulated maneuver.
///
/// `omega_e`, `omega_w` and `a_xr` carry measurement noise; the clutch
/// diagnostics are noiseless.
#[derive(Debug, Clone, PartialEq)]
pub struct Telemetry<T> {
    pub dt: T,
    pub t: Vec<T>,
    pub omega_e: Vec<T>,
    pub omega_w: Vec<T>,
    pub gear: Vec<Gear>,
    pub a_xr: Vec<T>,
    pub p_act: Vec<T>,
    pub t_eng_act: Vec<T>,
    pub qs: Vec<bool>,
    pub clutch_torque: Vec<T>,
    pub clutch_slip: Vec<T>,
    pub clutch_locked: Vec<bool>,
    /// Shift request time (s).
    pub t_a: T,
    /// Gear engagement time (s).
    pub t_c: T,
    pub target_gear: u8,
}

/// One exported CSV row. Column names are part of the file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRow {
    pub t: f64,
    pub omega_e: f64,
    pub omega_w: f64,
    pub gear: u8,
    pub a_xr: f64,
    pub p_act: f64,
    #[serde(rename = "T_eng_act")]
    pub t_eng_act: f64,
    pub qs: u8,
}

pub const CSV_HEADER: [&str; 8] = ["t", "omega_e", "omega_w", "gear", "a_xr", "p_act", "T_eng_act", "qs"];

impl<T: Scalar> Telemetry<T> {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the first sample at or after `time`.
    pub fn index_at(&self, time: T) -> usize {
        self.t.partition_point(|&s| s < time)
    }

    pub fn rows(&self) -> impl Iterator<Item = TelemetryRow> + '_ {
        (0..self.len()).map(move |i| TelemetryRow {
            t: self.t[i].as_f64(),
            omega_e: self.omega_e[i].as_f64(),
            omega_w: self.omega_w[i].as_f64(),
            gear: self.gear[i].code(),
            a_xr: self.a_xr[i].as_f64(),
            p_act: self.p_act[i].as_f64(),
            t_eng_act: self.t_eng_act[i].as_f64(),
            qs: u8::from(self.qs[i]),
        })
    }

    /// Writes the comma-separated export with its header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Parses a telemetry export.
pub fn read_csv<R: Read>(reader: R) -> csv::Result<Vec<TelemetryRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().collect()
}
