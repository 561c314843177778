//! JSON-lines campaign log: one [`IterationRecord`] per line, the first one
//! carrying the campaign configuration.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CampaignError;
use crate::scalar::Scalar;

use super::campaign::{CampaignState, IterationRecord};

pub fn write_record<T: Scalar + Serialize, W: Write>(w: &mut W, record: &IterationRecord<T>) -> Result<(), CampaignError> {
    serde_json::to_writer(&mut *w, record).map_err(|e| CampaignError::Log(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_log<T: Scalar + Serialize, W: Write>(w: &mut W, state: &CampaignState<T>) -> Result<(), CampaignError> {
    for r in &state.records {
        write_record(w, r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses and checks a log: consecutive iteration numbers from 1, a
/// configuration on the first record, one mode throughout.
pub fn read_log<T: Scalar + DeserializeOwned, R: BufRead>(r: R) -> Result<CampaignState<T>, CampaignError> {
    let mut records: Vec<IterationRecord<T>> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: IterationRecord<T> =
            serde_json::from_str(&line).map_err(|e| CampaignError::Log(format!("line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    let first = records.first().ok_or_else(|| CampaignError::Log("empty log".into()))?;
    let config = first
        .config
        .clone()
        .ok_or_else(|| CampaignError::Log("first record lacks the campaign configuration".into()))?;
    config.validate().map_err(|e| CampaignError::Log(e.to_string()))?;
    for (i, rec) in records.iter().enumerate() {
        if rec.observation.n != i + 1 {
            return Err(CampaignError::Log(format!(
                "record {} has iteration {}, expected {}",
                i + 1,
                rec.observation.n,
                i + 1
            )));
        }
        if rec.mode != config.mode {
            return Err(CampaignError::Log(format!("record {} has mode {}, log is {}", i + 1, rec.mode, config.mode)));
        }
    }
    if records.len() > config.budget {
        return Err(CampaignError::Log(format!("{} records exceed the budget of {}", records.len(), config.budget)));
    }
    Ok(CampaignState { config, records })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbo::campaign::{CampaignConfig, Mode, Observation};
    use crate::controller::ParamSet;

    fn record(n: usize, mode: Mode) -> IterationRecord<f64> {
        IterationRecord {
            observation: Observation {
                n,
                theta: ParamSet::new(20.0 + 0.1, 0.1 / 3.0, 0.02),
                j_s: 1.0 / 7.0,
                j_d: 0.25,
                j: -123.456_789_012_345_67,
                c_t: 0.25,
                feasible: true,
                completed: true,
            },
            mode,
            incumbent_theta: None,
            incumbent_j: None,
            estimate: None,
            gp_hyperparams: None,
            acquisition: None,
            config: (n == 1).then(CampaignConfig::default),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let state = CampaignState { config: CampaignConfig::default(), records: (1..=3).map(|n| record(n, Mode::Cbo)).collect() };
        let mut buf = Vec::new();
        write_log(&mut buf, &state).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().next().unwrap().contains("\"J_s\""));
        assert!(text.contains("\"mode\":\"cbo\""));
        assert!(!text.contains("acquisition"));
        let back: CampaignState<f64> = read_log(buf.as_slice()).unwrap();
        assert_eq!(back, state);
    }

    #[test]
    fn schema_violations() {
        let write = |recs: Vec<IterationRecord<f64>>| {
            let mut buf = Vec::new();
            for r in &recs {
                write_record(&mut buf, r).unwrap();
            }
            buf
        };
        assert!(read_log::<f64, _>(&b""[..]).is_err());
        assert!(read_log::<f64, _>(&write(vec![record(2, Mode::Cbo)])[..]).is_err());
        assert!(read_log::<f64, _>(&write(vec![record(1, Mode::Cbo), record(3, Mode::Cbo)])[..]).is_err());
        assert!(read_log::<f64, _>(&write(vec![record(1, Mode::Cbo), record(2, Mode::Rs)])[..]).is_err());
        let mut no_cfg = record(1, Mode::Cbo);
        no_cfg.config = None;
        assert!(read_log::<f64, _>(&write(vec![no_cfg])[..]).is_err());
        assert!(read_log::<f64, _>(&b"{\"n\":1}\n"[..]).is_err());
    }
}
