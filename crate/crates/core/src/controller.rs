//! Open-loop reference schedules for QS and QS-CBW upshifts.
//!
//! A shift starts when the rider's pedal switch fires at `t_a`. The clutch
//! pressure reference steps to `p_high` immediately, the engine torque
//! reference drops to the cut value at `t_a + tau_cut`, and once the new gear
//! is engaged at `t_c` the pressure ramps back to zero over `t_close` while
//! the torque returns to the cruise value at `t_c + tau_reset`.
//!
//! `t_c` is only known once the simulator engages the gear, so the profiles
//! are evaluated with an optional engagement time.

use serde::{Deserialize, Serialize};

use crate::error::ScheduleError;
use crate::scalar::Scalar;

/// Clutch closing ramp duration (s).
pub const DEFAULT_T_CLOSE: f64 = 0.2;
/// Engine torque during the cut (N·m), engine braking drag.
pub const DEFAULT_CUT_TORQUE: f64 = -10.0;
/// Largest accepted step pressure (bar).
pub const MAX_P_HIGH: f64 = 50.0;
/// Largest accepted torque delay (s).
pub const MAX_DELAY: f64 = 0.5;

/// The three tunable shift parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSet<T> {
    /// Clutch-by-wire step pressure amplitude (bar).
    #[serde(rename = "p_high_bar")]
    pub p_high: T,
    /// Torque cut delay after the shift request (s).
    #[serde(rename = "tau_cut_s")]
    pub tau_cut: T,
    /// Torque reset delay after gear engagement (s).
    #[serde(rename = "tau_reset_s")]
    pub tau_reset: T,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new(p_high: T, tau_cut: T, tau_reset: T) -> Self {
        Self { p_high, tau_cut, tau_reset }
    }

    pub fn to_array(&self) -> [T; 3] {
        [self.p_high, self.tau_cut, self.tau_reset]
    }

    pub fn from_array(v: [T; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let fields = [
            ("p_high", self.p_high, MAX_P_HIGH),
            ("tau_cut", self.tau_cut, MAX_DELAY),
            ("tau_reset", self.tau_reset, MAX_DELAY),
        ];
        for (name, v, max) in fields {
            if !v.is_finite() || v < T::zero() {
                return Err(ScheduleError::InvalidParams(format!(
                    "{name} = {v} must be finite and non-negative"
                )));
            }
            if v > T::lit(max) {
                return Err(ScheduleError::InvalidParams(format!(
                    "{name} = {v} exceeds the sanity limit {max}"
                )));
            }
        }
        Ok(())
    }
}

/// Reference trajectories for one upshift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule<T> {
    /// Shift request time (s).
    pub t_a: T,
    pub p_high: T,
    pub tau_cut: T,
    pub tau_reset: T,
    /// Pressure closing ramp duration (s).
    pub t_close: T,
    /// Torque reference outside the cut window (N·m).
    pub cruise_torque: T,
    /// Torque reference inside the cut window (N·m).
    pub cut_torque: T,
    pub target_gear: u8,
}

impl<T: Scalar> ControlSchedule<T> {
    /// Gear engaged before the request. Only upshifts are modelled.
    pub fn initial_gear(&self) -> u8 {
        self.target_gear - 1
    }

    pub fn torque_cut_time(&self) -> T {
        self.t_a + self.tau_cut
    }

    pub fn torque_reset_time(&self, t_c: T) -> T {
        t_c + self.tau_reset
    }

    /// Clutch-by-wire pressure reference (bar).
    pub fn pressure_at(&self, t: T, t_c: Option<T>) -> T {
        if t < self.t_a {
            return T::zero();
        }
        match t_c {
            Some(t_c) if t >= t_c => {
                if t >= t_c + self.t_close {
                    T::zero()
                } else {
                    let frac = (t - t_c) / self.t_close;
                    (self.p_high * (T::one() - frac)).max(T::zero())
                }
            }
            _ => self.p_high,
        }
    }

    /// Engine torque reference (N·m).
    pub fn torque_at(&self, t: T, t_c: Option<T>) -> T {
        if t < self.torque_cut_time() {
            return self.cruise_torque;
        }
        match t_c {
            Some(t_c) if t >= self.torque_reset_time(t_c) => self.cruise_torque,
            _ => self.cut_torque,
        }
    }

    /// Whether the rider's shift request is active.
    pub fn shift_requested(&self, t: T) -> bool {
        t >= self.t_a
    }

    pub fn with_t_close(mut self, t_close: T) -> Self {
        self.t_close = t_close;
        self
    }

    pub fn with_cut_torque(mut self, cut_torque: T) -> Self {
        self.cut_torque = cut_torque;
        self
    }
}

/// Builds the combined torque-cut and clutch-opening schedule.
pub fn build_qscbw_schedule<T: Scalar>(
    params: &ParamSet<T>,
    t_a: T,
    cruise_torque: T,
    target_gear: u8,
) -> Result<ControlSchedule<T>, ScheduleError> {
    params.validate()?;
    if !t_a.is_finite() || t_a < T::zero() {
        return Err(ScheduleError::InvalidParams(format!("t_a = {t_a} must be >= 0")));
    }
    if !cruise_torque.is_finite() {
        return Err(ScheduleError::InvalidParams("cruise torque must be finite".into()));
    }
    if target_gear < 2 {
        return Err(ScheduleError::InvalidParams(format!(
            "target gear {target_gear} is not reachable by an upshift"
        )));
    }
    Ok(ControlSchedule {
        t_a,
        p_high: params.p_high,
        tau_cut: params.tau_cut,
        tau_reset: params.tau_reset,
        t_close: T::lit(DEFAULT_T_CLOSE),
        cruise_torque,
        cut_torque: T::lit(DEFAULT_CUT_TORQUE),
        target_gear,
    })
}

/// Quick-shift schedule: torque cut only, clutch kept closed.
pub fn build_qs_schedule<T: Scalar>(
    tau_cut: T,
    tau_reset: T,
    t_a: T,
    cruise_torque: T,
    target_gear: u8,
) -> Result<ControlSchedule<T>, ScheduleError> {
    build_qscbw_schedule(&ParamSet::new(T::zero(), tau_cut, tau_reset), t_a, cruise_torque, target_gear)
}

/// Maneuver-level settings shared by every shift of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct ShiftSetup<T> {
    pub t_a: T,
    pub cruise_torque: T,
    pub cut_torque: T,
    pub t_close: T,
    pub target_gear: u8,
}

impl<T: Scalar> Default for ShiftSetup<T> {
    fn default() -> Self {
        Self {
            t_a: T::lit(0.5),
            cruise_torque: T::lit(40.0),
            cut_torque: T::lit(DEFAULT_CUT_TORQUE),
            t_close: T::lit(DEFAULT_T_CLOSE),
            target_gear: 3,
        }
    }
}

impl<T: Scalar> ShiftSetup<T> {
    pub fn qscbw(&self, params: &ParamSet<T>) -> Result<ControlSchedule<T>, ScheduleError> {
        Ok(build_qscbw_schedule(params, self.t_a, self.cruise_torque, self.target_gear)?
            .with_t_close(self.t_close)
            .with_cut_torque(self.cut_torque))
    }

    pub fn qs(&self, tau_cut: T, tau_reset: T) -> Result<ControlSchedule<T>, ScheduleError> {
        Ok(build_qs_schedule(tau_cut, tau_reset, self.t_a, self.cruise_torque, self.target_gear)?
            .with_t_close(self.t_close)
            .with_cut_torque(self.cut_torque))
    }
}
