use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::scalar::Scalar;

/// Random variability injected into a maneuver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct NoiseConfig<T> {
    /// Mean delay between the shift request and the rider engaging the gear (s).
    pub engagement_delay_mean: T,
    pub engagement_delay_std: T,
    /// Additive white noise on both exported speed channels (rad/s).
    pub speed_meas_std: T,
    /// Additive white noise on the exported wheel acceleration (m/s²).
    pub accel_meas_std: T,
    /// Base seed, combined with the per-run seed.
    pub seed: u64,
}

impl<T: Scalar> Default for NoiseConfig<T> {
    fn default() -> Self {
        Self {
            engagement_delay_mean: T::lit(0.060),
            engagement_delay_std: T::lit(0.010),
            speed_meas_std: T::lit(0.2),
            accel_meas_std: T::lit(0.15),
            seed: 0,
        }
    }
}

impl<T: Scalar> NoiseConfig<T> {
    /// Deterministic maneuvers: mean engagement delay, no measurement noise.
    pub fn disabled() -> Self {
        Self {
            engagement_delay_std: T::zero(),
            speed_meas_std: T::zero(),
            accel_meas_std: T::zero(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fields = [
            ("engagement_delay_mean", self.engagement_delay_mean),
            ("engagement_delay_std", self.engagement_delay_std),
            ("speed_meas_std", self.speed_meas_std),
            ("accel_meas_std", self.accel_meas_std),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < T::zero() {
                return Err(SimError::InvalidConfig(format!("noise.{name} = {v} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Two-inertia driveline with a clutch-by-wire and a torsional driveshaft.
///
/// Gear ratios are engine speed per wheel speed (final drive included);
/// `gear_ratios[0]` is first gear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct SimConfig<T> {
    /// Engine-side inertia (kg·m²).
    pub engine_inertia: T,
    /// Wheel plus vehicle inertia referred to the rear wheel (kg·m²).
    pub vehicle_inertia: T,
    pub gear_ratios: Vec<T>,
    /// Driveshaft torsional stiffness at the wheel (N·m/rad).
    pub shaft_stiffness: T,
    /// Driveshaft torsional damping at the wheel (N·m·s/rad).
    pub shaft_damping: T,
    /// Clutch torque capacity with zero actuator pressure (N·m).
    pub clutch_capacity: T,
    /// Pressure at which the clutch capacity vanishes (bar).
    pub clutch_open_pressure: T,
    /// Engine torque actuator time constant (s).
    pub engine_lag: T,
    /// Clutch-by-wire pressure time constant (s).
    pub cbw_lag: T,
    pub wheel_radius: T,
    /// Integration and sampling step (s).
    pub dt: T,
    /// Constant resistive torque at the wheel (N·m). The default balances
    /// the 40 N·m cruise torque in second gear.
    pub road_load: T,
    /// Engine speed of the pre-shift cruise (rad/s).
    pub cruise_engine_speed: T,
    /// Simulated time after the shift request (s).
    pub horizon: T,
    /// Gearbox torque below which the dogs can move (N·m, engine side).
    pub engagement_threshold: T,
    pub noise: NoiseConfig<T>,
}

impl<T: Scalar> Default for SimConfig<T> {
    fn default() -> Self {
        Self {
            engine_inertia: T::lit(0.08),
            vehicle_inertia: T::lit(18.0),
            gear_ratios: [11.5, 8.2, 6.4, 5.3].iter().map(|&g| T::lit(g)).collect(),
            shaft_stiffness: T::lit(6000.0),
            shaft_damping: T::lit(160.0),
            clutch_capacity: T::lit(220.0),
            clutch_open_pressure: T::lit(25.0),
            engine_lag: T::lit(0.02),
            cbw_lag: T::lit(0.045),
            wheel_radius: T::lit(0.32),
            dt: T::lit(1e-3),
            road_load: T::lit(8.2 * 40.0),
            cruise_engine_speed: T::lit(500.0),
            horizon: T::lit(1.5),
            engagement_threshold: T::lit(8.0),
            noise: NoiseConfig::default(),
        }
    }
}

/// Shortest accepted post-request horizon (s).
pub const MIN_HORIZON: f64 = 1.5;

impl<T: Scalar> SimConfig<T> {
    pub fn gear_ratio(&self, gear: u8) -> Option<T> {
        if gear == 0 {
            return None;
        }
        self.gear_ratios.get(gear as usize - 1).copied()
    }

    pub fn with_noise(mut self, noise: NoiseConfig<T>) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("engine_inertia", self.engine_inertia),
            ("vehicle_inertia", self.vehicle_inertia),
            ("shaft_stiffness", self.shaft_stiffness),
            ("shaft_damping", self.shaft_damping),
            ("clutch_capacity", self.clutch_capacity),
            ("clutch_open_pressure", self.clutch_open_pressure),
            ("engine_lag", self.engine_lag),
            ("cbw_lag", self.cbw_lag),
            ("wheel_radius", self.wheel_radius),
            ("dt", self.dt),
            ("cruise_engine_speed", self.cruise_engine_speed),
            ("engagement_threshold", self.engagement_threshold),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= T::zero() {
                return Err(SimError::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if !self.road_load.is_finite() {
            return Err(SimError::InvalidConfig("road_load must be finite".into()));
        }
        if !self.horizon.is_finite() || self.horizon < T::lit(MIN_HORIZON) {
            return Err(SimError::InvalidConfig(format!(
                "horizon = {} must be at least {MIN_HORIZON} s",
                self.horizon
            )));
        }
        if self.gear_ratios.is_empty() {
            return Err(SimError::InvalidConfig("no gear ratios configured".into()));
        }
        for (i, w) in self.gear_ratios.windows(2).enumerate() {
            if !(w[1] < w[0]) {
                return Err(SimError::InvalidConfig(format!(
                    "gear ratios must strictly decrease (gear {} -> {})",
                    i + 1,
                    i + 2
                )));
            }
        }
        if self.gear_ratios.iter().any(|g| !g.is_finite() || *g <= T::zero()) {
            return Err(SimError::InvalidConfig("gear ratios must be positive".into()));
        }
        self.noise.validate()
    }
}
