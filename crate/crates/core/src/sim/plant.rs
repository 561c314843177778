//! Single-step plant dynamics.
//!
//! The clutch sits between the engine inertia and a massless gearbox input
//! shaft; the gearbox output drives the wheel inertia through a torsional
//! spring-damper. Because the node between clutch and shaft has no inertia,
//! stick/slip is an algebraic decision: the clutch sticks whenever the torque
//! needed to keep both faces together is within capacity, otherwise it
//! transmits the capacity with the sign of that torque.

use crate::error::SimError;
use crate::scalar::Scalar;

use super::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gear {
    Neutral,
    Engaged(u8),
}

impl Gear {
    /// Numeric code used in telemetry exports, 0 for neutral.
    pub fn code(self) -> u8 {
        match self {
            Gear::Neutral => 0,
            Gear::Engaged(g) => g,
        }
    }

    pub fn from_code(code: u8) -> Self {
        if code == 0 {
            Gear::Neutral
        } else {
            Gear::Engaged(code)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState<T> {
    /// Engine speed (rad/s).
    pub omega_e: T,
    /// Wheel speed (rad/s).
    pub omega_w: T,
    /// Driveshaft twist at the wheel (rad).
    pub phi_s: T,
    /// Delivered engine torque (N·m).
    pub t_eng_act: T,
    /// Delivered clutch-by-wire pressure (bar).
    pub p_act: T,
    pub gear: Gear,
    pub clutch_locked: bool,
}

/// Actuator references applied over one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Actuation<T> {
    pub torque: T,
    pub pressure: T,
    pub gear: Gear,
}

/// Result of one integration step. The torques, slip and accelerations are
/// evaluated at the state the step started from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput<T> {
    pub state: PlantState<T>,
    /// Torque through the clutch, engine side (N·m).
    pub clutch_torque: T,
    /// Engine speed minus clutch output speed (rad/s).
    pub clutch_slip: T,
    /// Whether the clutch faces stick during this step.
    pub clutch_locked: bool,
    /// Wheel angular acceleration (rad/s²).
    pub wheel_accel: T,
    /// Rear-wheel longitudinal acceleration (m/s²).
    pub a_xr: T,
}

/// Clutch torque capacity for an actuator pressure: linear from full
/// capacity when closed down to zero at the opening pressure.
pub fn clutch_capacity<T: Scalar>(p: T, cfg: &SimConfig<T>) -> T {
    let frac = (T::one() - p / cfg.clutch_open_pressure).max(T::zero()).min(T::one());
    cfg.clutch_capacity * frac
}

/// Torque the clutch must carry for its faces to stay together, engine side.
fn required_clutch_torque<T: Scalar>(s: &PlantState<T>, ratio: T, cfg: &SimConfig<T>) -> T {
    (cfg.shaft_stiffness * s.phi_s + cfg.shaft_damping * (s.omega_e / ratio - s.omega_w)) / ratio
}

/// Advances the plant by one `dt` with semi-implicit Euler.
pub fn step<T: Scalar>(
    state: &PlantState<T>,
    refs: &Actuation<T>,
    cfg: &SimConfig<T>,
) -> Result<StepOutput<T>, SimError> {
    if !refs.torque.is_finite() || !refs.pressure.is_finite() {
        return Err(SimError::InvalidConfig("non-finite actuator reference".into()));
    }
    let dt = cfg.dt;
    let k = cfg.shaft_stiffness;
    let c = cfg.shaft_damping;
    let cap = clutch_capacity(state.p_act, cfg);

    let (clutch_torque, slip, locked, shaft_torque, ratio) = match refs.gear {
        Gear::Neutral => (T::zero(), T::zero(), true, T::zero(), None),
        Gear::Engaged(g) => {
            let r = cfg.gear_ratio(g).ok_or(SimError::InvalidGear(g))?;
            let t_req = required_clutch_torque(state, r, cfg);
            if t_req.abs() <= cap {
                (t_req, T::zero(), true, r * t_req, Some(r))
            } else {
                let t_cl = cap * t_req.signum();
                let twist_rate = (r * t_cl - k * state.phi_s) / c;
                let slip = state.omega_e - r * (state.omega_w + twist_rate);
                (t_cl, slip, false, r * t_cl, Some(r))
            }
        }
    };

    let engine_accel = (state.t_eng_act - clutch_torque) / cfg.engine_inertia;
    let wheel_accel = (shaft_torque - cfg.road_load) / cfg.vehicle_inertia;

    let omega_e = (state.omega_e + dt * engine_accel).max(T::zero());
    let omega_w = state.omega_w + dt * wheel_accel;
    let phi_s = match ratio {
        None => state.phi_s,
        Some(r) if locked => state.phi_s + dt * (omega_e / r - omega_w),
        // Implicit in the twist so the first-order shaft relaxation stays stable.
        Some(r) => (state.phi_s + dt * r * clutch_torque / c) / (T::one() + dt * k / c),
    };
    let t_eng_act = state.t_eng_act + (refs.torque - state.t_eng_act) * dt / (cfg.engine_lag + dt);
    let p_act = (state.p_act + (refs.pressure - state.p_act) * dt / (cfg.cbw_lag + dt)).max(T::zero());

    let next = PlantState {
        omega_e,
        omega_w,
        phi_s,
        t_eng_act,
        p_act,
        gear: refs.gear,
        clutch_locked: locked,
    };
    if [omega_e, omega_w, phi_s, t_eng_act, p_act].iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFiniteState { t: f64::NAN });
    }
    Ok(StepOutput {
        state: next,
        clutch_torque,
        clutch_slip: slip,
        clutch_locked: locked,
        wheel_accel,
        a_xr: cfg.wheel_radius * wheel_accel,
    })
}

/// Steady pre-shift condition in `gear`: clutch stuck, engine and wheel
/// accelerating together and the shaft twist at its quasi-static value.
pub fn steady_state<T: Scalar>(
    cfg: &SimConfig<T>,
    gear: u8,
    engine_torque: T,
) -> Result<PlantState<T>, SimError> {
    let r = cfg.gear_ratio(gear).ok_or(SimError::InvalidGear(gear))?;
    let omega_e = cfg.cruise_engine_speed;
    let common_accel =
        (r * engine_torque - cfg.road_load) / (cfg.vehicle_inertia + cfg.engine_inertia * r * r);
    let shaft_torque = cfg.road_load + cfg.vehicle_inertia * common_accel;
    Ok(PlantState {
        omega_e,
        omega_w: omega_e / r,
        phi_s: shaft_torque / cfg.shaft_stiffness,
        t_eng_act: engine_torque,
        p_act: T::zero(),
        gear: Gear::Engaged(gear),
        clutch_locked: true,
    })
}
