//! Deterministic driveline simulation of an upshift.

mod config;
mod plant;
mod telemetry;

pub use config::{NoiseConfig, SimConfig, MIN_HORIZON};
pub use plant::{clutch_capacity, steady_state, step, Actuation, Gear, PlantState, StepOutput};
pub use telemetry::{read_csv, Telemetry, TelemetryRow, CSV_HEADER};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::controller::ControlSchedule;
use crate::error::SimError;
use crate::scalar::Scalar;
use crate::seed::rng_for;

/// Simulates one upshift from a steady cruise in the gear below
/// `schedule.target_gear`.
///
/// The rider's gear engagement instant is drawn from the noise model, but the
/// old gear only leaves its dogs once the gearbox torque drops below
/// `engagement_threshold`, so engagement happens at the later of the two.
/// Identical `(cfg, schedule, seed)` give bit-identical telemetry.
pub fn run_shift<T: Scalar>(
    cfg: &SimConfig<T>,
    schedule: &ControlSchedule<T>,
    seed: u64,
) -> Result<Telemetry<T>, SimError> {
    cfg.validate()?;
    let from = schedule.initial_gear();
    let target = schedule.target_gear;
    for g in [target, from] {
        if cfg.gear_ratio(g).is_none() {
            return Err(SimError::InvalidGear(g));
        }
    }
    if !schedule.t_a.is_finite() || schedule.t_a < T::zero() {
        return Err(SimError::InvalidConfig("shift request time must be >= 0".into()));
    }

    let noise = &cfg.noise;
    let mut rng = rng_for(noise.seed, seed);
    let z: f64 = rng.sample(StandardNormal);
    let delay = (noise.engagement_delay_mean + noise.engagement_delay_std * T::lit(z)).max(T::zero());
    let rider_engages_at = schedule.t_a + delay;

    let dt = cfg.dt;
    let n = ((schedule.t_a + cfg.horizon) / dt).round().to_usize().unwrap_or(0) + 1;

    let mut tel = Telemetry {
        dt,
        t: Vec::with_capacity(n),
        omega_e: Vec::with_capacity(n),
        omega_w: Vec::with_capacity(n),
        gear: Vec::with_capacity(n),
        a_xr: Vec::with_capacity(n),
        p_act: Vec::with_capacity(n),
        t_eng_act: Vec::with_capacity(n),
        qs: Vec::with_capacity(n),
        clutch_torque: Vec::with_capacity(n),
        clutch_slip: Vec::with_capacity(n),
        clutch_locked: Vec::with_capacity(n),
        t_a: schedule.t_a,
        t_c: T::nan(),
        target_gear: target,
    };

    let mut state = steady_state(cfg, from, schedule.cruise_torque)?;
    let mut gearbox_torque = schedule.cruise_torque;
    let mut t_c: Option<T> = None;

    for i in 0..n {
        let t = T::from_usize_lossy(i) * dt;
        if state.gear == Gear::Engaged(from)
            && schedule.shift_requested(t)
            && gearbox_torque.abs() < cfg.engagement_threshold
        {
            state.gear = Gear::Neutral;
        }
        if state.gear == Gear::Neutral && t_c.is_none() && t >= rider_engages_at {
            state.gear = Gear::Engaged(target);
            t_c = Some(t);
        }

        let refs = Actuation {
            torque: schedule.torque_at(t, t_c),
            pressure: schedule.pressure_at(t, t_c),
            gear: state.gear,
        };
        let out = step(&state, &refs, cfg).map_err(|e| match e {
            SimError::NonFiniteState { .. } => SimError::NonFiniteState { t: t.as_f64() },
            other => other,
        })?;

        tel.t.push(t);
        tel.omega_e.push(state.omega_e);
        tel.omega_w.push(state.omega_w);
        tel.gear.push(state.gear);
        tel.a_xr.push(out.a_xr);
        tel.p_act.push(state.p_act);
        tel.t_eng_act.push(state.t_eng_act);
        tel.qs.push(schedule.shift_requested(t));
        tel.clutch_torque.push(out.clutch_torque);
        tel.clutch_slip.push(out.clutch_slip);
        tel.clutch_locked.push(out.clutch_locked);

        gearbox_torque = out.clutch_torque;
        state = out.state;
    }

    tel.t_c = t_c.ok_or(SimError::EngagementTimeout { target })?;
    add_measurement_noise(&mut tel, noise, &mut rng);
    Ok(tel)
}

fn add_measurement_noise<T: Scalar, R: Rng>(tel: &mut Telemetry<T>, noise: &NoiseConfig<T>, rng: &mut R) {
    let channels: [(&mut Vec<T>, T); 3] = [
        (&mut tel.omega_e, noise.speed_meas_std),
        (&mut tel.omega_w, noise.speed_meas_std),
        (&mut tel.a_xr, noise.accel_meas_std),
    ];
    for (series, std) in channels {
        if std > T::zero() {
            for v in series.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *v += std * T::lit(z);
            }
        }
    }
}
