//! Gearshift quality indices: duration, smoothness and the QS-normalized cost.

use serde::{Deserialize, Serialize};

use crate::controller::ShiftSetup;
use crate::error::MetricsError;
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::sim::{run_shift, SimConfig, Telemetry};

/// Half-width of the synchronization band around γ = 1.
pub const SYNC_BAND: f64 = 0.03;
/// Smoothness evaluation window after the shift request (s).
pub const SMOOTHNESS_WINDOW: f64 = 0.8;
pub const DEFAULT_HIGHPASS_CUTOFF: f64 = 1.5;
pub const DEFAULT_OMEGA_FLOOR: f64 = 1.0;
/// Minimum number of QS runs behind a baseline.
pub const MIN_BASELINE_RUNS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct MetricSettings<T> {
    pub band: T,
    pub window: T,
    /// High-pass cutoff applied to the wheel acceleration (Hz).
    pub highpass_cutoff: T,
    /// Engine speeds at or below this make γ meaningless (rad/s).
    pub omega_floor: T,
}

impl<T: Scalar> Default for MetricSettings<T> {
    fn default() -> Self {
        Self {
            band: T::lit(SYNC_BAND),
            window: T::lit(SMOOTHNESS_WINDOW),
            highpass_cutoff: T::lit(DEFAULT_HIGHPASS_CUTOFF),
            omega_floor: T::lit(DEFAULT_OMEGA_FLOOR),
        }
    }
}

/// γ = ω_w·γ_g / ω_e for one sample.
#[inline]
pub fn transmission_ratio<T: Scalar>(omega_w: T, gear_ratio: T, omega_e: T) -> T {
    omega_w * gear_ratio / omega_e
}

/// γ for every sample, always referred to `gear_ratio` (the target gear),
/// so the maneuver converges to 1 once the new gear is synchronized.
///
/// The engine-speed floor is enforced from the shift request onwards.
pub fn normalized_ratio<T: Scalar>(
    tel: &Telemetry<T>,
    gear_ratio: T,
    omega_floor: T,
) -> Result<Vec<T>, MetricsError> {
    let i_a = tel.index_at(tel.t_a);
    if let Some(i) = (i_a..tel.len()).find(|&i| !(tel.omega_e[i] > omega_floor)) {
        return Err(MetricsError::DegenerateSpeed { index: i, omega_e: tel.omega_e[i].as_f64() });
    }
    Ok(tel
        .omega_w
        .iter()
        .zip(&tel.omega_e)
        .map(|(&w, &e)| transmission_ratio(w, gear_ratio, e))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Completion<T> {
    Completed(T),
    NotCompleted,
}

impl<T: Copy> Completion<T> {
    pub fn time(self) -> Option<T> {
        match self {
            Completion::Completed(t) => Some(t),
            Completion::NotCompleted => None,
        }
    }
}

/// Earliest sample time from `t_a` on after which γ never leaves `1 ± band`
/// up to the end of the record.
pub fn completion_time<T: Scalar>(gamma: &[T], t: &[T], t_a: T, band: T) -> Completion<T> {
    let i_a = t.partition_point(|&s| s < t_a);
    if i_a >= gamma.len() {
        return Completion::NotCompleted;
    }
    let in_band = |g: T| (T::one() - g).abs() <= band;
    match (i_a..gamma.len()).rev().find(|&i| !in_band(gamma[i])) {
        None => Completion::Completed(t[i_a]),
        Some(last) if last + 1 < gamma.len() => Completion::Completed(t[last + 1]),
        Some(_) => Completion::NotCompleted,
    }
}

/// J_d = t_e − t_a.
pub fn duration_index<T: Scalar>(t_a: T, t_e: Completion<T>) -> Result<T, MetricsError> {
    match t_e {
        Completion::Completed(t_e) => Ok(t_e - t_a),
        Completion::NotCompleted => Err(MetricsError::NotCompleted),
    }
}

/// Second-order Butterworth high-pass, bilinear transform with the cutoff
/// prewarped, zero initial state.
#[derive(Debug, Clone, Copy)]
pub struct Highpass<T> {
    b: [T; 3],
    a: [T; 2],
}

impl<T: Scalar> Highpass<T> {
    pub fn new(fc: T, dt: T) -> Result<Self, MetricsError> {
        let ratio = fc * dt;
        if !(ratio > T::zero() && ratio < T::lit(0.5)) {
            return Err(MetricsError::InvalidCutoff(ratio.as_f64()));
        }
        let k = (T::lit(std::f64::consts::PI) * ratio).tan();
        let sqrt2 = T::lit(std::f64::consts::SQRT_2);
        let norm = T::one() / (T::one() + sqrt2 * k + k * k);
        let two = T::lit(2.0);
        Ok(Self {
            b: [norm, -two * norm, norm],
            a: [two * (k * k - T::one()) * norm, (T::one() - sqrt2 * k + k * k) * norm],
        })
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let (mut x1, mut x2, mut y1, mut y2) = (T::zero(), T::zero(), T::zero(), T::zero());
        x.iter()
            .map(|&x0| {
                let y0 = self.b[0] * x0 + self.b[1] * x1 + self.b[2] * x2 - self.a[0] * y1 - self.a[1] * y2;
                x2 = x1;
                x1 = x0;
                y2 = y1;
                y1 = y0;
                y0
            })
            .collect()
    }
}

pub fn highpass<T: Scalar>(x: &[T], fc: T, dt: T) -> Result<Vec<T>, MetricsError> {
    Ok(Highpass::new(fc, dt)?.apply(x))
}

/// RMS of the high-passed wheel acceleration over `[t_a, t_a + window]`.
/// The series is assumed to start at t = 0 with step `dt`; the filter runs
/// from the first sample so its start-up transient is gone by `t_a`.
pub fn smoothness_index_with<T: Scalar>(
    a_xr: &[T],
    t_a: T,
    dt: T,
    cutoff: T,
    window: T,
) -> Result<T, MetricsError> {
    let i_a = (t_a / dt).round().to_usize().unwrap_or(0);
    let i_s = i_a + (window / dt).round().to_usize().unwrap_or(0);
    if i_s >= a_xr.len() {
        return Err(MetricsError::WindowTooShort { needed: i_s + 1, have: a_xr.len() });
    }
    let filtered = highpass(&a_xr[..=i_s], cutoff, dt)?;
    let energy: T = filtered[i_a..=i_s].iter().map(|&v| v * v).sum();
    Ok((dt / window * energy).sqrt())
}

pub fn smoothness_index<T: Scalar>(a_xr: &[T], t_a: T, dt: T) -> Result<T, MetricsError> {
    smoothness_index_with(a_xr, t_a, dt, T::lit(DEFAULT_HIGHPASS_CUTOFF), T::lit(SMOOTHNESS_WINDOW))
}

/// Mean and standard deviation of the QS indices, used to normalize the cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineStats<T> {
    #[serde(rename = "mu_Js")]
    pub mu_js: T,
    #[serde(rename = "sigma_Js")]
    pub sigma_js: T,
    #[serde(rename = "mu_Jd")]
    pub mu_jd: T,
    #[serde(rename = "sigma_Jd")]
    pub sigma_jd: T,
    pub n_runs: usize,
    pub seed: u64,
}

impl<T: Scalar> BaselineStats<T> {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.sigma_js > T::zero() && self.sigma_jd > T::zero()) {
            return Err(MetricsError::FailedBaseline(format!(
                "degenerate spread: sigma_Js = {}, sigma_Jd = {}",
                self.sigma_js, self.sigma_jd
            )));
        }
        if !(self.mu_js.is_finite() && self.mu_jd.is_finite() && self.sigma_js.is_finite() && self.sigma_jd.is_finite()) {
            return Err(MetricsError::FailedBaseline("non-finite statistics".into()));
        }
        if self.n_runs < MIN_BASELINE_RUNS {
            return Err(MetricsError::FailedBaseline(format!(
                "{} runs, at least {MIN_BASELINE_RUNS} required",
                self.n_runs
            )));
        }
        Ok(())
    }
}

/// λ-weighted sum of the QS-standardized smoothness and duration.
/// Zero means QS-like quality, negative is better.
pub fn normalized_cost<T: Scalar>(j_s: T, j_d: T, base: &BaselineStats<T>, lambda: T) -> T {
    lambda * (j_s - base.mu_js) / base.sigma_js + (T::one() - lambda) * (j_d - base.mu_jd) / base.sigma_jd
}

/// Raw indices of one maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftIndices<T> {
    pub j_s: T,
    /// Duration; the remaining horizon when the shift never completed.
    pub j_d: T,
    pub t_e: Option<T>,
    pub completed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftMetrics<T> {
    pub j_d: T,
    pub j_s: T,
    pub j: T,
    pub t_e: Option<T>,
    pub completed: bool,
}

impl<T: Scalar> ShiftIndices<T> {
    pub fn score(&self, base: &BaselineStats<T>, lambda: T) -> ShiftMetrics<T> {
        ShiftMetrics {
            j_d: self.j_d,
            j_s: self.j_s,
            j: normalized_cost(self.j_s, self.j_d, base, lambda),
            t_e: self.t_e,
            completed: self.completed,
        }
    }
}

/// Scores a telemetry record against the target gear.
pub fn shift_indices<T: Scalar>(
    tel: &Telemetry<T>,
    cfg: &SimConfig<T>,
    settings: &MetricSettings<T>,
) -> Result<ShiftIndices<T>, MetricsError> {
    let ratio = cfg
        .gear_ratio(tel.target_gear)
        .ok_or(crate::error::SimError::InvalidGear(tel.target_gear))?;
    let gamma = normalized_ratio(tel, ratio, settings.omega_floor)?;
    let completion = completion_time(&gamma, &tel.t, tel.t_a, settings.band);
    let j_d = match completion {
        Completion::Completed(_) => duration_index(tel.t_a, completion)?,
        Completion::NotCompleted => *tel.t.last().expect("non-empty telemetry") - tel.t_a,
    };
    let j_s = smoothness_index_with(&tel.a_xr, tel.t_a, tel.dt, settings.highpass_cutoff, settings.window)?;
    Ok(ShiftIndices { j_s, j_d, t_e: completion.time(), completed: completion.time().is_some() })
}

fn mean_std<T: Scalar>(v: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    if v.len() < 2 || v.iter().all(|&x| x == v[0]) {
        return (mean, T::zero());
    }
    let ss: T = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - T::one())).sqrt())
}

/// Sample statistics of `n_runs` QS maneuvers with seeds derived from `seed`.
pub fn qs_baseline_stats<T: Scalar>(
    cfg: &SimConfig<T>,
    setup: &ShiftSetup<T>,
    tau_cut: T,
    tau_reset: T,
    n_runs: usize,
    seed: u64,
    settings: &MetricSettings<T>,
) -> Result<BaselineStats<T>, MetricsError> {
    if n_runs < MIN_BASELINE_RUNS {
        return Err(MetricsError::FailedBaseline(format!(
            "{n_runs} runs requested, at least {MIN_BASELINE_RUNS} required"
        )));
    }
    let schedule = setup.qs(tau_cut, tau_reset)?;
    let mut js = Vec::with_capacity(n_runs);
    let mut jd = Vec::with_capacity(n_runs);
    for i in 0..n_runs {
        let tel = run_shift(cfg, &schedule, derive_seed(seed, i as u64))?;
        let idx = shift_indices(&tel, cfg, settings)?;
        if !idx.completed {
            return Err(MetricsError::FailedBaseline(format!("QS run {i} never synchronized")));
        }
        js.push(idx.j_s);
        jd.push(idx.j_d);
    }
    let (mu_js, sigma_js) = mean_std(&js);
    let (mu_jd, sigma_jd) = mean_std(&jd);
    let stats = BaselineStats { mu_js, sigma_js, mu_jd, sigma_jd, n_runs, seed };
    stats.validate()?;
    Ok(stats)
}
