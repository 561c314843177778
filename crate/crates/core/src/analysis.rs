//! Post-campaign analysis: KL convergence curves, validation runs at the
//! tuned optimum and strategy comparison tables.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cbo::{CampaignState, Surrogates};
use crate::controller::{ParamSet, ShiftSetup};
use crate::error::{AnalysisError, MetricsError};
use crate::metrics::{shift_indices, BaselineStats, MetricSettings, ShiftMetrics};
use crate::scalar::Scalar;
use crate::seed::derive_seed;
use crate::sim::{run_shift, SimConfig};

/// Fewest maneuvers accepted by [`validate_optimum`].
pub const MIN_VALIDATION_RUNS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPdf<T> {
    pub mu: T,
    pub sigma: T,
}

impl<T: Scalar> GaussianPdf<T> {
    pub fn new(mu: T, sigma: T) -> Result<Self, AnalysisError> {
        if !(sigma > T::zero() && sigma.is_finite() && mu.is_finite()) {
            return Err(AnalysisError::InvalidPdf(sigma.as_f64()));
        }
        Ok(Self { mu, sigma })
    }

    pub fn density(&self, x: T) -> T {
        crate::scalar::normal_pdf((x - self.mu) / self.sigma) / self.sigma
    }

    /// Sample mean and unbiased standard deviation. `None` when the samples
    /// have no spread.
    pub fn fit(samples: &[T]) -> Result<Option<Self>, AnalysisError> {
        let (mean, std) = mean_std(samples).ok_or_else(|| AnalysisError::EmptySamples("fit".into()))?;
        Ok(Self::new(mean, std).ok())
    }
}

/// `KL(p ‖ q)` of two Gaussians.
pub fn kl_divergence<T: Scalar>(p: &GaussianPdf<T>, q: &GaussianPdf<T>) -> T {
    let d = p.mu - q.mu;
    let half = T::lit(0.5);
    let v = (q.sigma / p.sigma).ln() + (p.sigma * p.sigma + d * d) / (T::lit(2.0) * q.sigma * q.sigma) - half;
    v.max(T::zero())
}

pub fn kl_divergence_gaussian<T: Scalar>(mu_p: T, sigma_p: T, mu_q: T, sigma_q: T) -> Result<T, AnalysisError> {
    Ok(kl_divergence(&GaussianPdf::new(mu_p, sigma_p)?, &GaussianPdf::new(mu_q, sigma_q)?))
}

/// `δ(n) = KL(p_n ‖ q)` for `n = 1..=N`, where `p_n` is the cost surrogate
/// of iteration `n` and `q` the final one, both evaluated at the final
/// incumbent. Surrogates are replayed from the stored hyperparameters.
/// `δ(n) = 0` for `n ≤ n_random` and for `n = N`.
pub fn convergence_curve<T: Scalar>(state: &CampaignState<T>) -> Result<Vec<T>, AnalysisError> {
    let n_total = state.len();
    let theta = state.incumbent().ok_or(AnalysisError::NoIncumbent)?.theta;
    let at = |n: usize| -> Result<GaussianPdf<T>, AnalysisError> {
        if state.records.get(n - 1).and_then(|r| r.gp_hyperparams.as_ref()).is_none() {
            return Err(AnalysisError::MissingSnapshot(n));
        }
        let models = Surrogates::replay(state, n)?;
        let p = models.cost.predict_raw(&theta.to_array());
        GaussianPdf::new(p.mu, p.sigma)
    };
    let q = at(n_total)?;
    (1..=n_total)
        .map(|n| {
            if n <= state.config.n_random || n == n_total {
                Ok(T::zero())
            } else {
                Ok(kl_divergence(&at(n)?, &q))
            }
        })
        .collect()
}

/// Pointwise arithmetic mean of equally long curves.
pub fn mean_curve<T: Scalar>(curves: &[Vec<T>]) -> Result<Vec<T>, AnalysisError> {
    let first = curves.first().ok_or_else(|| AnalysisError::EmptySamples("curves".into()))?;
    if let Some(c) = curves.iter().find(|c| c.len() != first.len()) {
        return Err(AnalysisError::LengthMismatch(first.len(), c.len()));
    }
    let k = T::from_usize_lossy(curves.len());
    Ok((0..first.len()).map(|i| curves.iter().map(|c| c[i]).sum::<T>() / k).collect())
}

/// First iteration after `n_random` from which the curve stays strictly
/// below `threshold` through the end.
pub fn crossing_iteration<T: Scalar>(curve: &[T], threshold: T, n_random: usize) -> Option<usize> {
    let mut first = None;
    for (i, &v) in curve.iter().enumerate().rev() {
        let n = i + 1;
        if n <= n_random || !(v < threshold) {
            break;
        }
        first = Some(n);
    }
    first
}

/// Repeated maneuvers at one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct Validation<T> {
    pub theta: ParamSet<T>,
    pub runs: Vec<ShiftMetrics<T>>,
    /// Moment fit of the cost samples; `None` when they have no spread.
    pub fit: Option<GaussianPdf<T>>,
}

impl<T: Scalar> Validation<T> {
    pub fn costs(&self) -> Vec<T> {
        self.runs.iter().map(|r| r.j).collect()
    }
}

/// Runs `m_runs` QS-CBW maneuvers at `theta` with seeds derived from `seed`.
#[allow(clippy::too_many_arguments)]
pub fn validate_optimum<T: Scalar>(
    theta: &ParamSet<T>,
    sim: &SimConfig<T>,
    setup: &ShiftSetup<T>,
    settings: &MetricSettings<T>,
    baseline: &BaselineStats<T>,
    lambda: T,
    m_runs: usize,
    seed: u64,
) -> Result<Validation<T>, AnalysisError> {
    if m_runs < MIN_VALIDATION_RUNS {
        return Err(AnalysisError::TooFewRuns { needed: MIN_VALIDATION_RUNS, have: m_runs });
    }
    let schedule = setup.qscbw(theta).map_err(MetricsError::from)?;
    let runs = (0..m_runs)
        .map(|i| {
            let tel = run_shift(sim, &schedule, derive_seed(seed, i as u64)).map_err(MetricsError::from)?;
            Ok(shift_indices(&tel, sim, settings)?.score(baseline, lambda))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let costs: Vec<T> = runs.iter().map(|r| r.j).collect();
    Ok(Validation { theta: *theta, fit: GaussianPdf::fit(&costs)?, runs })
}

fn mean_std<T: Scalar>(v: &[T]) -> Option<(T, T)> {
    if v.is_empty() {
        return None;
    }
    let n = T::from_usize_lossy(v.len());
    let mean = v.iter().copied().sum::<T>() / n;
    if v.len() < 2 || v.iter().all(|&x| x == v[0]) {
        return Some((mean, T::zero()));
    }
    let ss: T = v.iter().map(|&x| (x - mean) * (x - mean)).sum();
    Some((mean, (ss / (n - T::one())).sqrt()))
}

/// One row of the strategy comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub strategy: String,
    /// `J_s` or `J_d`.
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub samples: Vec<f64>,
}

/// Mean and standard deviation of `J_s` and `J_d` per strategy, two rows
/// per strategy in input order.
pub fn compare_strategies<T: Scalar>(groups: &[(&str, &[ShiftMetrics<T>])]) -> Result<Vec<ComparisonRow>, AnalysisError> {
    let mut rows = Vec::with_capacity(2 * groups.len());
    for (name, runs) in groups {
        if runs.is_empty() {
            return Err(AnalysisError::EmptySamples((*name).to_string()));
        }
        for (metric, pick) in [("J_s", (|m: &ShiftMetrics<T>| m.j_s) as fn(&ShiftMetrics<T>) -> T), ("J_d", |m| m.j_d)] {
            let samples: Vec<f64> = runs.iter().map(|m| pick(m).as_f64()).collect();
            let (mean, std) = mean_std(&samples).expect("non-empty");
            rows.push(ComparisonRow { strategy: (*name).to_string(), metric: metric.into(), mean, std, samples });
        }
    }
    Ok(rows)
}

pub const COMPARISON_HEADER: [&str; 6] = ["strategy", "metric", "mean", "std", "n", "samples"];
pub const VALIDATION_HEADER: [&str; 5] = ["strategy", "run", "J_s", "J_d", "J"];

/// `strategy,metric,mean,std,n,samples` with the samples joined by `;`.
pub fn write_comparison_csv<W: Write>(w: W, rows: &[ComparisonRow]) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(COMPARISON_HEADER)?;
    for r in rows {
        let samples = r.samples.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        out.write_record([
            r.strategy.clone(),
            r.metric.clone(),
            r.mean.to_string(),
            r.std.to_string(),
            r.samples.len().to_string(),
            samples,
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn parse_f64(s: &str, what: &str) -> Result<f64, AnalysisError> {
    s.parse().map_err(|_| AnalysisError::Csv(csv::Error::from(std::io::Error::new(
        std::io::ErrorKind::InvalidData,
        format!("{what}: cannot parse {s:?} as a number"),
    ))))
}

pub fn read_comparison_csv<R: Read>(r: R) -> Result<Vec<ComparisonRow>, AnalysisError> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let samples = if rec[5].is_empty() {
            Vec::new()
        } else {
            rec[5].split(';').map(|s| parse_f64(s, "samples")).collect::<Result<_, _>>()?
        };
        rows.push(ComparisonRow {
            strategy: rec[0].to_string(),
            metric: rec[1].to_string(),
            mean: parse_f64(&rec[2], "mean")?,
            std: parse_f64(&rec[3], "std")?,
            samples,
        });
    }
    Ok(rows)
}

/// One row of the validation export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationRow {
    pub strategy: String,
    pub run: usize,
    #[serde(rename = "J_s")]
    pub j_s: f64,
    #[serde(rename = "J_d")]
    pub j_d: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

pub fn validation_rows<T: Scalar>(strategy: &str, runs: &[ShiftMetrics<T>]) -> Vec<ValidationRow> {
    runs.iter()
        .enumerate()
        .map(|(i, m)| ValidationRow {
            strategy: strategy.to_string(),
            run: i + 1,
            j_s: m.j_s.as_f64(),
            j_d: m.j_d.as_f64(),
            j: m.j.as_f64(),
        })
        .collect()
}

pub fn write_validation_csv<W: Write>(w: W, rows: &[ValidationRow]) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(w);
    if rows.is_empty() {
        out.write_record(VALIDATION_HEADER)?;
    }
    for r in rows {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_validation_csv<R: Read>(r: R) -> Result<Vec<ValidationRow>, AnalysisError> {
    Ok(csv::Reader::from_reader(r).deserialize().collect::<Result<_, _>>()?)
}

/// `n,<label...>,mean`: one column per campaign plus their pointwise mean.
pub fn write_convergence_csv<W: Write, T: Scalar>(w: W, labels: &[String], curves: &[Vec<T>]) -> Result<(), AnalysisError> {
    let mean = mean_curve(curves)?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["n".to_string()];
    header.extend(labels.iter().cloned());
    header.push("mean".into());
    out.write_record(&header)?;
    for (i, m) in mean.iter().enumerate() {
        let mut row = vec![(i + 1).to_string()];
        row.extend(curves.iter().map(|c| c[i].as_f64().to_string()));
        row.push(m.as_f64().to_string());
        out.write_record(&row)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Parsed convergence export: column labels, per-campaign curves, mean.
pub fn read_convergence_csv<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<f64>), AnalysisError> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers()?.clone();
    let k = header.len().saturating_sub(2);
    let labels = header.iter().skip(1).take(k).map(str::to_string).collect();
    let mut curves = vec![Vec::new(); k];
    let mut mean = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        for (j, c) in curves.iter_mut().enumerate() {
            c.push(parse_f64(&rec[j + 1], "delta")?);
        }
        mean.push(parse_f64(&rec[k + 1], "mean")?);
    }
    Ok((labels, curves, mean))
}
