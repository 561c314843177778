use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::controller::{ParamSet, ShiftSetup};
use crate::error::{CampaignError, GpError, MetricsError};
use crate::gp::{GpModel, Hyperparams, InputBox, Prediction, TargetScaling};
use crate::metrics::{shift_indices, BaselineStats, MetricSettings, ShiftIndices};
use crate::scalar::Scalar;
use crate::seed::{derive_seed, rng_for};
use crate::sim::{run_shift, SimConfig};

use super::acquisition::{constrained_ei, prob_feasible};
use super::search::{maximize, SearchSettings};

const SAMPLER_STREAM: u64 = 1 << 40;
const FIT_STREAM: u64 = 2 << 40;
const QUERY_STREAM: u64 = 3 << 40;
const ESTIMATE_STREAM: u64 = 4 << 40;

/// Query strategy after the random initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Constrained expected improvement.
    Cbo,
    /// Uniform random search.
    Rs,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Cbo => "cbo",
            Mode::Rs => "rs",
        })
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cbo" => Ok(Mode::Cbo),
            "rs" => Ok(Mode::Rs),
            other => Err(format!("unknown mode {other:?} (expected cbo or rs)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound(deserialize = "T: Scalar + serde::de::DeserializeOwned"))]
pub struct CampaignConfig<T> {
    pub theta_lower: ParamSet<T>,
    pub theta_upper: ParamSet<T>,
    /// Weight of the smoothness term in the cost.
    pub lambda: T,
    /// Total number of maneuvers.
    pub budget: usize,
    /// Uniform random maneuvers before the acquisition takes over.
    pub n_random: usize,
    /// Largest feasible shift duration (s).
    pub c_t_max: T,
    pub mode: Mode,
    pub seed: u64,
}

impl<T: Scalar> Default for CampaignConfig<T> {
    fn default() -> Self {
        Self {
            theta_lower: ParamSet::new(T::lit(10.0), T::zero(), T::zero()),
            theta_upper: ParamSet::new(T::lit(30.0), T::lit(0.1), T::lit(0.1)),
            lambda: T::lit(0.8),
            budget: 50,
            n_random: 4,
            c_t_max: T::lit(0.5),
            mode: Mode::Cbo,
            seed: 0,
        }
    }
}

impl<T: Scalar> CampaignConfig<T> {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: String| Err(CampaignError::InvalidConfig(m));
        for p in [&self.theta_lower, &self.theta_upper] {
            if let Err(e) = p.validate() {
                return bad(format!("bounds: {e}"));
            }
        }
        let (lo, hi) = (self.theta_lower.to_array(), self.theta_upper.to_array());
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return bad("every lower bound must be below its upper bound".into());
        }
        if !(self.lambda > T::zero() && self.lambda < T::one()) {
            return bad(format!("lambda = {} must lie in (0, 1)", self.lambda));
        }
        if self.n_random < 2 || self.n_random > self.budget {
            return bad(format!(
                "n_random = {} must lie in [2, budget = {}]",
                self.n_random, self.budget
            ));
        }
        if !(self.c_t_max > T::zero() && self.c_t_max.is_finite()) {
            return bad(format!("c_t_max = {} must be positive", self.c_t_max));
        }
        Ok(())
    }

    pub fn bounds(&self) -> InputBox<T> {
        InputBox { lower: self.theta_lower.to_array().to_vec(), upper: self.theta_upper.to_array().to_vec() }
    }

    /// Seed of the maneuver evaluated at iteration `n`. Campaigns that share
    /// `seed` share maneuver noise.
    pub fn maneuver_seed(&self, n: usize) -> u64 {
        derive_seed(self.seed, n as u64)
    }
}

/// One evaluated maneuver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation<T> {
    /// Iteration index, starting at 1.
    pub n: usize,
    pub theta: ParamSet<T>,
    #[serde(rename = "J_s")]
    pub j_s: T,
    #[serde(rename = "J_d")]
    pub j_d: T,
    #[serde(rename = "J")]
    pub j: T,
    /// Duration constraint value (s).
    pub c_t: T,
    pub feasible: bool,
    pub completed: bool,
}

/// Surrogate minimizer of the cost over the region where the constraint
/// holds with probability at least one half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub theta: ParamSet<T>,
    pub mu: T,
    pub sigma: T,
    pub prob_feasible: T,
}

/// Hyperparameters of both surrogates after iteration `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSnapshot<T> {
    pub cost: Hyperparams<T>,
    pub constraint: Hyperparams<T>,
}

/// One line of the campaign log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + serde::de::DeserializeOwned"
))]
pub struct IterationRecord<T> {
    #[serde(flatten)]
    pub observation: Observation<T>,
    pub mode: Mode,
    pub incumbent_theta: Option<ParamSet<T>>,
    #[serde(rename = "incumbent_J")]
    pub incumbent_j: Option<T>,
    pub estimate: Option<Estimate<T>>,
    pub gp_hyperparams: Option<GpSnapshot<T>>,
    /// Acquisition value of an acquisition-driven query.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acquisition: Option<T>,
    /// Present on the first record only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<CampaignConfig<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignState<T> {
    pub config: CampaignConfig<T>,
    pub records: Vec<IterationRecord<T>>,
}

impl<T: Scalar> CampaignState<T> {
    pub fn new(config: CampaignConfig<T>) -> Self {
        Self { config, records: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn observations(&self) -> Vec<Observation<T>> {
        self.records.iter().map(|r| r.observation).collect()
    }

    /// Best feasible visited sample after the last iteration.
    pub fn incumbent(&self) -> Option<Observation<T>> {
        best_feasible(&self.observations())
    }

    /// `J*(n)` for `n = 1..=len`.
    pub fn incumbent_curve(&self) -> Vec<Option<T>> {
        self.records.iter().map(|r| r.incumbent_j).collect()
    }
}

/// Minimum-cost feasible observation; ties keep the lowest iteration.
pub fn best_feasible<T: Scalar>(observations: &[Observation<T>]) -> Option<Observation<T>> {
    let mut best: Option<Observation<T>> = None;
    for o in observations.iter().filter(|o| o.feasible) {
        let wins = match &best {
            None => true,
            Some(b) => o.j < b.j || (o.j == b.j && o.n < b.n),
        };
        if wins {
            best = Some(*o);
        }
    }
    best
}

/// Cost and constraint surrogates fitted to a prefix of a campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct Surrogates<T> {
    pub cost: GpModel<T>,
    pub constraint: GpModel<T>,
}

impl<T: Scalar> Surrogates<T> {
    fn data(observations: &[Observation<T>]) -> (Vec<Vec<T>>, Vec<T>, Vec<T>) {
        let x = observations.iter().map(|o| o.theta.to_array().to_vec()).collect();
        let j = observations.iter().map(|o| o.j).collect();
        let c = observations.iter().map(|o| o.c_t).collect();
        (x, j, c)
    }

    /// Fits both surrogates with independent hyperparameters.
    pub fn fit(observations: &[Observation<T>], bounds: &InputBox<T>, seed: u64) -> Result<Self, GpError> {
        let (x, j, c) = Self::data(observations);
        Ok(Self {
            cost: GpModel::fit(&x, &j, bounds, derive_seed(seed, 0))?,
            constraint: GpModel::fit(&x, &c, bounds, derive_seed(seed, 1))?,
        })
    }

    /// Rebuilds the surrogates of iteration `n` (1-based) from the stored
    /// hyperparameters and the first `n` observations, without refitting.
    pub fn replay(state: &CampaignState<T>, n: usize) -> Result<Self, CampaignError> {
        if n == 0 || n > state.len() {
            return Err(CampaignError::NoModel);
        }
        let snap = state.records[n - 1].gp_hyperparams.as_ref().ok_or(CampaignError::NoModel)?;
        let obs: Vec<Observation<T>> = state.records[..n].iter().map(|r| r.observation).collect();
        let (x, j, c) = Self::data(&obs);
        let bounds = state.config.bounds();
        Ok(Self {
            cost: GpModel::with_hyperparams(&x, &j, &bounds, snap.cost.clone(), TargetScaling::Standardize)?,
            constraint: GpModel::with_hyperparams(&x, &c, &bounds, snap.constraint.clone(), TargetScaling::Standardize)?,
        })
    }

    pub fn snapshot(&self) -> GpSnapshot<T> {
        GpSnapshot { cost: self.cost.hyperparams().clone(), constraint: self.constraint.hyperparams().clone() }
    }

    /// Cost and constraint posteriors at a unit-cube point.
    pub fn predict(&self, u: &[T]) -> (Prediction<T>, Prediction<T>) {
        (self.cost.predict(u), self.constraint.predict(u))
    }

    /// Constrained acquisition at a unit-cube point.
    pub fn acquisition(&self, u: &[T], best: Option<T>, c_max: T) -> T {
        let (j, c) = self.predict(u);
        constrained_ei(j.mu, j.sigma, best, c.mu, c.sigma, c_max)
    }
}

fn to_params<T: Scalar>(bounds: &InputBox<T>, u: &[T]) -> ParamSet<T> {
    let x = bounds.denormalize(u);
    let clamped: Vec<T> = x
        .iter()
        .zip(bounds.lower.iter().zip(&bounds.upper))
        .map(|(&v, (&l, &h))| v.max(l).min(h))
        .collect();
    ParamSet::from_array([clamped[0], clamped[1], clamped[2]])
}

/// An acquisition-driven query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Query<T> {
    pub theta: ParamSet<T>,
    pub acquisition: T,
}

/// Maximizes the constrained expected improvement of the surrogates stored
/// with the last record. Maximizes the feasibility probability alone while
/// no feasible observation exists.
pub fn next_query<T: Scalar>(state: &CampaignState<T>) -> Result<Query<T>, CampaignError> {
    let models = Surrogates::replay(state, state.len())?;
    Ok(query_from(&models, state))
}

fn query_from<T: Scalar>(models: &Surrogates<T>, state: &CampaignState<T>) -> Query<T> {
    let cfg = &state.config;
    let best = state.incumbent().map(|o| o.j);
    let n = state.len() as u64;
    let r = maximize(
        3,
        |u| models.acquisition(u, best, cfg.c_t_max),
        &SearchSettings::default(),
        derive_seed(cfg.seed, QUERY_STREAM + n),
    );
    Query { theta: to_params(&cfg.bounds(), &r.point), acquisition: r.value }
}

/// Surrogate optimum: minimum posterior cost mean subject to a feasibility
/// probability of at least one half. `None` if no such point is found.
pub fn estimate_optimum<T: Scalar>(models: &Surrogates<T>, cfg: &CampaignConfig<T>, seed: u64) -> Option<Estimate<T>> {
    let half = T::lit(0.5);
    let r = maximize(
        3,
        |u| {
            let (j, c) = models.predict(u);
            if prob_feasible(c.mu, c.sigma, cfg.c_t_max) >= half {
                -j.mu
            } else {
                T::neg_infinity()
            }
        },
        &SearchSettings::default(),
        seed,
    );
    if !r.value.is_finite() {
        return None;
    }
    let (j, c) = models.predict(&r.point);
    Some(Estimate {
        theta: to_params(&cfg.bounds(), &r.point),
        mu: j.mu,
        sigma: j.sigma,
        prob_feasible: prob_feasible(c.mu, c.sigma, cfg.c_t_max),
    })
}

/// Source of maneuver outcomes.
pub trait Objective<T: Scalar> {
    /// Runs one maneuver with parameters `theta` and noise seed `seed`.
    fn indices(&mut self, theta: &ParamSet<T>, seed: u64) -> Result<ShiftIndices<T>, CampaignError>;
    fn baseline(&self) -> &BaselineStats<T>;
}

/// Simulated QS-CBW upshifts scored against a QS baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverEvaluator<T> {
    pub sim: SimConfig<T>,
    pub setup: ShiftSetup<T>,
    pub settings: MetricSettings<T>,
    pub baseline: BaselineStats<T>,
}

impl<T: Scalar> ManeuverEvaluator<T> {
    pub fn new(sim: SimConfig<T>, baseline: BaselineStats<T>) -> Self {
        Self { sim, setup: ShiftSetup::default(), settings: MetricSettings::default(), baseline }
    }
}

impl<T: Scalar> Objective<T> for ManeuverEvaluator<T> {
    fn indices(&mut self, theta: &ParamSet<T>, seed: u64) -> Result<ShiftIndices<T>, CampaignError> {
        let schedule = self.setup.qscbw(theta).map_err(MetricsError::from)?;
        let tel = run_shift(&self.sim, &schedule, seed).map_err(MetricsError::from)?;
        Ok(shift_indices(&tel, &self.sim, &self.settings)?)
    }

    fn baseline(&self) -> &BaselineStats<T> {
        &self.baseline
    }
}

/// A campaign that stopped early, with every completed iteration.
#[derive(Debug)]
pub struct CampaignFailure<T> {
    pub state: CampaignState<T>,
    pub error: CampaignError,
}

impl<T: fmt::Debug> fmt::Display for CampaignFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "campaign aborted after {} iterations: {}", self.state.records.len(), self.error)
    }
}

impl<T: fmt::Debug> std::error::Error for CampaignFailure<T> {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

pub fn run_campaign<T: Scalar, O: Objective<T>>(
    objective: &mut O,
    cfg: &CampaignConfig<T>,
) -> Result<CampaignState<T>, Box<CampaignFailure<T>>> {
    run_campaign_with(objective, cfg, |_| Ok(()))
}

/// Runs the campaign, handing every record to `sink` as soon as it exists.
///
/// The uniform sampler is a single stream: both modes draw their random
/// queries from it in order, so a CBO campaign with `n_random == budget`
/// repeats the RS campaign of the same seed.
pub fn run_campaign_with<T, O, S>(
    objective: &mut O,
    cfg: &CampaignConfig<T>,
    mut sink: S,
) -> Result<CampaignState<T>, Box<CampaignFailure<T>>>
where
    T: Scalar,
    O: Objective<T>,
    S: FnMut(&IterationRecord<T>) -> Result<(), CampaignError>,
{
    let mut state = CampaignState::new(cfg.clone());
    let fail = |state: CampaignState<T>, error| Box::new(CampaignFailure { state, error });
    if let Err(e) = cfg.validate() {
        return Err(fail(state, e));
    }
    let bounds = cfg.bounds();
    let mut sampler = rng_for(cfg.seed, SAMPLER_STREAM);
    let mut models: Option<Surrogates<T>> = None;

    for n in 1..=cfg.budget {
        let (theta, acquisition) = match (&models, cfg.mode) {
            (Some(m), Mode::Cbo) if n > cfg.n_random => {
                let q = query_from(m, &state);
                (q.theta, Some(q.acquisition))
            }
            _ => {
                let u: Vec<T> = (0..3).map(|_| T::lit(sampler.gen::<f64>())).collect();
                (to_params(&bounds, &u), None)
            }
        };

        let indices = match objective.indices(&theta, cfg.maneuver_seed(n)) {
            Ok(v) => v,
            Err(e) => return Err(fail(state, e)),
        };
        let m = indices.score(objective.baseline(), cfg.lambda);
        let observation = Observation {
            n,
            theta,
            j_s: m.j_s,
            j_d: m.j_d,
            j: m.j,
            c_t: m.j_d,
            feasible: m.j_d <= cfg.c_t_max,
            completed: m.completed,
        };
        let mut observations = state.observations();
        observations.push(observation);

        models = if n >= 2 {
            match Surrogates::fit(&observations, &bounds, derive_seed(cfg.seed, FIT_STREAM + n as u64)) {
                Ok(s) => Some(s),
                Err(e) => return Err(fail(state, e.into())),
            }
        } else {
            None
        };
        let incumbent = best_feasible(&observations);
        let record = IterationRecord {
            observation,
            mode: cfg.mode,
            incumbent_theta: incumbent.map(|o| o.theta),
            incumbent_j: incumbent.map(|o| o.j),
            estimate: models
                .as_ref()
                .and_then(|s| estimate_optimum(s, cfg, derive_seed(cfg.seed, ESTIMATE_STREAM + n as u64))),
            gp_hyperparams: models.as_ref().map(Surrogates::snapshot),
            acquisition,
            config: (n == 1).then(|| cfg.clone()),
        };
        state.records.push(record);
        if let Err(e) = sink(state.records.last().expect("just pushed")) {
            return Err(fail(state, e));
        }
    }
    Ok(state)
}
