use thiserror::Error;

/// Errors raised by the driveline simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite plant state at t = {t} s")]
    NonFiniteState { t: f64 },
    #[error("gear {target} could not be engaged before the end of the horizon")]
    EngagementTimeout { target: u8 },
    #[error("invalid gear command {0}")]
    InvalidGear(u8),
}

/// Errors raised while building control schedules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("invalid shift parameters: {0}")]
    InvalidParams(String),
}

/// Errors raised by the gearshift quality metrics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("engine speed {omega_e} rad/s at sample {index} is at or below the floor")]
    DegenerateSpeed { index: usize, omega_e: f64 },
    #[error("gearshift never completed")]
    NotCompleted,
    #[error("invalid high-pass cutoff: fc * dt = {0} must lie in (0, 0.5)")]
    InvalidCutoff(f64),
    #[error("series too short for the smoothness window: need {needed} samples, have {have}")]
    WindowTooShort { needed: usize, have: usize },
    #[error("baseline calibration failed: {0}")]
    FailedBaseline(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

/// Errors raised by the Gaussian-process surrogate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GpError {
    #[error("kernel matrix not positive definite after jitter {jitter:e}")]
    SingularKernel { jitter: f64 },
    #[error("invalid training data: {0}")]
    InvalidData(String),
}

/// Errors raised by the optimization campaign.
#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error("surrogate models are not available yet")]
    NoModel,
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("malformed campaign log: {0}")]
    Log(String),
    #[error("cannot write campaign log: {0}")]
    Io(#[from] std::io::Error),
}

/// Errors raised by post-campaign analysis.
#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid Gaussian density: sigma = {0} must be positive and finite")]
    InvalidPdf(f64),
    #[error("missing surrogate snapshot for iteration {0}")]
    MissingSnapshot(usize),
    #[error("campaign has no feasible incumbent")]
    NoIncumbent,
    #[error("empty sample set for strategy {0}")]
    EmptySamples(String),
    #[error("validation needs at least {needed} runs, got {have}")]
    TooFewRuns { needed: usize, have: usize },
    #[error("curves have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Errors raised while reading configuration and data files.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value: {0}")]
    Invalid(String),
}
