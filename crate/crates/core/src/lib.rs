//! Simulation-based calibration of semi-automated manual transmission
//! upshifts.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix it to `f64`, which is what the campaign tooling uses.

pub mod analysis;
pub mod cbo;
pub mod config;
pub mod controller;
pub mod error;
pub mod gp;
mod linalg;
pub mod metrics;
pub mod scalar;
pub mod seed;
pub mod sim;

pub use error::{AnalysisError, CampaignError, ConfigError, GpError, MetricsError, ScheduleError, SimError};
pub use scalar::Scalar;

pub type SimConfig = sim::SimConfig<f64>;
pub type NoiseConfig = sim::NoiseConfig<f64>;
pub type Telemetry = sim::Telemetry<f64>;
pub type ParamSet = controller::ParamSet<f64>;
pub type ShiftSetup = controller::ShiftSetup<f64>;
pub type ControlSchedule = controller::ControlSchedule<f64>;
pub type MetricSettings = metrics::MetricSettings<f64>;
pub type BaselineStats = metrics::BaselineStats<f64>;
pub type ShiftMetrics = metrics::ShiftMetrics<f64>;
pub type GpModel = gp::GpModel<f64>;
pub type CampaignConfig = cbo::CampaignConfig<f64>;
pub type CampaignState = cbo::CampaignState<f64>;
pub type Observation = cbo::Observation<f64>;
pub type GaussianPdf = analysis::GaussianPdf<f64>;
