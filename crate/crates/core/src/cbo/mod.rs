//! Constrained Bayesian optimization of the shift parameters, with the
//! random-search baseline sharing the same loop.

pub mod acquisition;
pub mod campaign;
pub mod log;
pub mod search;

pub use acquisition::{constrained_ei, expected_improvement, prob_feasible};
pub use campaign::{
    best_feasible, estimate_optimum, next_query, run_campaign, run_campaign_with, CampaignConfig, CampaignFailure,
    CampaignState, Estimate, GpSnapshot, IterationRecord, ManeuverEvaluator, Mode, Objective, Observation, Query,
    Surrogates,
};
pub use log::{read_log, write_log, write_record};
pub use search::{maximize, SearchResult, SearchSettings};
