//! TOML configuration file and baseline statistics file.
//!
//! Every key is optional and defaults to the built-in plant, controller,
//! metric and optimizer settings:
//!
//! ```toml
//! [plant]
//! shaft_damping = 160.0
//! [noise]
//! speed_meas_std = 0.2
//! [controller]
//! t_a = 0.5
//! [metrics]
//! band = 0.03
//! [optimizer]
//! budget = 50
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cbo::CampaignConfig;
use crate::controller::ShiftSetup;
use crate::error::ConfigError;
use crate::metrics::{BaselineStats, MetricSettings};
use crate::sim::{NoiseConfig, SimConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Plant parameters. Noise lives in its own section.
    pub plant: SimConfig<f64>,
    pub noise: NoiseConfig<f64>,
    pub controller: ShiftSetup<f64>,
    pub metrics: MetricSettings<f64>,
    pub optimizer: CampaignConfig<f64>,
}

impl FileConfig {
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: path.into(), message: e.message().to_string() })?;
        if cfg.plant.noise != NoiseConfig::default() {
            return Err(ConfigError::Invalid("noise settings belong in the [noise] section".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
        Self::parse(&text, &name)
    }

    /// Plant configuration with the `[noise]` section applied.
    pub fn sim(&self) -> SimConfig<f64> {
        self.plant.clone().with_noise(self.noise.clone())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim().validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.optimizer.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.plant.gear_ratio(self.controller.target_gear).is_none() || self.controller.target_gear < 2 {
            return Err(ConfigError::Invalid(format!(
                "controller.target_gear = {} needs a configured gear below it",
                self.controller.target_gear
            )));
        }
        let m = &self.metrics;
        if !(m.band > 0.0 && m.window > 0.0 && m.highpass_cutoff > 0.0 && m.omega_floor > 0.0) {
            return Err(ConfigError::Invalid("metric settings must be positive".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

pub fn load_baseline(path: &Path) -> Result<BaselineStats<f64>, ConfigError> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: name.clone(), source })?;
    let stats: BaselineStats<f64> =
        toml::from_str(&text).map_err(|e| ConfigError::Parse { path: name, message: e.message().to_string() })?;
    stats.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(stats)
}

pub fn baseline_to_toml(stats: &BaselineStats<f64>) -> String {
    toml::to_string(stats).expect("baseline serializes")
}
