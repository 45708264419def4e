//! Flat `key = value` configuration files.
//!
//! Keys are exactly the [`ExperimentConfig`] field names; omitted keys keep
//! their defaults and unknown keys are rejected. Values use TOML syntax, so
//! strings are quoted.

use std::path::Path;

use anyhow::{Context, Result};
use rhomctdh_core::experiment::ExperimentConfig;

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).context("malformed configuration")?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_config(&text).with_context(|| format!("in {}", path.display()))
}

/// Serializes every field, in declaration order.
pub fn to_config_text(config: &ExperimentConfig) -> String {
    toml::to_string(config).expect("configuration fields are plain scalars")
}

/// Command-line overrides applied on top of a file or the defaults.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tau: Option<f64>,
    pub t_final: Option<f64>,
    pub gamma_off: bool,
    pub output_dir: Option<String>,
}

impl Overrides {
    /// Leaves `config` untouched if the result is invalid.
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<()> {
        let mut updated = config.clone();
        if let Some(tau) = self.tau {
            updated.tau = tau;
        }
        if let Some(t) = self.t_final {
            updated.t_final = t;
        }
        if self.gamma_off {
            updated.gamma_off = true;
        }
        if let Some(dir) = &self.output_dir {
            updated.output_dir = dir.clone();
        }
        updated.validate()?;
        *config = updated;
        Ok(())
    }
}
