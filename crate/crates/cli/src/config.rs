//! Experiment configuration: global fields plus a command-specific `params` object.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    /// CSV destination; stdout when absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Schedule run under `--sweep`.
    #[serde(default)]
    pub sweep: Option<Vec<SweepEntry>>,
    #[serde(default)]
    pub params: Option<serde_json::Value>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))
    }

    /// Command parameters, with defaults for everything not given.
    pub fn params<T: DeserializeOwned + Default>(&self) -> Result<T, CliError> {
        match &self.params {
            None => Ok(T::default()),
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|e| CliError::Usage(format!("params: {e}"))),
        }
    }
}

/// Pass/fail thresholds. Every field can be overridden from the config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative gap between `E^(s)(u, u)` and the Brownian energy.
    pub energy_rel: f64,
    /// Distance of the affine counterexample ratio from 2.
    pub affine_ratio: f64,
    /// Monte Carlo agreement, in standard errors.
    pub mc_se: f64,
    /// Chain hit probability against the scale ratio.
    pub chain: f64,
    /// Relative gap between Monte Carlo and chain mean exit times.
    pub exit_time_rel: f64,
    /// Relative gap between Fourier and direct Lévy energies.
    pub levy_rel: f64,
    /// Absolute pairing-identity residual after one refinement.
    pub pairing: f64,
    /// Relative gap between product energy and the 2-d finite-difference energy.
    pub product_rel: f64,
    /// Cantor function against the ternary-expansion oracle.
    pub cantor: f64,
    /// `|c(x) + c(1 - x) - 1|`.
    pub cantor_symmetry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            energy_rel: 1e-3,
            affine_ratio: 1e-6,
            mc_se: 3.0,
            chain: 1e-6,
            exit_time_rel: 0.02,
            levy_rel: 1e-3,
            pairing: 1e-3,
            product_rel: 1e-3,
            cantor: 1e-9,
            cantor_symmetry: 1e-12,
        }
    }
}

/// One point of a sweep schedule; unset fields keep the command's base value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepEntry {
    #[serde(default)]
    pub depth: Option<u32>,
    #[serde(default)]
    pub grid_n: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

/// A single number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(x) => vec![*x],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = ExperimentConfig::parse("{}").unwrap();
        assert_eq!(c.tolerances, Tolerances::default());
        assert!(c.sweep.is_none());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::parse(r#"{"sed": 3}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"tolerances": {"energy": 1}}"#).is_err());
        assert!(ExperimentConfig::parse(r#"{"sweep": [{"depth": 3, "n": 2}]}"#).is_err());
    }

    #[test]
    fn partial_tolerances_keep_other_defaults() {
        let c = ExperimentConfig::parse(r#"{"tolerances": {"mc_se": 4.0}, "seed": 9}"#).unwrap();
        assert_eq!(c.tolerances.mc_se, 4.0);
        assert_eq!(c.tolerances.energy_rel, 1e-3);
        assert_eq!(c.seed, Some(9));
    }
}
