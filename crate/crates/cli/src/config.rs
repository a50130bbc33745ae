//! Experiment configuration files (TOML). See `configs/SCHEMA.md`.

use std::fmt;
use std::path::{Path, PathBuf};

use hh_inverse::{
    landweber::DEFAULT_MAX_ITERATIONS, presets, Conductances, Exponents, InverseProblem,
    ModelConstants, ParameterKind, ParameterVector, StepControl, TimeGrid,
};
use serde::{Deserialize, Serialize};

/// A configuration that could not be read or failed validation.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn default_tau() -> f64 {
    presets::REFERENCE_TAU
}

fn default_max_iterations() -> usize {
    DEFAULT_MAX_ITERATIONS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Which triple the inversion recovers.
    pub unknown: ParameterKind,
    pub initial_guess: [f64; 3],
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub step_control: StepControl,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub grid: TimeGrid,
    pub constants: ModelConstants,
    pub conductances: Conductances,
    pub exponents: Exponents,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|ConfigError(msg)| ConfigError(format!("{}: {msg}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: Self = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let field = |name: &str, e: hh_inverse::Error| ConfigError(format!("{name}: {e}"));
        self.constants
            .validate()
            .map_err(|e| field("constants", e))?;
        self.conductances
            .validate()
            .map_err(|e| field("conductances", e))?;
        self.exponents
            .validate()
            .map_err(|e| field("exponents", e))?;
        if !self.initial_guess.iter().all(|x| x.is_finite()) {
            return Err(ConfigError(format!(
                "initial_guess: must be finite, got {:?}",
                self.initial_guess
            )));
        }
        if !(self.tau.is_finite() && self.tau > 2.0) {
            return Err(ConfigError(format!("tau: must exceed 2, got {}", self.tau)));
        }
        if let Some(e) = self
            .epsilons
            .iter()
            .find(|e| !(e.is_finite() && **e >= 0.0))
        {
            return Err(ConfigError(format!(
                "epsilons: entries must be non-negative, got {e}"
            )));
        }
        if self.max_iterations == 0 {
            return Err(ConfigError("max_iterations: must be at least 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn problem(&self) -> InverseProblem {
        InverseProblem {
            consts: self.constants,
            conductances: self.conductances,
            exponents: self.exponents,
            grid: self.grid,
        }
    }

    pub fn truth(&self) -> ParameterVector {
        match self.unknown {
            ParameterKind::Conductances => ParameterVector::conductances(self.conductances),
            ParameterKind::Exponents => ParameterVector::exponents(self.exponents),
        }
    }

    pub fn initial(&self) -> ParameterVector {
        ParameterVector::new(self.unknown, self.initial_guess)
    }
}
