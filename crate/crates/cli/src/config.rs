//! Strict TOML configs for the commands without a library config type.

use std::path::Path;

use gpreg::selection::log_grid;
use gpreg::{BasisId, EigenSequence};
use gpreg_experiments::config::{LambdaGrid, Method};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Reads and parses a config file, rejecting unknown keys.
pub fn load<C: DeserializeOwned>(path: &Path) -> Result<C> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse<C: DeserializeOwned>(text: &str) -> std::result::Result<C, toml::de::Error> {
    toml::from_str(text)
}

/// Data for `fit`: simulated from the regression target or read from CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Simulate {
        n: usize,
        #[serde(default = "default_sigma0_sq")]
        sigma0_sq: f64,
    },
    /// Two-column CSV `x,y` with a header row.
    Csv { path: String },
}

fn default_sigma0_sq() -> f64 {
    gpreg_experiments::target::DEFAULT_SIGMA0_SQ
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub seed: u64,
    pub data: DataSource,
    pub method: Method,
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    #[serde(default = "default_fit_grid")]
    pub grid_points: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
}

fn default_orders() -> Vec<u32> {
    vec![0, 1]
}

fn default_fit_grid() -> usize {
    101
}

fn default_level() -> f64 {
    0.95
}

fn default_draws() -> usize {
    1000
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if let DataSource::Simulate { n, sigma0_sq } = self.data {
            if n == 0 || !(sigma0_sq > 0.0) {
                return Err(CliError::Config("simulated data needs n >= 1 and sigma0_sq > 0".into()));
            }
        }
        if self.grid_points < 2 || self.orders.is_empty() {
            return Err(CliError::Config("grid_points >= 2 and a nonempty order list are required".into()));
        }
        let max = self.method.max_order()?;
        if let Some(k) = self.orders.iter().find(|k| **k > max) {
            return Err(CliError::Config(format!("{} supports orders up to {max}, requested {k}", self.method.label())));
        }
        if !(self.level > 0.0 && self.level < 1.0) || self.draws < 100 {
            return Err(CliError::Config("level must lie in (0, 1) and draws >= 100".into()));
        }
        Ok(self.lambda_grid.validate()?)
    }
}

/// Effective-dimension sweep over a log-spaced `lambda` range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraConfig {
    pub basis: BasisId,
    pub eigenvalues: EigenSequence<f64>,
    pub lambda: LambdaGrid,
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    #[serde(default = "default_spectra_grid")]
    pub grid_size: usize,
}

fn default_spectra_grid() -> usize {
    gpreg::spectral::DEFAULT_GRID
}

impl SpectraConfig {
    pub fn validate(&self) -> Result<()> {
        self.lambda.validate()?;
        self.eigenvalues.validate()?;
        if self.grid_size < 2 {
            return Err(CliError::Config("grid_size must be at least 2".into()));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> Vec<f64> {
        log_grid(self.lambda.min, self.lambda.max, self.lambda.count)
    }
}
