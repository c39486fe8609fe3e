//! Study configurations. All structs reject unknown keys when deserialized.

use gpreg::selection::{DEFAULT_LAMBDA_COUNT, DEFAULT_LAMBDA_MAX, DEFAULT_LAMBDA_MIN, DEFAULT_NU_MENU};
use gpreg::{Kernel, Kernel64};
use serde::{Deserialize, Serialize};

use crate::error::{ExperimentError, Result};
use crate::target::DEFAULT_SIGMA0_SQ;

/// Kernel family with its tuning rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Method {
    /// Matérn with fixed `nu`; `lambda` and `sigma2` by empirical Bayes.
    Matern { nu: f64 },
    /// Matérn with `nu` chosen by leave-one-out CV, then empirical Bayes.
    MaternLoocv {
        #[serde(default = "default_nu_menu")]
        nu_menu: Vec<f64>,
    },
    SquaredExponential,
    Sobolev2,
}

fn default_nu_menu() -> Vec<f64> {
    DEFAULT_NU_MENU.to_vec()
}

impl Method {
    /// Column label; never contains a comma.
    pub fn label(&self) -> String {
        match self {
            Method::Matern { nu } => format!("matern_nu{nu}"),
            Method::MaternLoocv { .. } => "matern_loocv".into(),
            Method::SquaredExponential => "squared_exponential".into(),
            Method::Sobolev2 => "sobolev2".into(),
        }
    }

    /// The kernel for a fixed `nu`, or for the first menu entry.
    pub fn base_kernel(&self) -> Result<Kernel64> {
        Ok(match self {
            Method::Matern { nu } => Kernel::matern(*nu)?,
            Method::MaternLoocv { nu_menu } => {
                let nu = nu_menu
                    .first()
                    .ok_or_else(|| ExperimentError::Config("nu_menu is empty".into()))?;
                Kernel::matern(*nu)?
            }
            Method::SquaredExponential => Kernel::squared_exponential(),
            Method::Sobolev2 => Kernel::sobolev2(),
        })
    }

    /// Highest derivative order every kernel of this method supports.
    pub fn max_order(&self) -> Result<u32> {
        match self {
            Method::MaternLoocv { nu_menu } => {
                let mut m = u32::MAX;
                for nu in nu_menu {
                    m = m.min(Kernel::matern(*nu)?.max_deriv_order());
                }
                if nu_menu.is_empty() {
                    return Err(ExperimentError::Config("nu_menu is empty".into()));
                }
                Ok(m)
            }
            _ => Ok(self.base_kernel()?.max_deriv_order()),
        }
    }
}

/// Log-spaced regularization grid for empirical Bayes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid {
            min: DEFAULT_LAMBDA_MIN,
            max: DEFAULT_LAMBDA_MAX,
            count: DEFAULT_LAMBDA_COUNT,
        }
    }
}

impl LambdaGrid {
    pub fn points(&self) -> Vec<f64> {
        gpreg::selection::log_grid(self.min, self.max, self.count)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min > 0.0 && self.max >= self.min && self.max.is_finite()) || self.count == 0 {
            return Err(ExperimentError::Config(format!(
                "lambda grid needs 0 < min <= max and count >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Replicated simulation study over sample sizes and methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub n_values: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_sigma0_sq")]
    pub sigma0_sq: f64,
    pub methods: Vec<Method>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub seed: u64,
    #[serde(default = "default_orders")]
    pub derivative_orders: Vec<u32>,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
}

pub(crate) fn default_sigma0_sq() -> f64 {
    DEFAULT_SIGMA0_SQ
}

pub(crate) fn default_grid_points() -> usize {
    100
}

pub(crate) fn default_orders() -> Vec<u32> {
    vec![0, 1]
}

pub(crate) fn check_common(n_values: &[usize], replications: usize, sigma0_sq: f64, grid_points: usize) -> Result<()> {
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(ExperimentError::Config("n_values must be nonempty and positive".into()));
    }
    if replications == 0 {
        return Err(ExperimentError::Config("replications must be at least 1".into()));
    }
    if !(sigma0_sq > 0.0 && sigma0_sq.is_finite()) {
        return Err(ExperimentError::Config(format!("sigma0_sq must be positive, got {sigma0_sq}")));
    }
    if grid_points < 2 {
        return Err(ExperimentError::Config("grid_points must be at least 2".into()));
    }
    Ok(())
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.n_values, self.replications, self.sigma0_sq, self.grid_points)?;
        if self.methods.is_empty() {
            return Err(ExperimentError::Config("at least one method is required".into()));
        }
        if self.derivative_orders.is_empty() {
            return Err(ExperimentError::Config("derivative_orders must be nonempty".into()));
        }
        let mut orders = self.derivative_orders.clone();
        orders.sort_unstable();
        orders.dedup();
        if orders.len() != self.derivative_orders.len() {
            return Err(ExperimentError::Config("derivative_orders contains duplicates".into()));
        }
        for m in &self.methods {
            let max = m.max_order()?;
            if let Some(k) = self.derivative_orders.iter().find(|k| **k > max) {
                return Err(ExperimentError::Config(format!(
                    "{} supports derivative orders up to {max}, requested {k}",
                    m.label()
                )));
            }
        }
        let mut labels: Vec<String> = self.methods.iter().map(Method::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != self.methods.len() {
            return Err(ExperimentError::Config("duplicate methods".into()));
        }
        self.lambda_grid.validate()
    }
}
