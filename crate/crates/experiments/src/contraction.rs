//! Monte Carlo estimates of posterior mass outside balls around the truth.

use gpreg::spectral::rate_schedule;
use gpreg::{FittedGp64, FunctionSpace, GpError};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check_common, default_grid_points, default_sigma0_sq};
use crate::error::{ExperimentError, Result};
use crate::rates::RateClass;
use crate::seeding::{replicate_rng, worker_pool};
use crate::study::describe;
use crate::target::{evaluation_grid, simulate_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    /// Trapezoid quadrature on the grid.
    L2,
    /// Maximum over the grid.
    Linf,
}

/// Distance between two functions tabulated on an increasing grid.
pub fn grid_distance(a: &[f64], b: &[f64], grid: &[f64], norm: Norm) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    match norm {
        Norm::Linf => d.iter().fold(0.0, |m, v| m.max(v.abs())),
        Norm::L2 => {
            let mut s = 0.0;
            for j in 1..grid.len() {
                s += 0.5 * (grid[j] - grid[j - 1]) * (d[j] * d[j] + d[j - 1] * d[j - 1]);
            }
            s.sqrt()
        }
    }
}

/// Share of sampled paths (rows of `draws`) farther than `radius` from `truth`.
pub fn mass_outside(draws: &DMatrix<f64>, truth: &[f64], grid: &[f64], norm: Norm, radius: f64) -> f64 {
    let m = draws.nrows();
    let outside = (0..m)
        .filter(|&r| {
            let path: Vec<f64> = draws.row(r).iter().copied().collect();
            grid_distance(&path, truth, grid, norm) > radius
        })
        .count();
    outside as f64 / m as f64
}

/// `P(||f^{(k)} - f0^{(k)}|| > radius | data)` from `m >= 100` posterior paths.
#[allow(clippy::too_many_arguments)]
pub fn contraction_probe<R: Rng + ?Sized>(
    fit: &FittedGp64,
    k: u32,
    norm: Norm,
    radius: f64,
    grid: &[f64],
    truth: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<f64> {
    if m < 100 {
        return Err(GpError::Contract(format!("contraction probe needs m >= 100, got {m}")).into());
    }
    if truth.len() != grid.len() {
        return Err(GpError::LengthMismatch {
            expected: grid.len(),
            got: truth.len(),
        }
        .into());
    }
    let draws = fit.sample_paths(k, grid, m, rng)?;
    Ok(mass_outside(&draws, truth, grid, norm, radius))
}

/// Mass at `radius_multiplier * eps_n` across sample sizes, with oracle `lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractionConfig {
    pub class: RateClass,
    pub order: u32,
    pub norm: Norm,
    pub radius_multiplier: f64,
    pub n_values: Vec<usize>,
    pub seeds: usize,
    pub draws: usize,
    #[serde(default = "default_sigma0_sq")]
    pub sigma0_sq: f64,
    pub seed: u64,
    pub truncation: usize,
    #[serde(default = "crate::rates::default_eigen_scale")]
    pub eigen_scale: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionPoint {
    pub n: usize,
    pub radius: f64,
    pub median_mass: f64,
    pub masses: Vec<f64>,
}

pub fn contraction_trend(config: &ContractionConfig, threads: usize) -> Result<Vec<ContractionPoint>> {
    check_common(&config.n_values, config.seeds, config.sigma0_sq, config.grid_points)?;
    if !(config.radius_multiplier > 0.0) {
        return Err(ExperimentError::Config("radius_multiplier must be positive".into()));
    }
    let pool = worker_pool(threads)?;
    let kernel = config.class.kernel(config.eigen_scale, config.truncation)?;
    let truth = config.class.truth();
    let grid = evaluation_grid(config.grid_points);
    let truth_grid = truth.eval_many(config.order, &grid)?;
    let space: FunctionSpace<f64> = match config.class {
        RateClass::Holder { alpha } => FunctionSpace::Holder { alpha },
        RateClass::Analytic { gamma, .. } => FunctionSpace::Analytic { gamma },
    };
    let mut out = Vec::new();
    for &n in &config.n_values {
        let lambda = rate_schedule(space, 0, n)?.lambda;
        let radius = config.radius_multiplier * rate_schedule(space, config.order, n)?.eps;
        let masses: Vec<f64> = pool.install(|| {
            (0..config.seeds)
                .into_par_iter()
                .map(|s| -> Result<f64> {
                    let mut rng = replicate_rng(config.seed, n, s);
                    let data = simulate_from(&truth, n, config.sigma0_sq, &mut rng)?;
                    let fit = FittedGp64::fit(&kernel, &data, lambda, config.sigma0_sq)?;
                    contraction_probe(&fit, config.order, config.norm, radius, &grid, &truth_grid, config.draws, &mut rng)
                })
                .collect::<Result<Vec<f64>>>()
        })?;
        out.push(ContractionPoint {
            n,
            radius,
            median_mass: describe(&masses).1,
            masses,
        });
    }
    Ok(out)
}
