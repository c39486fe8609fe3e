//! Regression targets, simulated data and the RMSE criterion.

use gpreg::{BasisId, Dataset, SeriesFunction};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{ExperimentError, Result};

/// Number of series terms kept for the targets.
pub const TARGET_TERMS: usize = 2000;

/// Default noise variance of the simulation design.
pub const DEFAULT_SIGMA0_SQ: f64 = 0.1;

/// Series truth `f_i = i^{-decay} sin(i)` on the half-cosine basis.
///
/// With `decay = 4` this is the simulation target
/// `sqrt(2) sum i^-4 sin(i) cos((i - 1/2) pi x)`.
pub fn series_truth(decay: f64, terms: usize) -> SeriesFunction<f64> {
    let coeffs = (1..=terms)
        .map(|i| (i as f64).powf(-decay) * (i as f64).sin())
        .collect();
    SeriesFunction::new(BasisId::CosineHalf, coeffs)
}

/// Analytic truth `f_i = exp(-rate i)` on the half-cosine basis.
pub fn analytic_truth(rate: f64, terms: usize) -> SeriesFunction<f64> {
    let coeffs = (1..=terms).map(|i| (-rate * i as f64).exp()).collect();
    SeriesFunction::new(BasisId::CosineHalf, coeffs)
}

/// The simulation target.
pub fn simulation_truth() -> SeriesFunction<f64> {
    series_truth(4.0, TARGET_TERMS)
}

/// `f0^{(k)}(x)` for the simulation target.
pub fn true_target(k: u32, x: f64) -> Result<f64> {
    Ok(simulation_truth().eval(k, x)?)
}

/// `n` draws with `X ~ U[0, 1]` and `Y = f(X) + N(0, sigma0_sq)`.
pub fn simulate_from<R: Rng + ?Sized>(
    truth: &SeriesFunction<f64>,
    n: usize,
    sigma0_sq: f64,
    rng: &mut R,
) -> Result<Dataset<f64>> {
    if n == 0 {
        return Err(ExperimentError::Config("simulated sample size must be positive".into()));
    }
    let noise = Normal::new(0.0, sigma0_sq.sqrt())
        .map_err(|e| ExperimentError::Config(format!("noise variance {sigma0_sq}: {e}")))?;
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let eps: Vec<f64> = (0..n).map(|_| noise.sample(rng)).collect();
    let f = truth.eval_many(0, &x)?;
    let y = f.iter().zip(&eps).map(|(a, b)| a + b).collect();
    Ok(Dataset::new(x, y)?)
}

pub fn simulate_dataset<R: Rng + ?Sized>(n: usize, sigma0_sq: f64, rng: &mut R) -> Result<Dataset<f64>> {
    simulate_from(&simulation_truth(), n, sigma0_sq, rng)
}

/// Evaluation grid `t / (m - 1)`, `t = 0..m`.
pub fn evaluation_grid(m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..m).map(|t| t as f64 / (m - 1) as f64).collect(),
    }
}

pub fn rmse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() || estimate.is_empty() {
        return Err(ExperimentError::Numerical(gpreg::GpError::LengthMismatch {
            expected: truth.len(),
            got: estimate.len(),
        }));
    }
    let ss: f64 = estimate.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((ss / estimate.len() as f64).sqrt())
}
