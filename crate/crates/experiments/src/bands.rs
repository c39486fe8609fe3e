//! Frequentist coverage of simultaneous credible bands.

use gpreg::export::fmt_num;
use gpreg::CredibleBand;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check_common, default_grid_points, default_orders, default_sigma0_sq, LambdaGrid, Method};
use crate::error::{ExperimentError, Result};
use crate::seeding::{replicate_rng, worker_pool};
use crate::study::tune_and_fit;
use crate::target::{evaluation_grid, simulate_from, simulation_truth};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandConfig {
    pub method: Method,
    pub n: usize,
    pub replications: usize,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_orders")]
    pub derivative_orders: Vec<u32>,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_sigma0_sq")]
    pub sigma0_sq: f64,
    pub seed: u64,
    #[serde(default)]
    pub lambda_grid: LambdaGrid,
}

fn default_level() -> f64 {
    0.95
}

fn default_draws() -> usize {
    1000
}

impl BandConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(&[self.n], self.replications, self.sigma0_sq, self.grid_points)?;
        if !(self.level > 0.0 && self.level < 1.0) || self.draws < 100 {
            return Err(ExperimentError::Config("level must lie in (0, 1) and draws >= 100".into()));
        }
        let max = self.method.max_order()?;
        if self.derivative_orders.is_empty() || self.derivative_orders.iter().any(|k| *k > max) {
            return Err(ExperimentError::Config(format!(
                "derivative orders must be nonempty and at most {max}"
            )));
        }
        self.lambda_grid.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderCoverage {
    pub order: u32,
    pub covered: usize,
    pub coverage: f64,
    pub mean_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandResult {
    pub config: BandConfig,
    pub replicates: usize,
    pub failures: usize,
    pub orders: Vec<OrderCoverage>,
    /// Bands of the first successful replicate, one per order.
    pub example: Vec<CredibleBand<f64>>,
}

pub fn band_study(config: &BandConfig, threads: usize) -> Result<BandResult> {
    config.validate()?;
    let pool = worker_pool(threads)?;
    let truth = simulation_truth();
    let grid = evaluation_grid(config.grid_points);
    let truth_grid = config
        .derivative_orders
        .iter()
        .map(|&k| truth.eval_many(k, &grid))
        .collect::<gpreg::Result<Vec<_>>>()?;
    let runs: Vec<Option<Vec<CredibleBand<f64>>>> = pool.install(|| {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| -> Option<Vec<CredibleBand<f64>>> {
                let mut rng = replicate_rng(config.seed, config.n, rep);
                let data = simulate_from(&truth, config.n, config.sigma0_sq, &mut rng).ok()?;
                let (fit, _) = tune_and_fit(&config.method, &data, &config.lambda_grid).ok()?;
                config
                    .derivative_orders
                    .iter()
                    .map(|&k| fit.credible_band(k, &grid, config.level, config.draws, &mut rng).ok())
                    .collect()
            })
            .collect()
    });
    let ok: Vec<&Vec<CredibleBand<f64>>> = runs.iter().flatten().collect();
    let failures = runs.len() - ok.len();
    if failures as f64 > crate::study::MAX_FAILURE_SHARE * runs.len() as f64 || ok.is_empty() {
        return Err(ExperimentError::FailureRate {
            method: config.method.label(),
            n: config.n,
            failures,
            reps: runs.len(),
        });
    }
    let orders = config
        .derivative_orders
        .iter()
        .enumerate()
        .map(|(oi, &order)| {
            let covered = ok.iter().filter(|b| b[oi].contains(&truth_grid[oi])).count();
            OrderCoverage {
                order,
                covered,
                coverage: covered as f64 / ok.len() as f64,
                mean_radius: ok.iter().map(|b| b[oi].radius).sum::<f64>() / ok.len() as f64,
            }
        })
        .collect();
    Ok(BandResult {
        config: config.clone(),
        replicates: runs.len(),
        failures,
        orders,
        example: ok[0].clone(),
    })
}

impl BandResult {
    /// Example bands with the truth: `x,truth_k,center_k,lo_k,hi_k` per order.
    pub fn band_csv(&self) -> String {
        let truth = simulation_truth();
        let mut header = vec!["x".to_string()];
        for k in &self.config.derivative_orders {
            header.extend([format!("truth_{k}"), format!("center_{k}"), format!("lo_{k}"), format!("hi_{k}")]);
        }
        let mut out = header.join(",");
        out.push('\n');
        let grid = &self.example[0].grid;
        for (j, &x) in grid.iter().enumerate() {
            let mut row = vec![fmt_num(x)];
            for (band, &k) in self.example.iter().zip(&self.config.derivative_orders) {
                let t = truth.eval(k, x).unwrap_or(f64::NAN);
                row.extend([
                    fmt_num(t),
                    fmt_num(band.center[j]),
                    fmt_num(band.center[j] - band.radius),
                    fmt_num(band.center[j] + band.radius),
                ]);
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Columns `order,covered,replicates,coverage,mean_radius`.
    pub fn coverage_csv(&self) -> String {
        let mut out = String::from("order,covered,replicates,coverage,mean_radius\n");
        let ok = self.replicates - self.failures;
        for o in &self.orders {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                o.order,
                o.covered,
                ok,
                fmt_num(o.coverage),
                fmt_num(o.mean_radius)
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_band_study() {
        let cfg = BandConfig {
            method: Method::Matern { nu: 2.5 },
            n: 60,
            replications: 4,
            level: 0.95,
            draws: 200,
            derivative_orders: vec![0, 1],
            grid_points: 50,
            sigma0_sq: 0.1,
            seed: 3,
            lambda_grid: LambdaGrid::default(),
        };
        let a = band_study(&cfg, 1).unwrap();
        let b = band_study(&cfg, 2).unwrap();
        assert_eq!(a.band_csv(), b.band_csv());
        assert_eq!(a.coverage_csv(), b.coverage_csv());
        assert_eq!(a.band_csv().lines().count(), 51);
        assert!(a.orders.iter().all(|o| o.mean_radius > 0.0));
    }
}
