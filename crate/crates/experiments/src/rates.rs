//! Convergence-rate verification with oracle regularization.
//!
//! The regularization level comes from the rate schedule of the function
//! class, so no hyperparameter selection is involved. One `lambda` per `n`
//! serves every derivative order.

use gpreg::export::fmt_num;
use gpreg::spectral::rate_schedule;
use gpreg::{BasisId, EigenSequence, FittedGp64, FunctionSpace, Kernel, Kernel64, SeriesFunction64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check_common, default_grid_points, default_sigma0_sq};
use crate::error::{ExperimentError, Result};
use crate::seeding::{replicate_rng, worker_pool};
use crate::study::{describe, MAX_FAILURE_SHARE};
use crate::target::{analytic_truth, evaluation_grid, rmse, series_truth, simulate_from, TARGET_TERMS};

/// Function class of the truth, matched by the prior's eigenvalue decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RateClass {
    /// Prior `mu_i = i^{-2 alpha}`, truth `f_i = i^{-(alpha+1/2)} sin i`.
    ///
    /// The truth sits on the boundary of the `L^2` Sobolev ball of order
    /// `alpha`, so its bias decays at the minimax rate instead of faster.
    Holder { alpha: f64 },
    /// Prior `mu_i = exp(-2 gamma i)`, truth `f_i = exp(-truth_rate i)`.
    Analytic { gamma: f64, truth_rate: f64 },
}

impl RateClass {
    fn space(&self) -> FunctionSpace<f64> {
        match *self {
            RateClass::Holder { alpha } => FunctionSpace::Holder { alpha },
            RateClass::Analytic { gamma, .. } => FunctionSpace::Analytic { gamma },
        }
    }

    /// Spectral prior with eigenvalues `scale * i^{-2 alpha}` or `scale * exp(-2 gamma i)`.
    pub fn kernel(&self, scale: f64, truncation: usize) -> Result<Kernel64> {
        let eig = match *self {
            RateClass::Holder { alpha } => EigenSequence::polynomial(alpha, scale)?,
            RateClass::Analytic { gamma, .. } => EigenSequence::exponential(gamma, scale)?,
        };
        Ok(Kernel::spectral(BasisId::CosineHalf, eig, truncation)?)
    }

    pub fn truth(&self) -> SeriesFunction64 {
        match *self {
            RateClass::Holder { alpha } => series_truth(alpha + 0.5, TARGET_TERMS),
            RateClass::Analytic { truth_rate, .. } => analytic_truth(truth_rate, TARGET_TERMS),
        }
    }

    /// Abscissa of the log-log fit: `log(n / log n)`, or `log(sqrt(n) / log n)`
    /// for analytic classes.
    pub fn abscissa(&self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            RateClass::Holder { .. } => (nf / nf.ln()).ln(),
            RateClass::Analytic { .. } => (nf.sqrt() / nf.ln()).ln(),
        }
    }

    /// Theoretical slope of the log-log fit for derivative order `k`.
    pub fn expected_slope(&self, k: u32) -> f64 {
        match *self {
            RateClass::Holder { alpha } => -(alpha - k as f64) / (2.0 * alpha + 1.0),
            RateClass::Analytic { .. } => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateConfig {
    pub class: RateClass,
    #[serde(default = "default_rate_orders")]
    pub orders: Vec<u32>,
    pub n_values: Vec<usize>,
    pub replications: usize,
    #[serde(default = "default_sigma0_sq")]
    pub sigma0_sq: f64,
    pub seed: u64,
    /// Retained terms of the spectral prior.
    #[serde(default = "default_truncation")]
    pub truncation: usize,
    /// Multiplier of the prior eigenvalues; equivalent to dividing `lambda` by it.
    #[serde(default = "default_eigen_scale")]
    pub eigen_scale: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
}

fn default_rate_orders() -> Vec<u32> {
    vec![0]
}

fn default_truncation() -> usize {
    500
}

pub(crate) fn default_eigen_scale() -> f64 {
    1.0
}

impl RateConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(&self.n_values, self.replications, self.sigma0_sq, self.grid_points)?;
        if self.n_values.len() < 2 || self.n_values.iter().any(|n| *n < 3) {
            return Err(ExperimentError::Config("a rate fit needs at least two sample sizes >= 3".into()));
        }
        if self.orders.is_empty() || self.truncation == 0 {
            return Err(ExperimentError::Config("orders and truncation must be nonempty".into()));
        }
        for &k in &self.orders {
            rate_schedule(self.class.space(), k, self.n_values[0])?;
        }
        self.class.kernel(self.eigen_scale, self.truncation)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub lambda: f64,
    pub median: f64,
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRate {
    pub order: u32,
    pub slope: f64,
    pub intercept: f64,
    pub expected_slope: f64,
    pub points: Vec<RatePoint>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub config: RateConfig,
    pub orders: Vec<OrderRate>,
}

/// Least-squares `(slope, intercept)` of `y` on `x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn rate_study(config: &RateConfig, threads: usize) -> Result<RateResult> {
    config.validate()?;
    let pool = worker_pool(threads)?;
    let kernel = config.class.kernel(config.eigen_scale, config.truncation)?;
    let truth = config.class.truth();
    let grid = evaluation_grid(config.grid_points);
    let truth_grid = config
        .orders
        .iter()
        .map(|&k| truth.eval_many(k, &grid))
        .collect::<gpreg::Result<Vec<_>>>()?;
    let space = config.class.space();

    let mut per_n = Vec::new();
    for &n in &config.n_values {
        let lambda = rate_schedule(space, 0, n)?.lambda;
        let runs: Vec<std::result::Result<Vec<f64>, String>> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = replicate_rng(config.seed, n, rep);
                    let data = simulate_from(&truth, n, config.sigma0_sq, &mut rng).map_err(|e| e.to_string())?;
                    let fit = FittedGp64::fit(&kernel, &data, lambda, config.sigma0_sq).map_err(|e| e.to_string())?;
                    config
                        .orders
                        .iter()
                        .zip(&truth_grid)
                        .map(|(&k, t)| {
                            let est = fit.posterior_mean_grid(k, &grid).map_err(|e| e.to_string())?;
                            rmse(&est, t).map_err(|e| e.to_string())
                        })
                        .collect()
                })
                .collect()
        });
        per_n.push((n, lambda, runs));
    }

    let mut orders = Vec::new();
    for (oi, &k) in config.orders.iter().enumerate() {
        let mut points = Vec::new();
        for (n, lambda, runs) in &per_n {
            let ok: Vec<f64> = runs.iter().filter_map(|r| r.as_ref().ok()).map(|v| v[oi]).collect();
            let failures = runs.len() - ok.len();
            if failures as f64 > MAX_FAILURE_SHARE * runs.len() as f64 || ok.is_empty() {
                return Err(ExperimentError::FailureRate {
                    method: format!("rate study order {k}"),
                    n: *n,
                    failures,
                    reps: runs.len(),
                });
            }
            points.push(RatePoint {
                n: *n,
                lambda: *lambda,
                median: describe(&ok).1,
                reps: ok.len(),
                failures,
            });
        }
        let x: Vec<f64> = points.iter().map(|p| config.class.abscissa(p.n)).collect();
        let y: Vec<f64> = points.iter().map(|p| p.median.ln()).collect();
        let (slope, intercept) = log_log_slope(&x, &y);
        orders.push(OrderRate {
            order: k,
            slope,
            intercept,
            expected_slope: config.class.expected_slope(k),
            points,
            warning: rate_schedule(space, k, config.n_values[0])?.warning,
        });
    }
    Ok(RateResult {
        config: config.clone(),
        orders,
    })
}

impl RateResult {
    pub fn order(&self, k: u32) -> Option<&OrderRate> {
        self.orders.iter().find(|o| o.order == k)
    }

    /// Columns `order,slope,expected_slope,intercept`.
    pub fn slopes_csv(&self) -> String {
        let mut out = String::from("order,slope,expected_slope,intercept\n");
        for o in &self.orders {
            out.push_str(&format!(
                "{},{},{},{}\n",
                o.order,
                fmt_num(o.slope),
                fmt_num(o.expected_slope),
                fmt_num(o.intercept)
            ));
        }
        out
    }

    /// Columns `order,n,lambda,median,reps,failures` for plotting.
    pub fn points_csv(&self) -> String {
        let mut out = String::from("order,n,lambda,median,reps,failures\n");
        for o in &self.orders {
            for p in &o.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    o.order,
                    p.n,
                    fmt_num(p.lambda),
                    fmt_num(p.median),
                    p.reps,
                    p.failures
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let x: Vec<f64> = [1.0f64, 2.0, 3.0, 5.0].to_vec();
        let y: Vec<f64> = x.iter().map(|v| 0.7 - 0.4 * v).collect();
        let (s, c) = log_log_slope(&x, &y);
        assert!((s + 0.4).abs() < 1e-14 && (c - 0.7).abs() < 1e-14);
    }

    #[test]
    fn expected_slopes() {
        let c = RateClass::Holder { alpha: 2.0 };
        assert!((c.expected_slope(0) + 0.4).abs() < 1e-15);
        assert!((c.expected_slope(1) + 0.2).abs() < 1e-15);
    }

    #[test]
    fn analytic_class_rejects_derivatives() {
        let cfg = RateConfig {
            class: RateClass::Analytic { gamma: 1.0, truth_rate: 1.2 },
            orders: vec![1],
            n_values: vec![50, 100],
            replications: 2,
            sigma0_sq: 0.1,
            seed: 1,
            truncation: 50,
            eigen_scale: 1.0,
            grid_points: 100,
        };
        assert!(rate_study(&cfg, 1).is_err());
    }

    #[test]
    fn small_study_runs_and_is_thread_invariant() {
        let cfg = RateConfig {
            class: RateClass::Holder { alpha: 2.0 },
            orders: vec![0, 1],
            n_values: vec![50, 100, 200],
            replications: 4,
            sigma0_sq: 0.1,
            seed: 9,
            truncation: 100,
            eigen_scale: 1.0,
            grid_points: 100,
        };
        let a = rate_study(&cfg, 1).unwrap();
        let b = rate_study(&cfg, 4).unwrap();
        assert_eq!(a.points_csv(), b.points_csv());
        assert_eq!(a.orders.len(), 2);
        assert!(a.order(1).unwrap().warning.is_some());
        assert!(a.order(0).unwrap().slope < 0.0);
    }
}
