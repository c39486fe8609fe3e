//! Replicated RMSE study with empirical-Bayes tuning.

use gpreg::export::fmt_num;
use gpreg::selection::{loocv_select, select_lambda};
use gpreg::{Dataset64, FittedGp64, Kernel, Kernel64, SelectionResult64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{LambdaGrid, Method, StudyConfig};
use crate::error::{ExperimentError, Result};
use crate::seeding::{replicate_rng, replicate_seed, worker_pool};
use crate::target::{evaluation_grid, rmse, simulate_from, simulation_truth};

/// Largest tolerated share of failed replicates per (method, n).
pub const MAX_FAILURE_SHARE: f64 = 0.05;

/// Hyperparameters chosen for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub lambda: f64,
    pub sigma2: f64,
    pub nu: Option<f64>,
    pub at_boundary: bool,
}

/// Outcome of tuning: the kernel, the empirical-Bayes selection and, for
/// cross-validated methods, the selection that fixed `nu`.
#[derive(Debug, Clone)]
pub struct Tuned {
    pub kernel: Kernel64,
    pub eb: SelectionResult64,
    pub cv: Option<SelectionResult64>,
}

/// Chooses `nu` by leave-one-out CV when requested, then `lambda` and
/// `sigma2` by empirical Bayes at that kernel.
pub fn tune(method: &Method, data: &Dataset64, grid: &LambdaGrid) -> Result<Tuned> {
    let lambdas = grid.points();
    let (kernel, cv) = match method {
        Method::MaternLoocv { nu_menu } => {
            let cv = loocv_select(data, nu_menu, &lambdas)?;
            let nu = cv.nu.expect("cross-validation reports nu");
            (Kernel::matern(nu)?, Some(cv))
        }
        _ => (method.base_kernel()?, None),
    };
    let eb = select_lambda(&kernel, data, &lambdas)?;
    Ok(Tuned { kernel, eb, cv })
}

/// Tunes a method on a dataset and fits the posterior.
pub fn tune_and_fit(method: &Method, data: &Dataset64, grid: &LambdaGrid) -> Result<(FittedGp64, Tuning)> {
    let t = tune(method, data, grid)?;
    let fit = FittedGp64::fit(&t.kernel, data, t.eb.lambda, t.eb.sigma2)?;
    let nu = match method {
        Method::Matern { nu } => Some(*nu),
        _ => t.cv.as_ref().and_then(|c| c.nu),
    };
    Ok((
        fit,
        Tuning {
            lambda: t.eb.lambda,
            sigma2: t.eb.sigma2,
            nu,
            at_boundary: t.eb.at_boundary,
        },
    ))
}

/// One method on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: String,
    pub tuning: Option<Tuning>,
    /// RMSE per derivative order, in config order.
    pub rmse: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub outcomes: Vec<MethodOutcome>,
}

/// Aggregate over replicates for one (method, n, order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub n: usize,
    pub order: u32,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation over `sqrt(reps)`; `NaN` with fewer than two replicates.
    pub se: f64,
    pub reps: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub summaries: Vec<CellSummary>,
    pub replicates: Vec<ReplicateRecord>,
}

/// Mean, median and standard error of a nonempty sample.
pub fn describe(values: &[f64]) -> (f64, f64, f64) {
    let m = values.len();
    let mean = values.iter().sum::<f64>() / m as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if m % 2 == 1 {
        sorted[m / 2]
    } else {
        0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
    };
    let se = if m < 2 {
        f64::NAN
    } else {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1) as f64;
        (var / m as f64).sqrt()
    };
    (mean, median, se)
}

fn run_replicate(config: &StudyConfig, truth_grid: &[Vec<f64>], grid: &[f64], n: usize, rep: usize) -> ReplicateRecord {
    let seed = replicate_seed(config.seed, n, rep);
    let mut rng = replicate_rng(config.seed, n, rep);
    let data = simulate_from(&simulation_truth(), n, config.sigma0_sq, &mut rng);
    let outcomes = config
        .methods
        .iter()
        .map(|method| {
            let attempt = data.as_ref().map_err(|e| e.to_string()).and_then(|d| {
                let (fit, tuning) = tune_and_fit(method, d, &config.lambda_grid).map_err(|e| e.to_string())?;
                let errs = config
                    .derivative_orders
                    .iter()
                    .zip(truth_grid)
                    .map(|(&k, truth)| {
                        let est = fit.posterior_mean_grid(k, grid).map_err(|e| e.to_string())?;
                        let r = rmse(&est, truth).map_err(|e| e.to_string())?;
                        if r.is_finite() {
                            Ok(r)
                        } else {
                            Err(format!("non-finite RMSE for order {k}"))
                        }
                    })
                    .collect::<std::result::Result<Vec<f64>, String>>()?;
                Ok((tuning, errs))
            });
            match attempt {
                Ok((tuning, errs)) => MethodOutcome {
                    method: method.label(),
                    tuning: Some(tuning),
                    rmse: errs,
                    error: None,
                },
                Err(e) => MethodOutcome {
                    method: method.label(),
                    tuning: None,
                    rmse: Vec::new(),
                    error: Some(e),
                },
            }
        })
        .collect();
    ReplicateRecord { n, rep, seed, outcomes }
}

/// Runs every (n, replicate, method) combination on `threads` workers.
///
/// Replicates draw from independent streams and results are gathered in
/// index order, so the output does not depend on the worker count.
pub fn replicate_study(config: &StudyConfig, threads: usize) -> Result<StudyResult> {
    config.validate()?;
    let pool = worker_pool(threads)?;
    let truth = simulation_truth();
    let grid = evaluation_grid(config.grid_points);
    let truth_grid = config
        .derivative_orders
        .iter()
        .map(|&k| truth.eval_many(k, &grid))
        .collect::<gpreg::Result<Vec<_>>>()?;
    let mut replicates = Vec::new();
    for &n in &config.n_values {
        let batch: Vec<ReplicateRecord> = pool.install(|| {
            (0..config.replications)
                .into_par_iter()
                .map(|rep| run_replicate(config, &truth_grid, &grid, n, rep))
                .collect()
        });
        replicates.extend(batch);
    }
    let summaries = summarize(config, &replicates)?;
    Ok(StudyResult {
        config: config.clone(),
        summaries,
        replicates,
    })
}

fn summarize(config: &StudyConfig, replicates: &[ReplicateRecord]) -> Result<Vec<CellSummary>> {
    let mut out = Vec::new();
    for (mi, method) in config.methods.iter().enumerate() {
        let label = method.label();
        for &n in &config.n_values {
            let cell: Vec<&MethodOutcome> = replicates.iter().filter(|r| r.n == n).map(|r| &r.outcomes[mi]).collect();
            let ok: Vec<&MethodOutcome> = cell.iter().copied().filter(|o| o.error.is_none()).collect();
            let failures = cell.len() - ok.len();
            if failures as f64 > MAX_FAILURE_SHARE * cell.len() as f64 || ok.is_empty() {
                return Err(ExperimentError::FailureRate {
                    method: label,
                    n,
                    failures,
                    reps: cell.len(),
                });
            }
            for (oi, &order) in config.derivative_orders.iter().enumerate() {
                let values: Vec<f64> = ok.iter().map(|o| o.rmse[oi]).collect();
                let (mean, median, se) = describe(&values);
                out.push(CellSummary {
                    method: label.clone(),
                    n,
                    order,
                    mean,
                    median,
                    se,
                    reps: values.len(),
                    failures,
                });
            }
        }
    }
    Ok(out)
}

impl StudyResult {
    pub fn summary(&self, method: &str, n: usize, order: u32) -> Option<&CellSummary> {
        self.summaries
            .iter()
            .find(|s| s.method == method && s.n == n && s.order == order)
    }

    /// Columns `method,n,order,mean,median,se,reps,failures`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,n,order,mean,median,se,reps,failures\n");
        for s in &self.summaries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.method,
                s.n,
                s.order,
                fmt_num(s.mean),
                fmt_num(s.median),
                fmt_num(s.se),
                s.reps,
                s.failures
            ));
        }
        out
    }

    /// Per-replicate seeds, chosen hyperparameters and failures.
    pub fn replicates_json(&self) -> serde_json::Value {
        serde_json::to_value(&self.replicates).expect("replicate records serialize")
    }
}
