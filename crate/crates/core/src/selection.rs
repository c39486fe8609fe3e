//! Empirical-Bayes hyperparameter selection and leave-one-out cross-validation.
//!
//! Under the prior the marginal law is `Y ~ N(0, sigma^2 ((n lambda)^{-1} K + I))`.
//! Grid searches reuse one reduction of `K(X, X)` per kernel: a tridiagonal
//! form for the profile likelihood (`O(n)` per `lambda`) and a full
//! eigendecomposition for LOO (`O(n^2)` per `lambda`).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::export::csv_table;
use crate::kernel::Kernel;
use crate::linalg::{Factor, GramSpectrum, Tridiagonal};
use crate::posterior::Dataset;
use crate::scalar::Real;

/// Matérn smoothness menu searched by cross-validation.
pub const DEFAULT_NU_MENU: [f64; 5] = [2.0, 2.5, 3.0, 3.5, 4.0];
pub const DEFAULT_LAMBDA_MIN: f64 = 1e-8;
pub const DEFAULT_LAMBDA_MAX: f64 = 1.0;
pub const DEFAULT_LAMBDA_COUNT: usize = 30;

/// `m` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid<T: Real>(lo: T, hi: T, m: usize) -> Vec<T> {
    if m == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let d = T::from_usize_lossy(m - 1);
    (0..m)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == m - 1 {
                hi
            } else {
                (a + (b - a) * T::from_usize_lossy(j) / d).exp()
            }
        })
        .collect()
}

/// The default regularization grid: 30 log-spaced points on `[1e-8, 1]`.
pub fn default_lambda_grid<T: Real>() -> Vec<T> {
    log_grid(
        T::lit(DEFAULT_LAMBDA_MIN),
        T::lit(DEFAULT_LAMBDA_MAX),
        DEFAULT_LAMBDA_COUNT,
    )
}

fn check_lambda<T: Real>(lambda: T) -> Result<()> {
    if lambda > T::zero() && lambda.is_finite_real() {
        Ok(())
    } else {
        Err(GpError::Contract(format!("lambda must be positive, got {lambda}")))
    }
}

/// `(n lambda)^{-1} K(X, X) + I`.
fn marginal_matrix<T: Real>(kernel: &Kernel<T>, data: &Dataset<T>, lambda: T) -> Result<DMatrix<T>> {
    let n = data.len();
    let mut a = kernel.gram(data.x(), 0, 0)? / (T::from_usize_lossy(n) * lambda);
    for i in 0..n {
        a[(i, i)] += T::one();
    }
    Ok(a)
}

/// Exact Gaussian log-density of `Y` under the marginal law.
pub fn log_marginal_likelihood<T: Real>(kernel: &Kernel<T>, data: &Dataset<T>, lambda: T, sigma2: T) -> Result<T> {
    check_lambda(lambda)?;
    if !(sigma2 > T::zero()) {
        return Err(GpError::Contract(format!("sigma2 must be positive, got {sigma2}")));
    }
    let factor = Factor::new(marginal_matrix(kernel, data, lambda)?, "marginal likelihood")?;
    let y = DVector::from_column_slice(data.y());
    let quad = y.dot(&factor.solve(&y));
    let n = T::from_usize_lossy(data.len());
    Ok(-(quad / sigma2 + factor.ln_det() + n * (T::TAU() * sigma2).ln()) * T::lit(0.5))
}

/// Maximum marginal likelihood noise variance `lambda Y^T (K + n lambda I)^{-1} Y`.
pub fn mmle_sigma2<T: Real>(kernel: &Kernel<T>, data: &Dataset<T>, lambda: T) -> Result<T> {
    check_lambda(lambda)?;
    let n = data.len();
    let mut a = kernel.gram(data.x(), 0, 0)?;
    let shift = T::from_usize_lossy(n) * lambda;
    for i in 0..n {
        a[(i, i)] += shift;
    }
    let factor = Factor::new(a, "noise variance estimate")?;
    let y = DVector::from_column_slice(data.y());
    Ok(lambda * y.dot(&factor.solve(&y)))
}

/// Profile marginal likelihood as a function of `lambda`.
pub trait ProfileLikelihood<T: Real> {
    /// `lambda Y^T (K + n lambda I)^{-1} Y`.
    fn sigma2(&self, lambda: T) -> Option<T>;
    /// Log marginal likelihood at `(lambda, sigma2)`.
    fn log_likelihood(&self, lambda: T, sigma2: T) -> Option<T>;
    /// `(sigma2_hat, log likelihood at sigma2_hat)`.
    fn profile(&self, lambda: T) -> Option<(T, T)> {
        let s2 = self.sigma2(lambda)?;
        Some((s2, self.log_likelihood(lambda, s2)?))
    }
}

/// Tridiagonal reduction of `K(X, X)` with the rotated responses.
#[derive(Debug, Clone)]
pub struct TridiagonalProfile<T: Real> {
    tri: Tridiagonal<T>,
}

impl<T: Real> TridiagonalProfile<T> {
    pub fn new(kernel: &Kernel<T>, data: &Dataset<T>) -> Result<Self> {
        Ok(TridiagonalProfile {
            tri: Tridiagonal::new(kernel.gram(data.x(), 0, 0)?, data.y())?,
        })
    }
}

impl<T: Real> ProfileLikelihood<T> for TridiagonalProfile<T> {
    fn sigma2(&self, lambda: T) -> Option<T> {
        let c = T::from_usize_lossy(self.tri.dim()) * lambda;
        self.tri.shifted(c).map(|(q, _)| lambda * q)
    }

    fn log_likelihood(&self, lambda: T, sigma2: T) -> Option<T> {
        let n = T::from_usize_lossy(self.tri.dim());
        let c = n * lambda;
        let (quad, ln_det_shifted) = self.tri.shifted(c)?;
        // log det((n lambda)^{-1} K + I) = log det(K + c I) - n log c
        let ln_det = ln_det_shifted - n * c.ln();
        Some(-(c * quad / sigma2 + ln_det + n * (T::TAU() * sigma2).ln()) * T::lit(0.5))
    }
}

/// Eigendecomposition of `K(X, X)` together with the rotated responses.
#[derive(Debug, Clone)]
pub struct SpectralProfile<T: Real> {
    spectrum: GramSpectrum<T>,
    z: DVector<T>,
    y: DVector<T>,
}

impl<T: Real> SpectralProfile<T> {
    pub fn new(kernel: &Kernel<T>, data: &Dataset<T>) -> Result<Self> {
        let spectrum = GramSpectrum::new(kernel.gram(data.x(), 0, 0)?)?;
        let y = DVector::from_column_slice(data.y());
        Ok(SpectralProfile {
            z: spectrum.rotate(&y),
            spectrum,
            y,
        })
    }

    fn n(&self) -> T {
        T::from_usize_lossy(self.y.len())
    }

    /// LOO residuals `(y_i - f_hat(x_i)) / (1 - H_ii)` for the smoother
    /// `H = K (K + c I)^{-1}`; `None` when some `H_ii` is numerically one.
    pub fn loo_residuals(&self, c: T) -> Option<Vec<T>> {
        let u = &self.spectrum.vectors;
        let shrink: Vec<T> = self.spectrum.values.iter().map(|s| *s / (*s + c)).collect();
        let scaled = DVector::from_iterator(self.z.len(), self.z.iter().zip(&shrink).map(|(z, h)| *z * *h));
        let fitted = u * scaled;
        let n = self.y.len();
        let mut out = Vec::with_capacity(n);
        let limit = T::one() - T::lit(1e-12);
        for i in 0..n {
            let hii: T = (0..n).map(|j| u[(i, j)] * u[(i, j)] * shrink[j]).sum();
            if hii >= limit {
                return None;
            }
            out.push((self.y[i] - fitted[i]) / (T::one() - hii));
        }
        Some(out)
    }
}

impl<T: Real> ProfileLikelihood<T> for SpectralProfile<T> {
    fn sigma2(&self, lambda: T) -> Option<T> {
        let c = self.n() * lambda;
        let q: T = self
            .z
            .iter()
            .zip(self.spectrum.values.iter())
            .map(|(z, s)| *z * *z / (*s + c))
            .sum();
        Some(lambda * q)
    }

    fn log_likelihood(&self, lambda: T, sigma2: T) -> Option<T> {
        let n = self.n();
        let c = n * lambda;
        let mut quad = T::zero();
        let mut ln_det = T::zero();
        for (z, s) in self.z.iter().zip(self.spectrum.values.iter()) {
            quad += *z * *z / (*s + c);
            ln_det += (T::one() + *s / c).ln();
        }
        // Y^T ((n lambda)^{-1} K + I)^{-1} Y = n lambda Y^T (K + n lambda I)^{-1} Y
        Some(-(c * quad / sigma2 + ln_det + n * (T::TAU() * sigma2).ln()) * T::lit(0.5))
    }
}

/// Which criterion produced a selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    /// Profile log marginal likelihood (larger is better).
    MarginalLikelihood,
    /// Negated mean squared LOO residual (larger is better).
    LooCv,
}

/// One evaluated grid point; `score` is `None` when the candidate failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate<T> {
    pub nu: Option<T>,
    pub lambda: T,
    pub score: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult<T> {
    pub criterion: Criterion,
    pub lambda: T,
    pub sigma2: T,
    pub nu: Option<T>,
    pub score: T,
    pub score_trace: Vec<ScoredCandidate<T>>,
    /// The chosen `lambda` is an endpoint of a grid with more than one point.
    pub at_boundary: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> SelectionResult<T> {
    /// Trace as `nu,lambda,score` rows (`nu` and failed scores written as NaN).
    pub fn trace_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .score_trace
            .iter()
            .map(|c| {
                vec![
                    c.nu.map_or(f64::NAN, |v| v.as_f64()),
                    c.lambda.as_f64(),
                    c.score.map_or(f64::NAN, |v| v.as_f64()),
                ]
            })
            .collect();
        csv_table(&["nu", "lambda", "score"], &rows)
    }

    /// JSON object with the chosen hyperparameters.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "criterion": self.criterion,
            "lambda": self.lambda.as_f64(),
            "sigma2": self.sigma2.as_f64(),
            "nu": self.nu.map(|v| v.as_f64()),
            "score": self.score.as_f64(),
            "at_boundary": self.at_boundary,
            "warnings": self.warnings,
        })
    }
}

/// Index of the best finite score; ties go to the smaller `lambda`.
fn argmax<T: Real>(trace: &[ScoredCandidate<T>]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in trace.iter().enumerate() {
        let Some(s) = c.score else { continue };
        best = match best {
            None => Some(i),
            Some(b) => {
                let sb = trace[b].score.unwrap();
                if s > sb || (s == sb && c.lambda < trace[b].lambda) {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(GpError::Contract("lambda grid is empty".into()));
    }
    grid.iter().try_for_each(|l| check_lambda(*l))
}

fn boundary_flag<T: Real>(grid: &[T], lambda: T) -> bool {
    if grid.len() < 2 {
        return false;
    }
    let lo = grid.iter().copied().fold(grid[0], |a, b| if b < a { b } else { a });
    let hi = grid.iter().copied().fold(grid[0], |a, b| if b > a { b } else { a });
    lambda == lo || lambda == hi
}

/// Empirical-Bayes choice of `lambda` by the profile marginal likelihood.
pub fn select_lambda<T: Real>(kernel: &Kernel<T>, data: &Dataset<T>, grid: &[T]) -> Result<SelectionResult<T>> {
    check_grid(grid)?;
    let profile = TridiagonalProfile::new(kernel, data)?;
    select_lambda_with(&profile, grid)
}

/// As [`select_lambda`], reusing a precomputed profile.
pub fn select_lambda_with<T: Real, P: ProfileLikelihood<T> + ?Sized>(profile: &P, grid: &[T]) -> Result<SelectionResult<T>> {
    check_grid(grid)?;
    let trace: Vec<ScoredCandidate<T>> = grid
        .iter()
        .map(|&lambda| {
            let score = profile
                .profile(lambda)
                .filter(|(s2, ll)| *s2 > T::zero() && ll.is_finite_real())
                .map(|(_, ll)| ll);
            ScoredCandidate {
                nu: None,
                lambda,
                score,
            }
        })
        .collect();
    let best = argmax(&trace).ok_or_else(|| {
        GpError::Selection("every lambda candidate failed (is Y identically zero?)".into())
    })?;
    let lambda = trace[best].lambda;
    let at_boundary = boundary_flag(grid, lambda);
    let mut warnings = Vec::new();
    if at_boundary {
        warnings.push(format!("selected lambda {lambda} is a grid endpoint; consider widening the grid"));
    }
    Ok(SelectionResult {
        criterion: Criterion::MarginalLikelihood,
        lambda,
        sigma2: profile.sigma2(lambda).expect("scored candidate"),
        nu: None,
        score: trace[best].score.unwrap(),
        score_trace: trace,
        at_boundary,
        warnings,
    })
}

/// Leave-one-out cross-validation over Matérn smoothness and `lambda`.
///
/// Each candidate is scored by minus the mean squared LOO residual of the
/// linear smoother `K (K + n lambda I)^{-1}`, with the ridge `n lambda`
/// held fixed when a point is left out. The returned `sigma2` is the MMLE
/// at the chosen pair.
pub fn loocv_select<T: Real>(data: &Dataset<T>, nu_candidates: &[T], grid: &[T]) -> Result<SelectionResult<T>> {
    if nu_candidates.is_empty() {
        return Err(GpError::Contract("nu candidate set is empty".into()));
    }
    check_grid(grid)?;
    let n = T::from_usize_lossy(data.len());
    let mut trace = Vec::with_capacity(nu_candidates.len() * grid.len());
    let mut warnings = Vec::new();
    let mut profiles = Vec::with_capacity(nu_candidates.len());
    for &nu in nu_candidates {
        let kernel = Kernel::matern(nu)?;
        let profile = match SpectralProfile::new(&kernel, data) {
            Ok(p) => p,
            Err(e) => {
                warnings.push(format!("nu={nu} skipped: {e}"));
                trace.extend(grid.iter().map(|&lambda| ScoredCandidate {
                    nu: Some(nu),
                    lambda,
                    score: None,
                }));
                profiles.push(None);
                continue;
            }
        };
        for &lambda in grid {
            let score = match profile.loo_residuals(n * lambda) {
                Some(r) => {
                    let mse = r.iter().map(|e| *e * *e).sum::<T>() / n;
                    mse.is_finite_real().then_some(-mse)
                }
                None => {
                    warnings.push(format!("nu={nu}, lambda={lambda} skipped: leverage numerically one"));
                    None
                }
            };
            trace.push(ScoredCandidate {
                nu: Some(nu),
                lambda,
                score,
            });
        }
        profiles.push(Some(profile));
    }
    let best = argmax(&trace).ok_or_else(|| GpError::Selection("every (nu, lambda) candidate failed".into()))?;
    let chosen = &trace[best];
    let nu_index = best / grid.len();
    let profile = profiles[nu_index].as_ref().expect("scored candidates have a profile");
    let at_boundary = boundary_flag(grid, chosen.lambda);
    if at_boundary {
        warnings.push(format!(
            "selected lambda {} is a grid endpoint; consider widening the grid",
            chosen.lambda
        ));
    }
    Ok(SelectionResult {
        criterion: Criterion::LooCv,
        lambda: chosen.lambda,
        sigma2: profile.sigma2(chosen.lambda).expect("scored candidate"),
        nu: chosen.nu,
        score: chosen.score.unwrap(),
        score_trace: trace.clone(),
        at_boundary,
        warnings,
    })
}
