//! Exact Gaussian-process posteriors for a regression function and its
//! derivatives, path sampling and simultaneous credible bands.
//!
//! The prior is `f ~ GP(0, sigma^2 (n lambda)^{-1} K)` with Gaussian noise of
//! variance `sigma^2`, so the posterior mean coincides with kernel ridge
//! regression at level `lambda`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::export::csv_table;
use crate::kernel::Kernel;
use crate::linalg::{Factor, GramSpectrum};
use crate::scalar::Real;

/// Observations `(X_i, Y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(GpError::LengthMismatch {
                expected: x.len(),
                got: y.len(),
            });
        }
        if x.is_empty() {
            return Err(GpError::Contract("a dataset needs at least one observation".into()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite_real()) {
            return Err(GpError::Contract("dataset contains non-finite values".into()));
        }
        Ok(Dataset { x, y })
    }

    pub fn x(&self) -> &[T] {
        &self.x
    }

    pub fn y(&self) -> &[T] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Same design with new responses.
    pub fn with_y(&self, y: Vec<T>) -> Result<Self> {
        Dataset::new(self.x.clone(), y)
    }
}

fn check_hyper<T: Real>(lambda: T, sigma2: T) -> Result<()> {
    if !(lambda > T::zero()) || !lambda.is_finite_real() {
        return Err(GpError::Contract(format!("lambda must be positive, got {lambda}")));
    }
    if !(sigma2 > T::zero()) || !sigma2.is_finite_real() {
        return Err(GpError::Contract(format!("sigma2 must be positive, got {sigma2}")));
    }
    Ok(())
}

/// `K(X, X) + n lambda I`.
fn regularized_gram<T: Real>(kernel: &Kernel<T>, x: &[T], lambda: T) -> Result<DMatrix<T>> {
    let mut g = kernel.gram(x, 0, 0)?;
    let shift = T::from_usize_lossy(x.len()) * lambda;
    for i in 0..x.len() {
        g[(i, i)] += shift;
    }
    Ok(g)
}

/// A posterior conditioned on one dataset, with the factorization cached.
#[derive(Debug, Clone)]
pub struct FittedGp<T: Real> {
    kernel: Kernel<T>,
    lambda: T,
    sigma2: T,
    x: Vec<T>,
    factor: Factor<T>,
    weights: DVector<T>,
}

impl<T: Real> FittedGp<T> {
    /// Factors `K(X,X) + n lambda I` and solves for the weights.
    pub fn fit(kernel: &Kernel<T>, data: &Dataset<T>, lambda: T, sigma2: T) -> Result<Self> {
        check_hyper(lambda, sigma2)?;
        let a = regularized_gram(kernel, data.x(), lambda)?;
        let factor = Factor::new(a, "posterior fit")?;
        let y = DVector::from_column_slice(data.y());
        let weights = factor.solve(&y);
        if weights.iter().any(|w| !w.is_finite_real()) {
            return Err(GpError::numerical("posterior fit", "non-finite weights"));
        }
        Ok(FittedGp {
            kernel: kernel.clone(),
            lambda,
            sigma2,
            x: data.x().to_vec(),
            factor,
            weights,
        })
    }

    pub fn kernel(&self) -> &Kernel<T> {
        &self.kernel
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn design(&self) -> &[T] {
        &self.x
    }

    pub fn weights(&self) -> &DVector<T> {
        &self.weights
    }

    /// Diagonal jitter the factorization needed (zero in the usual case).
    pub fn jitter(&self) -> T {
        self.factor.jitter
    }

    /// Lower-triangular factor `L` with `L L^T = K + n lambda I (+ jitter)`.
    pub fn factor_lower(&self) -> DMatrix<T> {
        self.factor.lower()
    }

    fn n_lambda(&self) -> T {
        T::from_usize_lossy(self.x.len()) * self.lambda
    }

    /// `f_hat^{(k)}(x) = K_{k0}(x, X) (K + n lambda I)^{-1} Y`.
    pub fn posterior_mean(&self, k: u32, x: T) -> Result<T> {
        Ok(self.posterior_mean_grid(k, &[x])?[0])
    }

    pub fn posterior_mean_grid(&self, k: u32, grid: &[T]) -> Result<Vec<T>> {
        let kx = self.kernel.cross_gram(grid, k, &self.x, 0)?;
        Ok((kx * &self.weights).iter().copied().collect())
    }

    /// `sigma^2 (n lambda)^{-1} [K_kk(x, x') - K_k0(x, X)(K + n lambda I)^{-1} K_0k(X, x')]`.
    pub fn posterior_cov(&self, k: u32, x: T, xp: T) -> Result<T> {
        let a = self.kernel.cross_gram(&self.x, 0, &[x], k)?;
        let b = self.kernel.cross_gram(&self.x, 0, &[xp], k)?;
        let va = self.factor.solve_lower(&a);
        let vb = self.factor.solve_lower(&b);
        let prior = self.kernel.eval_deriv(k, k, x, xp)?;
        Ok(self.sigma2 / self.n_lambda() * (prior - va.dot(&vb)))
    }

    /// Posterior covariance matrix of `f^{(k)}` on a grid.
    pub fn posterior_cov_grid(&self, k: u32, grid: &[T]) -> Result<DMatrix<T>> {
        let b = self.kernel.cross_gram(&self.x, 0, grid, k)?;
        let v = self.factor.solve_lower(&b);
        let prior = self.kernel.gram(grid, k, k)?;
        let mut c = (prior - v.tr_mul(&v)) * (self.sigma2 / self.n_lambda());
        let g = grid.len();
        for a in 0..g {
            for bb in 0..a {
                let s = (c[(a, bb)] + c[(bb, a)]) * T::lit(0.5);
                c[(a, bb)] = s;
                c[(bb, a)] = s;
            }
        }
        Ok(c)
    }

    /// Pointwise posterior variances of `f^{(k)}` on a grid.
    pub fn posterior_var_grid(&self, k: u32, grid: &[T]) -> Result<Vec<T>> {
        let b = self.kernel.cross_gram(&self.x, 0, grid, k)?;
        let v = self.factor.solve_lower(&b);
        let scale = self.sigma2 / self.n_lambda();
        grid.iter()
            .enumerate()
            .map(|(j, &g)| {
                let prior = self.kernel.eval_deriv(k, k, g, g)?;
                Ok(scale * (prior - v.column(j).norm_squared()))
            })
            .collect()
    }

    /// Bias of the noise-free kernel ridge fit of `K_{0k}(., x')`, evaluated
    /// at `x` after `k` derivatives: `K_kk(x, x') - K_hat(x)`.
    ///
    /// Solved from a freshly assembled system by LU, independently of the
    /// cached factorization; `sigma^{-2} n lambda` times the posterior
    /// covariance equals this quantity.
    pub fn noise_free_bias(&self, k: u32, x: T, xp: T) -> Result<T> {
        let n = self.x.len();
        let shift = self.n_lambda();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = self.kernel.eval(self.x[i], self.x[j])?;
            }
            a[(i, i)] += shift;
        }
        let rhs = DVector::from_iterator(n, self.x.iter().map(|&xi| self.kernel.eval_deriv(0, k, xi, xp)).collect::<Result<Vec<_>>>()?);
        let w = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| GpError::numerical("noise-free fit", "singular system"))?;
        let mut fit = T::zero();
        for (i, &xi) in self.x.iter().enumerate() {
            fit += self.kernel.eval_deriv(k, 0, x, xi)? * w[i];
        }
        Ok(self.kernel.eval_deriv(k, k, x, xp)? - fit)
    }

    /// Draws `m` posterior paths of `f^{(k)}` on a grid; row `r` is one path.
    pub fn sample_paths<R: Rng + ?Sized>(&self, k: u32, grid: &[T], m: usize, rng: &mut R) -> Result<DMatrix<T>> {
        if m == 0 || grid.is_empty() {
            return Err(GpError::Contract("sample_paths needs m >= 1 and a nonempty grid".into()));
        }
        let mean = self.posterior_mean_grid(k, grid)?;
        let cov = self.posterior_cov_grid(k, grid)?;
        let factor = Factor::new(cov, "posterior path sampling")?;
        let l = factor.lower();
        let g = grid.len();
        let mut z = DMatrix::zeros(m, g);
        for r in 0..m {
            for j in 0..g {
                let v: f64 = rng.sample(StandardNormal);
                z[(r, j)] = T::lit(v);
            }
        }
        let mut draws = z * l.transpose();
        for r in 0..m {
            for j in 0..g {
                draws[(r, j)] += mean[j];
            }
        }
        Ok(draws)
    }

    /// Simultaneous `L_inf` credible band for `f^{(k)}` on a grid.
    pub fn credible_band<R: Rng + ?Sized>(
        &self,
        k: u32,
        grid: &[T],
        level: T,
        m: usize,
        rng: &mut R,
    ) -> Result<CredibleBand<T>> {
        if !(level > T::zero() && level < T::one()) {
            return Err(GpError::Contract(format!("band level must lie in (0, 1), got {level}")));
        }
        if m < 100 {
            return Err(GpError::Contract(format!("credible bands need at least 100 draws, got {m}")));
        }
        let center = self.posterior_mean_grid(k, grid)?;
        let draws = self.sample_paths(k, grid, m, rng)?;
        let mut sup_dev: Vec<T> = (0..m)
            .map(|r| {
                (0..grid.len()).fold(T::zero(), |acc, j| {
                    let d = (draws[(r, j)] - center[j]).abs();
                    if d > acc {
                        d
                    } else {
                        acc
                    }
                })
            })
            .collect();
        sup_dev.sort_by(|a, b| a.partial_cmp(b).expect("finite deviations"));
        let radius = sup_quantile(&sup_dev, level);
        Ok(CredibleBand {
            grid: grid.to_vec(),
            center,
            radius,
            level,
            sup_deviations: sup_dev,
        })
    }
}

/// Quantile of a sorted sample of a nonnegative variable, interpolating
/// linearly through the points `(0, 0)` and `(j/m, d_(j))`.
pub fn sup_quantile<T: Real>(sorted: &[T], level: T) -> T {
    let m = sorted.len();
    if m == 0 {
        return T::zero();
    }
    let t = level * T::from_usize_lossy(m);
    if t <= T::zero() {
        return T::zero();
    }
    if t >= T::from_usize_lossy(m) {
        return sorted[m - 1];
    }
    let lo = t.floor();
    let frac = t - lo;
    let j = lo.to_usize().unwrap_or(0);
    let below = if j == 0 { T::zero() } else { sorted[j - 1] };
    below + frac * (sorted[j] - below)
}

/// A fixed-width band `center +- radius` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CredibleBand<T> {
    pub grid: Vec<T>,
    pub center: Vec<T>,
    pub radius: T,
    pub level: T,
    /// Sorted `max_grid |draw - center|` over the Monte Carlo draws.
    pub sup_deviations: Vec<T>,
}

impl<T: Real> CredibleBand<T> {
    /// Radius at another level, reusing the same draws.
    pub fn radius_at(&self, level: T) -> T {
        sup_quantile(&self.sup_deviations, level)
    }

    /// Whether `values` (on the band grid) lie inside the band.
    pub fn contains(&self, values: &[T]) -> bool {
        values.len() == self.center.len()
            && values
                .iter()
                .zip(&self.center)
                .all(|(v, c)| (*v - *c).abs() <= self.radius)
    }
}

/// Kernel ridge regression by an independent route and its sup-grid
/// distance to the posterior mean.
///
/// The objective `n^{-1} |Y - K a|^2 + lambda a^T K a` decouples in the
/// eigenbasis of a pointwise-assembled `K`, giving coordinates
/// `z_j / (s_j + n lambda)`.
pub fn krr_check<T: Real>(kernel: &Kernel<T>, data: &Dataset<T>, lambda: T, grid: &[T]) -> Result<T> {
    check_hyper(lambda, T::one())?;
    let x = data.x();
    let n = x.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = kernel.eval(x[i], x[j])?;
        }
    }
    let spec = GramSpectrum::new(k)?;
    let y = DVector::from_column_slice(data.y());
    let coef = spec.solve_shifted(T::from_usize_lossy(n) * lambda, &y);
    let posterior = FittedGp::fit(kernel, data, lambda, T::one())?;
    let mean = posterior.posterior_mean_grid(0, grid)?;
    let mut worst = T::zero();
    for (g, m) in grid.iter().zip(mean) {
        let mut krr = T::zero();
        for i in 0..n {
            krr += kernel.eval(*g, x[i])? * coef[i];
        }
        let d = (krr - m).abs();
        if d > worst {
            worst = d;
        }
    }
    Ok(worst)
}

/// Posterior mean, variance and band per derivative order on one grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary<T> {
    pub grid: Vec<T>,
    pub orders: Vec<OrderSummary<T>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSummary<T> {
    pub k: u32,
    pub mean: Vec<T>,
    pub var: Vec<T>,
    pub band: CredibleBand<T>,
}

impl<T: Real> PosteriorSummary<T> {
    pub fn compute<R: Rng + ?Sized>(
        fit: &FittedGp<T>,
        orders: &[u32],
        grid: &[T],
        level: T,
        draws: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let orders = orders
            .iter()
            .map(|&k| {
                let band = fit.credible_band(k, grid, level, draws, rng)?;
                Ok(OrderSummary {
                    k,
                    mean: band.center.clone(),
                    var: fit.posterior_var_grid(k, grid)?,
                    band,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PosteriorSummary {
            grid: grid.to_vec(),
            orders,
        })
    }

    /// Columns `x, mean_k, var_k, band_lo_k, band_hi_k` for every order.
    pub fn to_csv(&self) -> String {
        let mut header = vec!["x".to_string()];
        for o in &self.orders {
            for c in ["mean", "var", "band_lo", "band_hi"] {
                header.push(format!("{c}_{}", o.k));
            }
        }
        let rows: Vec<Vec<f64>> = self
            .grid
            .iter()
            .enumerate()
            .map(|(j, x)| {
                let mut row = vec![x.as_f64()];
                for o in &self.orders {
                    let c = o.mean[j];
                    row.extend([
                        c.as_f64(),
                        o.var[j].as_f64(),
                        (c - o.band.radius).as_f64(),
                        (c + o.band.radius).as_f64(),
                    ]);
                }
                row
            })
            .collect();
        csv_table(&header, &rows)
    }
}

/// Inclusive equispaced grid of `m` points on `[lo, hi]`.
pub fn uniform_grid<T: Real>(lo: T, hi: T, m: usize) -> Vec<T> {
    match m {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let d = T::from_usize_lossy(m - 1);
            (0..m)
                .map(|t| {
                    if t == m - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * T::from_usize_lossy(t) / d
                    }
                })
                .collect()
        }
    }
}
