//! Series-represented functions, function-class norms, the population
//! regularized approximation `f_lambda`, effective dimensions and the
//! theoretical rate schedules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::basis::BasisId;
use crate::error::{GpError, Result};
use crate::kernel::EigenSequence;
use crate::scalar::Real;

/// Relative tail tolerance at which adaptive sums stop growing.
pub const TAIL_TOLERANCE: f64 = 1e-6;
/// Hard cap on terms for scalar effective-dimension sums.
pub const MAX_TERMS: usize = 1_000_000;
/// Cap on terms used in grid-supremum computations.
pub const GRID_TERMS_CAP: usize = 20_000;
/// Default grid size for supremum computations.
pub const DEFAULT_GRID: usize = 1001;

/// A function `sum_i f_i phi_i` on a declared orthonormal basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesFunction<T> {
    pub basis: BasisId,
    pub coeffs: Vec<T>,
}

/// Function class with its weighted absolute-coefficient norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum FunctionSpace<T> {
    /// `sum_i i^alpha |f_i|`.
    Holder { alpha: T },
    /// `sum_i e^{gamma i} |f_i|`.
    Analytic { gamma: T },
}

impl<T: Real> SeriesFunction<T> {
    pub fn new(basis: BasisId, coeffs: Vec<T>) -> Self {
        SeriesFunction { basis, coeffs }
    }

    /// `sum_i f_i phi_i^{(k)}(x)`.
    pub fn eval(&self, k: u32, x: T) -> Result<T> {
        if x < T::zero() || x > T::one() {
            return Err(GpError::Domain {
                x: x.as_f64(),
                lo: 0.0,
                hi: 1.0,
            });
        }
        let mut row = vec![T::zero(); self.coeffs.len()];
        self.basis.fill_row(k, x, &mut row);
        Ok(row.iter().zip(&self.coeffs).map(|(p, c)| *p * *c).sum())
    }

    /// Evaluates on every point of `xs`.
    pub fn eval_many(&self, k: u32, xs: &[T]) -> Result<Vec<T>> {
        xs.iter().map(|&x| self.eval(k, x)).collect()
    }

    /// Weighted absolute-coefficient norm over the stored coefficients.
    pub fn space_norm(&self, space: FunctionSpace<T>) -> T {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let i = T::from_usize_lossy(j + 1);
                let w = match space {
                    FunctionSpace::Holder { alpha } => i.powf(alpha),
                    FunctionSpace::Analytic { gamma } => (gamma * i).exp(),
                };
                w * c.abs()
            })
            .sum()
    }

    /// `f_lambda = (L_K + lambda I)^{-1} L_K f`, coefficientwise `f_i mu_i / (lambda + mu_i)`.
    ///
    /// The eigensystem is assumed to live on `self.basis`. Coefficients
    /// beyond an explicit eigenvalue list map to zero.
    pub fn f_lambda(&self, eig: &EigenSequence<T>, lambda: T) -> Result<Self> {
        if lambda < T::zero() {
            return Err(GpError::Contract(format!("lambda must be nonnegative, got {lambda}")));
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let mu = eig.mu(j + 1);
                if mu == T::zero() {
                    T::zero()
                } else {
                    *c * (mu / (lambda + mu))
                }
            })
            .collect();
        Ok(SeriesFunction {
            basis: self.basis,
            coeffs,
        })
    }

    /// Coefficientwise difference `self - other` (same basis).
    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.basis != other.basis {
            return Err(GpError::Contract("series live on different bases".into()));
        }
        let n = self.coeffs.len().max(other.coeffs.len());
        let get = |v: &Vec<T>, j: usize| v.get(j).copied().unwrap_or_else(T::zero);
        Ok(SeriesFunction {
            basis: self.basis,
            coeffs: (0..n).map(|j| get(&self.coeffs, j) - get(&other.coeffs, j)).collect(),
        })
    }
}

/// A truncated nonnegative series with its tail diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSum<T> {
    /// Partial sum over `terms` terms.
    pub value: T,
    pub terms: usize,
    /// Upper bound on the dropped tail; `None` when the series diverges.
    pub tail_bound: Option<T>,
}

impl<T: Real> SeriesSum<T> {
    pub fn divergent(&self) -> bool {
        self.tail_bound.is_none()
    }

    /// Tail fell below the relative tolerance.
    pub fn converged(&self) -> bool {
        self.tail_bound
            .is_some_and(|t| t <= T::lit(TAIL_TOLERANCE) * self.value)
    }
}

/// Effective-dimension diagnostics at one regularization level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveDims<T> {
    pub lambda: T,
    /// Grid supremum of `K~(x, x)`.
    pub kappa_tilde_sq: T,
    /// `sum_i i nu_i`.
    pub kappa_hat_01_sq: SeriesSum<T>,
    /// Grid supremum of `sum_i nu_i phi_i^{(k)}(x)^2` per order.
    pub kappa_tilde_kk_sq: BTreeMap<u32, T>,
    /// Analytic bound `C_phi^2 sum_i nu_i omega_i^{2k}` per order.
    pub kappa_tilde_kk_bound: BTreeMap<u32, SeriesSum<T>>,
    /// `sum_i i^{2k+2} nu_i` per order.
    pub kappa_hat_k1_sq: BTreeMap<u32, SeriesSum<T>>,
    /// Terms used by the grid computations.
    pub truncation: usize,
    /// Largest tail bound over the grid computations (`None` if any diverged).
    pub tail_bound: Option<T>,
    pub grid_size: usize,
}

/// `nu_i = mu_i / (lambda + mu_i)` for `i = 1..=n`.
fn equivalent_eigenvalues<T: Real>(eig: &EigenSequence<T>, lambda: T, n: usize) -> Vec<T> {
    eig.head(n).into_iter().map(|m| m / (lambda + m)).collect()
}

/// Adaptive `sum_i w_i nu_i`, where `weight(i)` is the weight and `tail(n)`
/// bounds `sum_{i>n} w_i mu_i` (so the dropped part is at most `tail / lambda`).
fn adaptive_sum<T: Real>(
    eig: &EigenSequence<T>,
    lambda: T,
    cap: usize,
    weight: impl Fn(usize) -> T,
    tail: impl Fn(usize) -> Option<T>,
) -> SeriesSum<T> {
    let tol = T::lit(TAIL_TOLERANCE);
    let limit = eig.len().map_or(cap, |l| l.min(cap));
    let mut acc = T::zero();
    let mut done = 0usize;
    let mut target = 256usize.min(limit);
    loop {
        for i in done + 1..=target {
            let mu = eig.mu(i);
            acc += weight(i) * (mu / (lambda + mu));
        }
        done = target;
        let t = if eig.len().is_some_and(|l| done >= l) {
            Some(T::zero())
        } else {
            tail(done).map(|t| t / lambda)
        };
        match t {
            None => {
                return SeriesSum {
                    value: acc,
                    terms: done,
                    tail_bound: None,
                }
            }
            Some(t) if t <= tol * acc || done >= limit => {
                return SeriesSum {
                    value: acc,
                    terms: done,
                    tail_bound: Some(t),
                }
            }
            _ => target = (done * 2).min(limit),
        }
    }
}

/// Effective dimensions of the equivalent kernel at `lambda`.
///
/// `orders` lists the derivative orders `k` for which `kappa~_kk^2`,
/// its analytic bound and `kappa^_{k+1,k+1}^2` are reported; order 0 is
/// always computed for `kappa~^2`.
pub fn effective_dims<T: Real>(
    eig: &EigenSequence<T>,
    basis: BasisId,
    lambda: T,
    orders: &[u32],
    grid_size: usize,
) -> Result<EffectiveDims<T>> {
    if !(lambda > T::zero()) {
        return Err(GpError::Contract(format!("lambda must be positive, got {lambda}")));
    }
    if grid_size < 2 {
        return Err(GpError::Contract("grid_size must be at least 2".into()));
    }
    let c2 = basis.sup_bound::<T>().powi(2);
    let pi = T::PI();

    let kappa_hat_01_sq = adaptive_sum(
        eig,
        lambda,
        MAX_TERMS,
        |i| T::from_usize_lossy(i),
        |n| eig.weighted_tail(n, 1),
    );

    let mut all_orders: Vec<u32> = orders.to_vec();
    all_orders.push(0);
    all_orders.sort_unstable();
    all_orders.dedup();

    let mut kappa_tilde_kk_sq = BTreeMap::new();
    let mut kappa_tilde_kk_bound = BTreeMap::new();
    let mut kappa_hat_k1_sq = BTreeMap::new();
    let mut truncation = 0usize;
    let mut worst_tail = Some(T::zero());

    for &k in &all_orders {
        // omega_i <= pi i for both bases
        let bound = adaptive_sum(
            eig,
            lambda,
            MAX_TERMS,
            |i| c2 * basis.derivative_growth::<T>(i, k).powi(2),
            |n| eig.weighted_tail(n, 2 * k).map(|t| c2 * pi.powi(2 * k as i32) * t),
        );
        let grid_terms = adaptive_sum(
            eig,
            lambda,
            GRID_TERMS_CAP,
            |i| c2 * basis.derivative_growth::<T>(i, k).powi(2),
            |n| eig.weighted_tail(n, 2 * k).map(|t| c2 * pi.powi(2 * k as i32) * t),
        );
        let sup = grid_sup(eig, basis, lambda, k, grid_terms.terms, grid_size);
        truncation = truncation.max(grid_terms.terms);
        worst_tail = match (worst_tail, grid_terms.tail_bound) {
            (Some(a), Some(b)) => Some(if b > a { b } else { a }),
            _ => None,
        };
        kappa_tilde_kk_sq.insert(k, sup);
        kappa_tilde_kk_bound.insert(k, bound);
    }
    for &k in orders {
        let p = 2 * k + 2;
        let s = adaptive_sum(
            eig,
            lambda,
            MAX_TERMS,
            |i| T::from_usize_lossy(i).powi(p as i32),
            |n| eig.weighted_tail(n, p),
        );
        kappa_hat_k1_sq.insert(k, s);
    }

    Ok(EffectiveDims {
        lambda,
        kappa_tilde_sq: kappa_tilde_kk_sq[&0],
        kappa_hat_01_sq,
        kappa_tilde_kk_sq: kappa_tilde_kk_sq
            .into_iter()
            .filter(|(k, _)| orders.contains(k))
            .collect(),
        kappa_tilde_kk_bound: kappa_tilde_kk_bound
            .into_iter()
            .filter(|(k, _)| orders.contains(k))
            .collect(),
        kappa_hat_k1_sq,
        truncation,
        tail_bound: worst_tail,
        grid_size,
    })
}

/// `max_x sum_{i <= n} nu_i phi_i^{(k)}(x)^2` over an inclusive equispaced grid.
fn grid_sup<T: Real>(
    eig: &EigenSequence<T>,
    basis: BasisId,
    lambda: T,
    k: u32,
    n: usize,
    grid_size: usize,
) -> T {
    let nu = equivalent_eigenvalues(eig, lambda, n);
    let mut row = vec![T::zero(); nu.len()];
    let mut best = T::zero();
    let denom = T::from_usize_lossy(grid_size - 1);
    for t in 0..grid_size {
        let x = T::from_usize_lossy(t) / denom;
        basis.fill_row(k, x, &mut row);
        let v: T = row.iter().zip(&nu).map(|(p, w)| *w * *p * *p).sum();
        if v > best {
            best = v;
        }
    }
    best
}

/// `C(n, kappa) = kappa^2 sqrt(20 log n)/sqrt(n) * (4 + 4 kappa sqrt(20 log n) / (3 sqrt(n)))`.
///
/// Noise-free error bounds apply once this is at most 1/2.
pub fn bound_constant<T: Real>(n: usize, kappa_tilde: T) -> Result<T> {
    if n < 2 {
        return Err(GpError::Contract("bound_constant needs n >= 2".into()));
    }
    if !(kappa_tilde > T::zero()) {
        return Err(GpError::Contract("kappa must be positive".into()));
    }
    let nf = T::from_usize_lossy(n);
    let root = (T::lit(20.0) * nf.ln()).sqrt() / nf.sqrt();
    let four = T::lit(4.0);
    Ok(kappa_tilde * kappa_tilde * root * (four + four * kappa_tilde * root / T::lit(3.0)))
}

/// Regularization level and target rate for a function class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule<T> {
    pub lambda: T,
    pub eps: T,
    /// Exponent `a` in `lambda = (log n / n)^a` (or `1` for `1/n`).
    pub lambda_exponent: T,
    /// Exponent `b` in `eps = (log n / n)^b`; analytic classes report `1/2`.
    pub eps_exponent: T,
    /// Set when the derivative order is outside the guaranteed range.
    pub warning: Option<String>,
}

/// Rate-optimal `lambda_n` and `eps_n` with unit constants.
///
/// Hölder(alpha): `lambda = (log n/n)^{2a/(2a+1)}`, `eps = (log n/n)^{(a-k)/(2a+1)}`.
/// Analytic: `lambda = 1/n`, `eps = log n / sqrt(n)` (k = 0 only).
pub fn rate_schedule<T: Real>(class: FunctionSpace<T>, k: u32, n: usize) -> Result<RateSchedule<T>> {
    if n < 2 {
        return Err(GpError::Contract("rate_schedule needs n >= 2".into()));
    }
    let nf = T::from_usize_lossy(n);
    let kf = T::from_u32(k).unwrap();
    match class {
        FunctionSpace::Holder { alpha } => {
            if !(alpha > T::lit(0.5)) {
                return Err(GpError::Contract(format!("Hölder class needs alpha > 1/2, got {alpha}")));
            }
            if kf >= alpha {
                return Err(GpError::Contract(format!(
                    "derivative order {k} is not below the smoothness {alpha}"
                )));
            }
            let warning = (kf >= alpha - T::lit(1.5)).then(|| {
                format!("contraction guarantee needs k < alpha - 3/2 (k={k}, alpha={alpha})")
            });
            let base = nf.ln() / nf;
            let denom = alpha + alpha + T::one();
            let lambda_exponent = (alpha + alpha) / denom;
            let eps_exponent = (alpha - kf) / denom;
            Ok(RateSchedule {
                lambda: base.powf(lambda_exponent),
                eps: base.powf(eps_exponent),
                lambda_exponent,
                eps_exponent,
                warning,
            })
        }
        FunctionSpace::Analytic { gamma } => {
            if !(gamma > T::zero()) {
                return Err(GpError::Contract("analytic class needs gamma > 0".into()));
            }
            if k != 0 {
                return Err(GpError::Contract(
                    "analytic-class rates are only available for k = 0".into(),
                ));
            }
            Ok(RateSchedule {
                lambda: T::one() / nf,
                eps: nf.ln() / nf.sqrt(),
                lambda_exponent: T::one(),
                eps_exponent: T::lit(0.5),
                warning: None,
            })
        }
    }
}
