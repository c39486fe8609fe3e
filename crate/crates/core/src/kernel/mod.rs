//! Mercer kernels on a closed interval: closed-form families and spectral
//! (basis plus eigenvalue sequence) kernels, their cross-derivatives, Gram
//! assembly and the equivalent kernel.

mod eigen;
pub(crate) mod matern;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use self::eigen::EigenSequence;
use crate::basis::BasisId;
use crate::error::{GpError, Result};
use crate::scalar::Real;

/// Default number of retained terms for spectral kernels.
pub const DEFAULT_TRUNCATION: usize = 2000;

/// Derivative cap for kernels that are infinitely differentiable.
pub const SMOOTH_ORDER_CAP: u32 = 8;

/// Kernel family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum KernelFamily<T> {
    Matern {
        nu: T,
    },
    /// `exp(-(x - x')^2)`.
    SquaredExponential,
    /// `1 + x x' + min^2 (3 max - min) / 6`.
    Sobolev2,
    /// Truncated `sum_{i <= truncation} mu_i phi_i(x) phi_i(x')`.
    Spectral {
        basis: BasisId,
        eigenvalues: EigenSequence<T>,
        truncation: usize,
    },
}

/// A Mercer kernel together with its domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct Kernel<T> {
    pub family: KernelFamily<T>,
    #[serde(default = "unit_domain")]
    pub domain: (T, T),
}

fn unit_domain<T: Real>() -> (T, T) {
    (T::zero(), T::one())
}

impl<T: Real> Kernel<T> {
    pub fn new(family: KernelFamily<T>) -> Result<Self> {
        let k = Kernel {
            family,
            domain: unit_domain(),
        };
        k.validate()?;
        Ok(k)
    }

    pub fn matern(nu: T) -> Result<Self> {
        Self::new(KernelFamily::Matern { nu })
    }

    pub fn squared_exponential() -> Self {
        Kernel {
            family: KernelFamily::SquaredExponential,
            domain: unit_domain(),
        }
    }

    pub fn sobolev2() -> Self {
        Kernel {
            family: KernelFamily::Sobolev2,
            domain: unit_domain(),
        }
    }

    pub fn spectral(basis: BasisId, eigenvalues: EigenSequence<T>, truncation: usize) -> Result<Self> {
        Self::new(KernelFamily::Spectral {
            basis,
            eigenvalues,
            truncation,
        })
    }

    pub fn with_domain(mut self, lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(GpError::Construction(format!("empty domain [{lo}, {hi}]")));
        }
        self.domain = (lo, hi);
        Ok(self)
    }

    /// Checks parameters; needed after deserialization.
    pub fn validate(&self) -> Result<()> {
        if !(self.domain.0 < self.domain.1) {
            return Err(GpError::Construction("empty domain".into()));
        }
        match &self.family {
            KernelFamily::Matern { nu } => {
                if !(*nu > T::zero()) || !nu.is_finite_real() {
                    return Err(GpError::Construction(format!(
                        "Matérn smoothness must be positive, got {nu}"
                    )));
                }
            }
            KernelFamily::Spectral {
                eigenvalues,
                truncation,
                ..
            } => {
                if *truncation == 0 {
                    return Err(GpError::Construction("spectral truncation must be >= 1".into()));
                }
                eigenvalues.validate()?;
            }
            _ => {}
        }
        Ok(())
    }

    pub fn name(&self) -> String {
        match &self.family {
            KernelFamily::Matern { nu } => format!("matern({nu})"),
            KernelFamily::SquaredExponential => "se".into(),
            KernelFamily::Sobolev2 => "sobolev2".into(),
            KernelFamily::Spectral {
                basis, truncation, ..
            } => format!("spectral({basis},N={truncation})"),
        }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.family, KernelFamily::Spectral { .. })
    }

    /// Largest `k` such that all mixed derivatives up to `(k, k)` exist.
    pub fn max_deriv_order(&self) -> u32 {
        match &self.family {
            KernelFamily::Matern { nu } => matern::max_order(nu.as_f64()),
            KernelFamily::SquaredExponential => SMOOTH_ORDER_CAP,
            KernelFamily::Sobolev2 => 1,
            KernelFamily::Spectral { eigenvalues, .. } => match eigenvalues {
                // sum mu_i i^{2k} converges iff 2 alpha - 2k > 1
                EigenSequence::Polynomial { alpha, .. } => {
                    let bound = alpha.as_f64() - 0.5;
                    ((bound.ceil() as i64) - 1).clamp(0, SMOOTH_ORDER_CAP as i64) as u32
                }
                _ => SMOOTH_ORDER_CAP,
            },
        }
    }

    /// Number of terms actually summed by a spectral kernel.
    pub fn retained_terms(&self) -> Option<usize> {
        match &self.family {
            KernelFamily::Spectral {
                eigenvalues,
                truncation,
                ..
            } => Some(eigenvalues.len().map_or(*truncation, |l| l.min(*truncation))),
            _ => None,
        }
    }

    /// Uniform bound on `|K_{jx,jy} - K^{(N)}_{jx,jy}|` from the dropped terms,
    /// `C_phi^2 sum_{i>N} mu_i (pi i)^{jx+jy}`. Zero for closed forms; `None`
    /// when the dropped series diverges.
    pub fn tail_bound(&self, jx: u32, jy: u32) -> Option<T> {
        match &self.family {
            KernelFamily::Spectral {
                basis,
                eigenvalues,
                truncation,
            } => {
                let p = jx + jy;
                let c2 = basis.sup_bound::<T>().powi(2);
                eigenvalues
                    .weighted_tail(*truncation, p)
                    .map(|t| c2 * T::PI().powi(p as i32) * t)
            }
            _ => Some(T::zero()),
        }
    }

    fn check_point(&self, x: T) -> Result<()> {
        let (lo, hi) = self.domain;
        if x >= lo && x <= hi {
            Ok(())
        } else {
            Err(GpError::Domain {
                x: x.as_f64(),
                lo: lo.as_f64(),
                hi: hi.as_f64(),
            })
        }
    }

    fn check_orders(&self, jx: u32, jy: u32) -> Result<()> {
        let max = self.max_deriv_order();
        if jx > max || jy > max {
            Err(GpError::Capability { jx, jy, max })
        } else {
            Ok(())
        }
    }

    /// `K(x, x')`.
    pub fn eval(&self, x: T, y: T) -> Result<T> {
        self.eval_deriv(0, 0, x, y)
    }

    /// `d^jx/dx^jx d^jy/dy^jy K(x, y)`.
    pub fn eval_deriv(&self, jx: u32, jy: u32, x: T, y: T) -> Result<T> {
        self.check_point(x)?;
        self.check_point(y)?;
        self.check_orders(jx, jy)?;
        Ok(self.eval_unchecked(jx, jy, x, y))
    }

    fn eval_unchecked(&self, jx: u32, jy: u32, x: T, y: T) -> T {
        match &self.family {
            KernelFamily::Matern { nu } => {
                stationary(jx, jy, x - y, |m, r| matern::radial_derivative(*nu, m, r))
            }
            KernelFamily::SquaredExponential => stationary(jx, jy, x - y, se_radial),
            KernelFamily::Sobolev2 => sobolev2(jx, jy, x, y),
            KernelFamily::Spectral {
                basis,
                eigenvalues,
                ..
            } => {
                let n = self.retained_terms().unwrap_or(0);
                let mut a = vec![T::zero(); n];
                let mut b = vec![T::zero(); n];
                basis.fill_row(jx, x, &mut a);
                basis.fill_row(jy, y, &mut b);
                a.iter()
                    .zip(&b)
                    .enumerate()
                    .map(|(j, (p, q))| eigenvalues.mu(j + 1) * (*p * *q))
                    .sum()
            }
        }
    }

    /// Matrix `M[a][b] = d^ja d^jb K(xa[a], xb[b])`.
    pub fn cross_gram(&self, xa: &[T], ja: u32, xb: &[T], jb: u32) -> Result<DMatrix<T>> {
        for &x in xa.iter().chain(xb) {
            self.check_point(x)?;
        }
        self.check_orders(ja, jb)?;
        if let KernelFamily::Spectral { .. } = self.family {
            let fa = self.weighted_features(xa, ja, true);
            let fb = self.weighted_features(xb, jb, false);
            return Ok(fa * fb.transpose());
        }
        Ok(DMatrix::from_fn(xa.len(), xb.len(), |a, b| {
            self.eval_unchecked(ja, jb, xa[a], xb[b])
        }))
    }

    /// Gram matrix on a design; symmetric whenever `jx == jy`.
    pub fn gram(&self, xs: &[T], jx: u32, jy: u32) -> Result<DMatrix<T>> {
        if xs.is_empty() {
            return Err(GpError::Contract("gram needs a nonempty design".into()));
        }
        if jx != jy {
            return self.cross_gram(xs, jx, xs, jy);
        }
        for &x in xs {
            self.check_point(x)?;
        }
        self.check_orders(jx, jy)?;
        let n = xs.len();
        if let KernelFamily::Spectral { .. } = self.family {
            let mut g = self.cross_gram(xs, jx, xs, jy)?;
            for a in 0..n {
                for b in 0..a {
                    let v = (g[(a, b)] + g[(b, a)]) * T::lit(0.5);
                    g[(a, b)] = v;
                    g[(b, a)] = v;
                }
            }
            return Ok(g);
        }
        let mut g = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..=a {
                let v = self.eval_unchecked(jx, jy, xs[a], xs[b]);
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        Ok(g)
    }

    /// Rows `phi^{(j)}(x)` (optionally multiplied by `mu`) for a spectral kernel.
    fn weighted_features(&self, xs: &[T], j: u32, weighted: bool) -> DMatrix<T> {
        let KernelFamily::Spectral {
            basis,
            eigenvalues,
            ..
        } = &self.family
        else {
            unreachable!("features only exist for spectral kernels");
        };
        let n = self.retained_terms().unwrap_or(0);
        let mu = eigenvalues.head(n);
        let mut out = DMatrix::zeros(xs.len(), n);
        let mut row = vec![T::zero(); n];
        for (a, &x) in xs.iter().enumerate() {
            basis.fill_row(j, x, &mut row);
            for (i, v) in row.iter().enumerate() {
                out[(a, i)] = if weighted { *v * mu[i] } else { *v };
            }
        }
        out
    }

    /// Spectral kernel with eigenvalues `mu_i / (lambda + mu_i)` on the same basis.
    pub fn equivalent_kernel(&self, lambda: T) -> Result<Self> {
        let KernelFamily::Spectral {
            basis,
            eigenvalues,
            truncation,
        } = &self.family
        else {
            return Err(GpError::UnsupportedKernel {
                op: "equivalent_kernel",
            });
        };
        if !(lambda > T::zero()) {
            return Err(GpError::Contract(format!("lambda must be positive, got {lambda}")));
        }
        let n = self.retained_terms().unwrap_or(0);
        let nu: Vec<T> = eigenvalues
            .head(n)
            .into_iter()
            .map(|m| m / (lambda + m))
            .collect();
        Ok(Kernel {
            family: KernelFamily::Spectral {
                basis: *basis,
                eigenvalues: EigenSequence::Explicit { values: nu },
                truncation: *truncation,
            },
            domain: self.domain,
        })
    }
}

/// Stationary kernel `h(x - y)` with radial derivatives `R_m(r)`:
/// `d^jx d^jy = (-1)^jy sign(t)^m R_m(|t|)`, `m = jx + jy`.
fn stationary<T: Real>(jx: u32, jy: u32, t: T, radial: impl Fn(u32, T) -> T) -> T {
    let m = jx + jy;
    let r = t.abs();
    let mut v = radial(m, r);
    if m % 2 == 1 {
        if t == T::zero() {
            return T::zero();
        }
        if t < T::zero() {
            v = -v;
        }
    }
    if jy % 2 == 1 {
        -v
    } else {
        v
    }
}

/// `d^m/dr^m exp(-r^2) = (-1)^m H_m(r) exp(-r^2)` with physicists' Hermite `H_m`.
fn se_radial<T: Real>(m: u32, r: T) -> T {
    let two = T::lit(2.0);
    let (mut h_prev, mut h) = (T::zero(), T::one());
    for j in 0..m {
        let next = two * r * h - two * T::from_u32(j).unwrap() * h_prev;
        h_prev = h;
        h = next;
    }
    let sign = if m % 2 == 1 { -T::one() } else { T::one() };
    sign * h * (-(r * r)).exp()
}

fn sobolev2<T: Real>(jx: u32, jy: u32, x: T, y: T) -> T {
    let six = T::lit(6.0);
    let half = T::lit(0.5);
    // d/dx of K(x, y)
    let d10 = |x: T, y: T| {
        if x <= y {
            y + x * y - x * x * half
        } else {
            y + y * y * half
        }
    };
    match (jx, jy) {
        (0, 0) => {
            let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
            T::one() + x * y + lo * lo * (T::lit(3.0) * hi - lo) / six
        }
        (1, 0) => d10(x, y),
        (0, 1) => d10(y, x),
        _ => T::one() + x.min(y),
    }
}
