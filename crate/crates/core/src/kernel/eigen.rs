use serde::{Deserialize, Serialize};

use crate::error::{GpError, Result};
use crate::scalar::Real;

/// Eigenvalue sequence `mu_1 >= mu_2 >= ... > 0` of a spectral kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigenSequence<T> {
    /// `mu_i = scale * i^(-2 alpha)`.
    Polynomial { alpha: T, scale: T },
    /// `mu_i = scale * exp(-2 gamma i)`.
    Exponential { gamma: T, scale: T },
    /// Finite list; `mu_i = 0` beyond its end.
    Explicit { values: Vec<T> },
}

impl<T: Real> EigenSequence<T> {
    pub fn polynomial(alpha: T, scale: T) -> Result<Self> {
        if !(alpha > T::lit(0.5)) || !(scale > T::zero()) {
            return Err(GpError::Construction(format!(
                "polynomial eigenvalues need alpha > 1/2 and scale > 0 (got alpha={alpha}, scale={scale})"
            )));
        }
        Ok(EigenSequence::Polynomial { alpha, scale })
    }

    pub fn exponential(gamma: T, scale: T) -> Result<Self> {
        if !(gamma > T::zero()) || !(scale > T::zero()) {
            return Err(GpError::Construction(format!(
                "exponential eigenvalues need gamma > 0 and scale > 0 (got gamma={gamma}, scale={scale})"
            )));
        }
        Ok(EigenSequence::Exponential { gamma, scale })
    }

    pub fn explicit(values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !(*v > T::zero())) {
            return Err(GpError::Construction(
                "explicit eigenvalues must be positive".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] > w[0]) {
            return Err(GpError::Construction(
                "explicit eigenvalues must be nonincreasing".into(),
            ));
        }
        Ok(EigenSequence::Explicit { values })
    }

    /// Re-checks constructor invariants, e.g. after deserialization.
    pub fn validate(&self) -> Result<()> {
        match self {
            EigenSequence::Polynomial { alpha, scale } => Self::polynomial(*alpha, *scale).map(|_| ()),
            EigenSequence::Exponential { gamma, scale } => {
                Self::exponential(*gamma, *scale).map(|_| ())
            }
            EigenSequence::Explicit { values } => Self::explicit(values.clone()).map(|_| ()),
        }
    }

    /// `mu_i` for a 1-based index.
    pub fn mu(&self, i: usize) -> T {
        debug_assert!(i >= 1);
        match self {
            EigenSequence::Polynomial { alpha, scale } => {
                *scale * T::from_usize_lossy(i).powf(-(*alpha + *alpha))
            }
            EigenSequence::Exponential { gamma, scale } => {
                *scale * (-(*gamma + *gamma) * T::from_usize_lossy(i)).exp()
            }
            EigenSequence::Explicit { values } => values.get(i - 1).copied().unwrap_or_else(T::zero),
        }
    }

    /// Number of nonzero terms, `None` for infinite sequences.
    pub fn len(&self) -> Option<usize> {
        match self {
            EigenSequence::Explicit { values } => Some(values.len()),
            _ => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    /// First `n` eigenvalues (fewer for a short explicit list).
    pub fn head(&self, n: usize) -> Vec<T> {
        let n = self.len().map_or(n, |l| l.min(n));
        (1..=n).map(|i| self.mu(i)).collect()
    }

    /// Upper bound on `sum_{i > n} mu_i * i^power`; `None` when the series diverges.
    pub fn weighted_tail(&self, n: usize, power: u32) -> Option<T> {
        let p = T::from_u32(power).unwrap();
        match self {
            EigenSequence::Polynomial { alpha, scale } => {
                let expo = *alpha + *alpha - p;
                if expo <= T::one() {
                    return None;
                }
                // integral of x^(p - 2 alpha) over [n, inf)
                let n = T::from_usize_lossy(n.max(1));
                Some(*scale * n.powf(T::one() - expo) / (expo - T::one()))
            }
            EigenSequence::Exponential { gamma, scale } => {
                let rate = *gamma + *gamma;
                // x^p e^{-rate x} is decreasing beyond p / rate; sum explicitly up to there
                let turn = (p / rate).ceil().to_usize().unwrap_or(0) + 1;
                let mut acc = T::zero();
                let mut start = n;
                while start < turn {
                    start += 1;
                    acc += self.mu(start) * T::from_usize_lossy(start).powi(power as i32);
                }
                Some(acc + *scale * upper_gamma_int(power, rate, T::from_usize_lossy(start)))
            }
            EigenSequence::Explicit { values } => Some(
                values
                    .iter()
                    .enumerate()
                    .skip(n)
                    .map(|(j, v)| *v * T::from_usize_lossy(j + 1).powi(power as i32))
                    .sum(),
            ),
        }
    }

    /// Whether `sum_i mu_i i^power` converges.
    pub fn summable_with_power(&self, power: u32) -> bool {
        self.weighted_tail(1, power).is_some()
    }
}

/// `int_a^inf x^p e^{-rate x} dx` for integer `p`.
fn upper_gamma_int<T: Real>(p: u32, rate: T, a: T) -> T {
    // p! / rate^{p+1} * e^{-rate a} * sum_{j<=p} (rate a)^j / j!
    let ra = rate * a;
    let mut term = T::one();
    let mut series = T::one();
    for j in 1..=p {
        term *= ra / T::from_u32(j).unwrap();
        series += term;
    }
    let mut fact = T::one();
    for j in 1..=p {
        fact *= T::from_u32(j).unwrap();
    }
    fact / rate.powi(p as i32 + 1) * (-ra).exp() * series
}
