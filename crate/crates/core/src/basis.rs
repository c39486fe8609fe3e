//! Orthonormal bases of `L^2[0,1]` used by spectral kernels and series functions.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Identifier of an orthonormal basis on `[0, 1]`.
///
/// Both bases are uniformly bounded by `sqrt(2)` and infinitely smooth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasisId {
    /// `psi_1 = 1`, `psi_{2m} = sqrt(2) cos(2 pi m x)`, `psi_{2m+1} = sqrt(2) sin(2 pi m x)`.
    FourierL2,
    /// `phi_i = sqrt(2) cos((i - 1/2) pi x)`.
    CosineHalf,
}

/// Number of terms between exact re-seeds of the rotation recurrence.
const RESEED: usize = 64;

impl BasisId {
    pub fn name(self) -> &'static str {
        match self {
            BasisId::FourierL2 => "fourier_l2",
            BasisId::CosineHalf => "cosine_half",
        }
    }

    /// Uniform bound `C_phi` on `|phi_i|`.
    pub fn sup_bound<T: Real>(self) -> T {
        T::SQRT_2()
    }

    /// Angular frequency `omega_i` and phase of `phi_i(x) = a_i cos(omega_i x + phase_i)`.
    fn wave<T: Real>(self, i: usize) -> (T, T, T) {
        debug_assert!(i >= 1);
        match self {
            BasisId::FourierL2 => {
                if i == 1 {
                    return (T::one(), T::zero(), T::zero());
                }
                let m = T::from_usize_lossy(i / 2);
                let phase = if i % 2 == 0 {
                    T::zero()
                } else {
                    -T::FRAC_PI_2()
                };
                (T::SQRT_2(), T::TAU() * m, phase)
            }
            BasisId::CosineHalf => {
                let w = (T::from_usize_lossy(i) - T::lit(0.5)) * T::PI();
                (T::SQRT_2(), w, T::zero())
            }
        }
    }

    /// Growth factor of the k-th derivative: `|phi_i^{(k)}| <= C_phi * omega_i^k`.
    pub fn derivative_growth<T: Real>(self, i: usize, k: u32) -> T {
        let (_, w, _) = self.wave::<T>(i);
        if k == 0 {
            T::one()
        } else {
            w.powi(k as i32)
        }
    }

    /// `phi_i^{(k)}(x)` for a 1-based index `i`.
    pub fn eval<T: Real>(self, i: usize, k: u32, x: T) -> T {
        let (amp, w, phase) = self.wave::<T>(i);
        if k > 0 && w == T::zero() {
            return T::zero();
        }
        let (s, c) = (w * x + phase).sin_cos();
        amp * w.powi(k as i32) * quarter_turn(c, s, k)
    }

    /// Fills `out[j] = phi_{j+1}^{(k)}(x)` for `j < out.len()`.
    ///
    /// Uses a rotation recurrence re-seeded every few dozen terms, so the
    /// cost is dominated by multiplications instead of trigonometric calls.
    pub fn fill_row<T: Real>(self, k: u32, x: T, out: &mut [T]) {
        let n = out.len();
        match self {
            BasisId::CosineHalf => {
                // theta_i = (i - 1/2) pi x, step pi x
                let step = T::PI() * x;
                let (ss, cs) = step.sin_cos();
                let mut idx = 0;
                while idx < n {
                    let i = idx + 1;
                    let (mut s, mut c) = ((T::from_usize_lossy(i) - T::lit(0.5)) * step).sin_cos();
                    let end = (idx + RESEED).min(n);
                    for (j, slot) in out.iter_mut().enumerate().take(end).skip(idx) {
                        let w = (T::from_usize_lossy(j + 1) - T::lit(0.5)) * T::PI();
                        *slot = T::SQRT_2() * pow_k(w, k) * quarter_turn(c, s, k);
                        let c_next = c * cs - s * ss;
                        s = s * cs + c * ss;
                        c = c_next;
                    }
                    idx = end;
                }
            }
            BasisId::FourierL2 => {
                if n == 0 {
                    return;
                }
                out[0] = if k == 0 { T::one() } else { T::zero() };
                // pairs (2m, 2m+1) share theta_m = 2 pi m x
                let step = T::TAU() * x;
                let (ss, cs) = step.sin_cos();
                let pairs = n / 2;
                let mut m = 1;
                while m <= pairs {
                    let (mut s, mut c) = (T::from_usize_lossy(m) * step).sin_cos();
                    let end = (m + RESEED).min(pairs + 1);
                    for mm in m..end {
                        let w = T::TAU() * T::from_usize_lossy(mm);
                        let wk = T::SQRT_2() * pow_k(w, k);
                        out[2 * mm - 1] = wk * quarter_turn(c, s, k);
                        if 2 * mm < n {
                            // sin(t) = cos(t - pi/2): rotate (c, s) -> (s, -c)
                            out[2 * mm] = wk * quarter_turn(s, -c, k);
                        }
                        let c_next = c * cs - s * ss;
                        s = s * cs + c * ss;
                        c = c_next;
                    }
                    m = end;
                }
            }
        }
    }
}

#[inline]
fn pow_k<T: Real>(w: T, k: u32) -> T {
    if k == 0 {
        T::one()
    } else {
        w.powi(k as i32)
    }
}

/// k-th derivative of `cos(t)` written in terms of `cos(t)`, `sin(t)`.
#[inline]
fn quarter_turn<T: Real>(c: T, s: T, k: u32) -> T {
    match k % 4 {
        0 => c,
        1 => -s,
        2 => -c,
        _ => s,
    }
}

impl std::fmt::Display for BasisId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}
