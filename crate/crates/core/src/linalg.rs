//! Dense factorizations shared by the posterior and selection code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{GpError, Result};
use crate::scalar::Real;

/// First jitter, relative to the mean diagonal.
pub const JITTER_START: f64 = 1e-10;
/// Largest jitter tried, relative to the mean diagonal.
pub const JITTER_MAX: f64 = 1e-4;

/// Cholesky factor of `A + jitter * I`.
#[derive(Debug, Clone)]
pub struct Factor<T: Real> {
    pub chol: Cholesky<T, Dyn>,
    /// Absolute jitter that was added to the diagonal (zero if none).
    pub jitter: T,
}

impl<T: Real> Factor<T> {
    /// Factors a symmetric matrix, escalating diagonal jitter from
    /// `1e-10 * mean(diag)` by doubling up to `1e-4 * mean(diag)`.
    pub fn new(a: DMatrix<T>, stage: &'static str) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(GpError::numerical(stage, "matrix must be square and nonempty"));
        }
        if a.iter().any(|v| !v.is_finite_real()) {
            return Err(GpError::numerical(stage, "matrix has non-finite entries"));
        }
        if let Some(chol) = Cholesky::new(a.clone()) {
            return Ok(Factor {
                chol,
                jitter: T::zero(),
            });
        }
        let n = a.nrows();
        let mean = a.diagonal().iter().map(|v| v.abs()).sum::<T>() / T::from_usize_lossy(n);
        let base = if mean > T::zero() { mean } else { T::one() };
        let ceiling = base * T::lit(JITTER_MAX);
        let mut jitter = base * T::lit(JITTER_START);
        while jitter <= ceiling * T::lit(1.000_001) {
            let mut b = a.clone();
            for i in 0..n {
                b[(i, i)] += jitter;
            }
            if let Some(chol) = Cholesky::new(b) {
                return Ok(Factor { chol, jitter });
            }
            jitter += jitter;
        }
        Err(GpError::numerical(
            stage,
            format!("matrix of size {n} is not positive definite even with jitter {ceiling} (mean diagonal {mean})"),
        ))
    }

    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        self.chol.solve(b)
    }

    /// `L^{-1} B` for the lower factor `L`.
    pub fn solve_lower(&self, b: &DMatrix<T>) -> DMatrix<T> {
        let mut out = b.clone();
        // the factor has a positive diagonal, so the solve cannot fail
        self.chol.l_dirty().solve_lower_triangular_mut(&mut out);
        out
    }

    pub fn lower(&self) -> DMatrix<T> {
        self.chol.l()
    }

    /// `log det(A + jitter I)`.
    pub fn ln_det(&self) -> T {
        let l = self.chol.l_dirty();
        (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<T>() * T::lit(2.0)
    }
}

/// Symmetric eigendecomposition `K = U diag(s) U^T` with negative
/// round-off eigenvalues clipped to zero.
///
/// One decomposition serves every regularization level: solves against
/// `K + c I` cost `O(n^2)` and determinants `O(n)`.
#[derive(Debug, Clone)]
pub struct GramSpectrum<T: Real> {
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Real> GramSpectrum<T> {
    pub fn new(gram: DMatrix<T>) -> Result<Self> {
        if gram.iter().any(|v| !v.is_finite_real()) {
            return Err(GpError::numerical("eigendecomposition", "matrix has non-finite entries"));
        }
        let eig = SymmetricEigen::try_new(gram, T::default_epsilon(), 0)
            .ok_or_else(|| GpError::numerical("eigendecomposition", "symmetric eigensolver did not converge"))?;
        let values = eig.eigenvalues.map(|v| if v > T::zero() { v } else { T::zero() });
        Ok(GramSpectrum {
            values,
            vectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U^T y`.
    pub fn rotate(&self, y: &DVector<T>) -> DVector<T> {
        self.vectors.tr_mul(y)
    }

    /// `(K + c I)^{-1} y` for `c > 0`.
    pub fn solve_shifted(&self, c: T, y: &DVector<T>) -> DVector<T> {
        let mut z = self.rotate(y);
        for (zj, s) in z.iter_mut().zip(self.values.iter()) {
            *zj /= *s + c;
        }
        &self.vectors * z
    }
}

/// Householder reduction `Q^T K Q = T` of a symmetric matrix to tridiagonal
/// form, carrying `Q^T y` along instead of forming `Q`.
///
/// Quadratic forms `y^T (K + c I)^{-1} y` and `log det(K + c I)` then cost
/// `O(n)` per shift.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T: Real> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
    /// `Q^T y`.
    pub rotated: Vec<T>,
}

impl<T: Real> Tridiagonal<T> {
    pub fn new(a: DMatrix<T>, y: &[T]) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || y.len() != n {
            return Err(GpError::numerical("tridiagonal reduction", "shape mismatch"));
        }
        if a.iter().any(|v| !v.is_finite_real()) {
            return Err(GpError::numerical("tridiagonal reduction", "matrix has non-finite entries"));
        }
        let mut a = a;
        let mut y = y.to_vec();
        let mut off = vec![T::zero(); n.saturating_sub(1)];
        let mut v = vec![T::zero(); n];
        let mut p = vec![T::zero(); n];
        // rank-2 update from the previous step, applied lazily column by
        // column so the lower triangle is streamed once per step
        let mut pv = vec![T::zero(); n];
        let mut pw = vec![T::zero(); n];
        let mut pending: Option<usize> = None;
        let data = a.as_mut_slice();
        for k in 0..n.saturating_sub(2) {
            let s = k + 1;
            let m = n - s;
            if let Some(s0) = pending {
                rank2_column(data, n, k, s0, &pv, &pw);
            }
            let col = &data[k * n + s..k * n + n];
            let norm = col.iter().map(|x| *x * *x).sum::<T>().sqrt();
            let alpha = if col[0] > T::zero() { -norm } else { norm };
            let v = &mut v[..m];
            v.copy_from_slice(col);
            v[0] -= alpha;
            let vtv = v.iter().map(|x| *x * *x).sum::<T>();
            if norm == T::zero() || vtv == T::zero() {
                off[k] = col[0];
                if let Some(s0) = pending.take() {
                    for j in s..n {
                        rank2_column(data, n, j, s0, &pv, &pw);
                    }
                }
                continue;
            }
            off[k] = alpha;
            let beta = T::lit(2.0) / vtv;
            // p = beta * A22 v from the lower triangle
            let p = &mut p[..m];
            p.iter_mut().for_each(|x| *x = T::zero());
            for j in 0..m {
                if let Some(s0) = pending {
                    rank2_column(data, n, s + j, s0, &pv, &pw);
                }
                let c = &data[(s + j) * n + s + j..(s + j) * n + n];
                let vj = v[j];
                let (pj, ptail) = p[j..].split_first_mut().unwrap();
                let vtail = &v[j + 1..];
                *pj += c[0] * vj;
                *pj += axpy_dot(&c[1..], vj, ptail, vtail);
            }
            p.iter_mut().for_each(|x| *x *= beta);
            let kk = beta * T::lit(0.5) * p.iter().zip(v.iter()).map(|(a, b)| *a * *b).sum::<T>();
            for (pi, vi) in p.iter_mut().zip(v.iter()) {
                *pi -= kk * *vi;
            }
            let ys = &mut y[s..];
            let proj = beta * ys.iter().zip(v.iter()).map(|(a, b)| *a * *b).sum::<T>();
            for (yi, vi) in ys.iter_mut().zip(v.iter()) {
                *yi -= proj * *vi;
            }
            pv[..m].copy_from_slice(v);
            pw[..m].copy_from_slice(p);
            pending = Some(s);
        }
        if let Some(s0) = pending {
            for j in s0..n {
                rank2_column(data, n, j, s0, &pv, &pw);
            }
        }
        if n >= 2 {
            off[n - 2] = data[(n - 2) * n + n - 1];
        }
        let diag = (0..n).map(|i| data[i * n + i]).collect();
        Ok(Tridiagonal { diag, off, rotated: y })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `(y^T (K + c I)^{-1} y, log det(K + c I))` by an `LDL^T` sweep;
    /// `None` if the shifted matrix is not numerically positive definite.
    pub fn shifted(&self, c: T) -> Option<(T, T)> {
        let n = self.dim();
        let mut d_prev = T::zero();
        let mut z_prev = T::zero();
        let mut quad = T::zero();
        let mut ln_det = T::zero();
        for i in 0..n {
            let (d, z) = if i == 0 {
                (self.diag[0] + c, self.rotated[0])
            } else {
                let l = self.off[i - 1] / d_prev;
                (self.diag[i] + c - l * self.off[i - 1], self.rotated[i] - l * z_prev)
            };
            if !(d > T::zero()) {
                return None;
            }
            quad += z * z / d;
            ln_det += d.ln();
            d_prev = d;
            z_prev = z;
        }
        Some((quad, ln_det))
    }
}

/// `p += a * s` and returns `a . v`, with independent partial sums so the
/// reduction is not one long dependency chain.
#[inline]
fn axpy_dot<T: Real>(a: &[T], s: T, p: &mut [T], v: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let mut ac = a.chunks_exact(4);
    let mut pc = p.chunks_exact_mut(4);
    let mut vc = v.chunks_exact(4);
    for ((a4, p4), v4) in (&mut ac).zip(&mut pc).zip(&mut vc) {
        for t in 0..4 {
            p4[t] += a4[t] * s;
            acc[t] += a4[t] * v4[t];
        }
    }
    let mut tail = T::zero();
    for ((ai, pi), vi) in ac.remainder().iter().zip(pc.into_remainder()).zip(vc.remainder()) {
        *pi += *ai * s;
        tail += *ai * *vi;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `A[j.., j] -= v w_j + w v_j` for the update of the block starting at `s0`.
#[inline]
fn rank2_column<T: Real>(data: &mut [T], n: usize, j: usize, s0: usize, v: &[T], w: &[T]) {
    let (vj, wj) = (v[j - s0], w[j - s0]);
    let c = &mut data[j * n + j..j * n + n];
    for ((aij, vi), wi) in c.iter_mut().zip(&v[j - s0..]).zip(&w[j - s0..]) {
        *aij -= *vi * wj + *wi * vj;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_factor_needs_no_jitter() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 2.0, 2.0, 3.0]);
        let f = Factor::new(a.clone(), "test").unwrap();
        assert_eq!(f.jitter, 0.0);
        let l = f.lower();
        assert!((&l * l.transpose() - a).norm() < 1e-14);
        assert!((f.ln_det() - 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rescued_by_jitter() {
        let a = DMatrix::from_element(3, 3, 1.0);
        let f = Factor::new(a, "test").unwrap();
        assert!(f.jitter > 0.0 && f.jitter <= 1e-4);
    }

    #[test]
    fn indefinite_matrix_fails() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(Factor::new(a, "test"), Err(GpError::Numerical { .. })));
    }

    #[test]
    fn spectrum_shifted_solve_matches_cholesky() {
        let x: Vec<f64> = (0..6).map(|i| i as f64 / 5.0).collect();
        let k = DMatrix::from_fn(6, 6, |a, b| (-(x[a] - x[b]).powi(2)).exp());
        let y = DVector::from_fn(6, |i, _| (i as f64).sin());
        let s = GramSpectrum::new(k.clone()).unwrap();
        let c = 0.3;
        let direct = Factor::new(&k + DMatrix::identity(6, 6) * c, "test").unwrap().solve(&y);
        assert!((s.solve_shifted(c, &y) - direct).amax() < 1e-12);
        assert!(s.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn tridiagonal_shifts_match_dense_route() {
        let n = 40;
        let x: Vec<f64> = (0..n).map(|i| ((i * 17) % n) as f64 / n as f64).collect();
        let k = DMatrix::from_fn(n, n, |a, b| (-(x[a] - x[b]).abs() * 3.0).exp() * (1.0 + (x[a] - x[b]).abs() * 3.0));
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).cos()).collect();
        let tri = Tridiagonal::new(k.clone(), &y).unwrap();
        let yv = DVector::from_column_slice(&y);
        for c in [1e-6, 1e-2, 3.0] {
            let f = Factor::new(&k + DMatrix::identity(n, n) * c, "test").unwrap();
            let (quad, ln_det) = tri.shifted(c).unwrap();
            assert!((quad - yv.dot(&f.solve(&yv))).abs() < 1e-8 * quad.abs());
            assert!((ln_det - f.ln_det()).abs() < 1e-9 * ln_det.abs().max(1.0));
        }
        let tiny = Tridiagonal::new(DMatrix::from_element(1, 1, 2.0), &[3.0]).unwrap();
        assert_eq!(tiny.shifted(1.0), Some((3.0, 3f64.ln())));
    }
}
