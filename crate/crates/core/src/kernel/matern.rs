//! Radial derivatives of the Matérn correlation
//! `K(r) = 2^{1-nu}/Gamma(nu) * z^nu * K_nu(z)`, `z = sqrt(2 nu) r`.

use crate::scalar::Real;

/// Below this distance the general-order form switches to its even Taylor
/// expansion, since `z^nu K_nu(z)` is numerically 0/0 at the origin.
pub(crate) const SERIES_RADIUS: f64 = 1e-6;

/// Returns `Some(p)` when `nu = p + 1/2`.
pub(crate) fn half_integer_order(nu: f64) -> Option<u32> {
    let twice = 2.0 * nu;
    let rounded = twice.round();
    if (twice - rounded).abs() < 1e-12 && rounded >= 1.0 && (rounded as i64) % 2 == 1 {
        Some(((rounded as i64 - 1) / 2) as u32)
    } else {
        None
    }
}

/// Largest derivative order `k` with `2k < 2 nu`, i.e. `ceil(nu) - 1`.
pub(crate) fn max_order(nu: f64) -> u32 {
    (nu.ceil() as i64 - 1).max(0) as u32
}

/// `d^m/dr^m K(r)` for `r >= 0`.
pub(crate) fn radial_derivative<T: Real>(nu: T, m: u32, r: T) -> T {
    let nu64 = nu.as_f64();
    if let Some(p) = half_integer_order(nu64) {
        return half_integer(nu, p, m, r);
    }
    T::lit(general(nu64, m, r.as_f64()))
}

/// Closed form `K(r) = e^{-z} P(z)` for `nu = p + 1/2`; derivatives follow
/// `P_{m+1} = P_m' - P_m`.
fn half_integer<T: Real>(nu: T, p: u32, m: u32, r: T) -> T {
    let s = (nu + nu).sqrt();
    let mut poly = half_integer_poly::<T>(p);
    for _ in 0..m {
        let mut next = vec![T::zero(); poly.len()];
        for (j, c) in poly.iter().enumerate() {
            next[j] -= *c;
            if j > 0 {
                next[j - 1] += T::from_usize_lossy(j) * *c;
            }
        }
        poly = next;
    }
    let z = s * r;
    let mut acc = T::zero();
    for c in poly.iter().rev() {
        acc = acc * z + *c;
    }
    let scale = if m == 0 { T::one() } else { s.powi(m as i32) };
    scale * (-z).exp() * acc
}

/// Coefficients `a_j = p!/(2p)! * (2p-j)! / (j! (p-j)!) * 2^j`.
fn half_integer_poly<T: Real>(p: u32) -> Vec<T> {
    let fact = |n: u32| (1..=n).fold(1.0f64, |a, b| a * b as f64);
    (0..=p)
        .map(|j| {
            T::lit(fact(p) / fact(2 * p) * fact(2 * p - j) / (fact(j) * fact(p - j)) * 2f64.powi(j as i32))
        })
        .collect()
}

/// General order through `d/dz [z^e u_q] = e z^{e-1} u_q - z^{e+1} u_{q-1}`
/// with `u_q(z) = z^q K_|q|(z)`.
fn general(nu: f64, m: u32, r: f64) -> f64 {
    let s = (2.0 * nu).sqrt();
    if r < SERIES_RADIUS {
        return s.powi(m as i32) * taylor_derivative(nu, m, s * r);
    }
    let z = s * r;
    let norm = 2f64.powf(1.0 - nu) / puruspe::gamma(nu);
    // terms (coefficient, power of z, shift s in u_{nu - s})
    let mut terms: Vec<(f64, i32, u32)> = vec![(1.0, 0, 0)];
    for _ in 0..m {
        let mut next: Vec<(f64, i32, u32)> = Vec::with_capacity(terms.len() * 2);
        for &(c, e, sh) in &terms {
            if e != 0 {
                push_term(&mut next, c * e as f64, e - 1, sh);
            }
            push_term(&mut next, -c, e + 1, sh + 1);
        }
        terms = next;
    }
    let mut acc = 0.0;
    for (c, e, sh) in terms {
        let q = nu - sh as f64;
        let (_, k) = puruspe::Inu_Knu(q.abs(), z);
        acc += c * z.powi(e) * z.powf(q) * k;
    }
    norm * s.powi(m as i32) * acc
}

fn push_term(terms: &mut Vec<(f64, i32, u32)>, c: f64, e: i32, sh: u32) {
    if let Some(t) = terms.iter_mut().find(|t| t.1 == e && t.2 == sh) {
        t.0 += c;
    } else {
        terms.push((c, e, sh));
    }
}

/// m-th derivative (in z) of the regular even part
/// `sum_{j < nu} (-1)^j Gamma(nu - j) / (Gamma(nu) 4^j j!) z^{2j}`.
fn taylor_derivative(nu: f64, m: u32, z: f64) -> f64 {
    let mut acc = 0.0;
    let mut j = 0u32;
    let g_nu = puruspe::gamma(nu);
    while (j as f64) < nu {
        let deg = 2 * j;
        if deg >= m {
            let a = (-1f64).powi(j as i32) * puruspe::gamma(nu - j as f64)
                / (g_nu * 4f64.powi(j as i32) * (1..=j).fold(1.0, |a, b| a * b as f64));
            // d^m z^deg = deg!/(deg-m)! z^{deg-m}
            let falling = (0..m).fold(1.0, |acc, t| acc * (deg - t) as f64);
            acc += a * falling * z.powi((deg - m) as i32);
        }
        j += 1;
    }
    acc
}
