//! Proximal maps of the Schatten `p`-norm (the norm itself, not its `p`-th
//! power).
//!
//! By unitary invariance the matrix prox acts on singular values only, and
//! by the Moreau decomposition the vector prox of `lambda ||.||_p` is
//! `s - lambda * P(s / lambda)` with `P` the Euclidean projection onto the
//! unit ball of the dual `l_q` norm.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::Result;
use crate::matrix::ComplexMatrix;
use crate::scalar::Real;
use crate::schatten::{lp_norm, SchattenExponent};
use crate::svd::svd;

const INNER_TOL: f64 = 1e-12;
const MAX_INNER: usize = 100;
const MAX_OUTER: usize = 400;

/// Prox of `lambda * ||.||_p` at a nonnegative vector.
pub fn prox_lp<T: Real>(s: &[T], lambda: T, p: SchattenExponent) -> Vec<T> {
    if lambda <= T::zero() || s.iter().all(|v| v.is_zero()) {
        return s.to_vec();
    }
    if p == SchattenExponent::ONE {
        return s.iter().map(|&v| (v - lambda).max(T::zero())).collect();
    }
    if p == SchattenExponent::TWO {
        let n = lp_norm(s, p);
        let f = (T::one() - lambda / n).max(T::zero());
        return s.iter().map(|&v| v * f).collect();
    }
    let w: Vec<T> = s.iter().map(|&v| v / lambda).collect();
    let u = project_dual_ball(&w, p.conjugate());
    s.iter().zip(&u).map(|(&v, &ui)| (v - lambda * ui).max(T::zero())).collect()
}

/// Euclidean projection of a nonnegative vector onto the unit `l_q` ball.
pub fn project_dual_ball<T: Real>(w: &[T], q: SchattenExponent) -> Vec<T> {
    if lp_norm(w, q) <= T::one() {
        return w.to_vec();
    }
    if q.is_infinite() {
        return w.iter().map(|&v| v.min(T::one())).collect();
    }
    if q == SchattenExponent::ONE {
        return project_l1_ball(w);
    }
    if q == SchattenExponent::TWO {
        let n = lp_norm(w, q);
        return w.iter().map(|&v| v / n).collect();
    }
    project_lq_ball(w, T::lit(q.value()))
}

/// Sort-based projection onto the simplex-shaped part of the `l_1` ball.
fn project_l1_ball<T: Real>(w: &[T]) -> Vec<T> {
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
    let mut cum = T::zero();
    let mut theta = T::zero();
    for (k, &v) in sorted.iter().enumerate() {
        cum = cum + v;
        let t = (cum - T::one()) / T::lit((k + 1) as f64);
        if v > t {
            theta = t;
        }
    }
    w.iter().map(|&v| (v - theta).max(T::zero())).collect()
}

/// KKT system `u_i + mu u_i^(q-1) = w_i` with `sum u_i^q = 1`: a safeguarded
/// Newton solve per component inside a bracketed root search on `mu`.
fn project_lq_ball<T: Real>(w: &[T], q: T) -> Vec<T> {
    let excess = |mu: T| -> (T, Vec<T>) {
        let u: Vec<T> = w.iter().map(|&wi| solve_component(wi, mu, q)).collect();
        (lp_norm(&u, SchattenExponent::new(q.as_f64()).expect("q >= 1")) - T::one(), u)
    };
    let mut lo = T::zero();
    let mut hi = T::one();
    let (mut f_hi, mut u_hi) = excess(hi);
    while f_hi > T::zero() {
        lo = hi;
        hi = hi * T::lit(4.0);
        (f_hi, u_hi) = excess(hi);
    }
    let mut f_lo = excess(lo).0;
    let mut best = u_hi;
    let mut side = 0i8;
    for _ in 0..MAX_OUTER {
        if hi - lo <= T::epsilon() * hi {
            break;
        }
        // Illinois-modified regula falsi on the bracket
        let mut mu = hi - f_hi * (hi - lo) / (f_hi - f_lo);
        if !(mu > lo && mu < hi) {
            mu = (lo + hi) * T::lit(0.5);
        }
        let (f, u) = excess(mu);
        if f.abs() <= T::epsilon() * T::lit(4.0) {
            return u;
        }
        if f > T::zero() {
            lo = mu;
            f_lo = f;
            if side == -1 {
                f_hi = f_hi * T::lit(0.5);
            }
            side = -1;
        } else {
            hi = mu;
            f_hi = f;
            best = u;
            if side == 1 {
                f_lo = f_lo * T::lit(0.5);
            }
            side = 1;
        }
    }
    best
}

/// Root in `[0, w]` of `u + mu u^(q-1) - w`, increasing in `u`.
fn solve_component<T: Real>(w: T, mu: T, q: T) -> T {
    if w <= T::zero() {
        return T::zero();
    }
    if mu.is_zero() {
        return w;
    }
    let e = q - T::one();
    let phi = |u: T| u + mu * u.powf(e) - w;
    let (mut lo, mut hi) = (T::zero(), w);
    let mut u = if e > T::one() { w } else { w * T::lit(0.5) };
    let tol = T::lit(INNER_TOL) * w;
    for _ in 0..MAX_INNER {
        let f = phi(u);
        if f.is_zero() {
            return u;
        }
        if f > T::zero() {
            hi = u;
        } else {
            lo = u;
        }
        let d = T::one() + mu * e * u.powf(e - T::one());
        let mut next = u - f / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo + hi) * T::lit(0.5);
        }
        if (next - u).abs() <= tol || hi - lo <= tol {
            return next;
        }
        u = next;
    }
    u
}

/// Prox of `lambda * ||.||_{C_p}` at a matrix.
pub fn prox_schatten<T: Real>(m: &ComplexMatrix<T>, lambda: T, p: SchattenExponent) -> Result<ComplexMatrix<T>> {
    if p == SchattenExponent::TWO || m.rows() == 1 || m.cols() == 1 {
        // single singular value or Frobenius: radial shrinkage
        let n = m.frobenius_norm();
        if n.is_zero() {
            return Ok(m.clone());
        }
        return Ok(m.scale((T::one() - lambda / n).max(T::zero())));
    }
    let d = svd(m)?;
    let shrunk = prox_lp(d.s.values(), lambda, p);
    let k = shrunk.len();
    Ok(ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        (0..k).fold(Complex::zero(), |acc, l| if shrunk[l].is_zero() { acc } else { acc + d.u[(i, l)] * d.vh[(l, j)] * shrunk[l] })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_prox(s: &[f64], lambda: f64, p: f64) -> f64 {
        // minimise lambda ||u||_p + |u - s|^2 / 2 over a 2-d grid refinement
        let pe = SchattenExponent::new(p).unwrap();
        let obj = |u: &[f64]| lambda * lp_norm(u, pe) + 0.5 * u.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let mut best = (s.to_vec(), obj(s));
        let mut step = 1.0;
        while step > 1e-9 {
            let mut improved = false;
            for k in 0..2 {
                for sign in [-1.0, 1.0] {
                    let mut c = best.0.clone();
                    c[k] = (c[k] + sign * step).max(0.0);
                    let v = obj(&c);
                    if v < best.1 {
                        best = (c, v);
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best.1
    }

    #[test]
    fn prox_minimises_the_envelope() {
        let s = [2.0f64, 0.7];
        for &p in &[1.0, 1.3, 1.5, 2.0, 3.0, f64::INFINITY] {
            let pe = SchattenExponent::new(p).unwrap();
            for &lambda in &[0.1, 0.5, 1.0, 5.0] {
                let u = prox_lp(&s, lambda, pe);
                let val = lambda * lp_norm(&u, pe) + 0.5 * u.iter().zip(&s).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
                if p.is_finite() {
                    let brute = brute_prox(&s, lambda, p);
                    assert!(val <= brute + 1e-9, "p={p} lambda={lambda}: {val} vs {brute}");
                }
                assert!(u.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn large_lambda_maps_to_zero() {
        for &p in &[1.0, 1.5, 2.0, f64::INFINITY] {
            let u = prox_lp(&[1.0, 2.0, 0.5], 100.0, SchattenExponent::new(p).unwrap());
            assert!(u.iter().all(|&v| v < 1e-10), "p={p}: {u:?}");
        }
    }

    #[test]
    fn lq_projection_lands_on_sphere() {
        let w = [3.0, 1.0, 0.2, 0.0];
        for &q in &[1.0, 1.5, 3.0, 7.0] {
            let qe = SchattenExponent::new(q).unwrap();
            let u = project_dual_ball(&w, qe);
            assert_relative_eq!(lp_norm(&u, qe), 1.0, max_relative = 1e-10);
        }
    }
}
