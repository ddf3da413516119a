//! One-sided (Hestenes) Jacobi singular value decomposition for complex
//! matrices.
//!
//! The tall case `m >= n` orthogonalises the columns of a working copy of
//! `x` by complex plane rotations, accumulating the rotations into `V`.
//! Wide inputs are handled through the adjoint. Column norms of the
//! converged working copy are the singular values; the normalised columns
//! are the left singular vectors. Columns belonging to (numerically) zero
//! singular values are replaced by an orthonormal completion so that `U`
//! always has orthonormal columns.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;

/// Singular values, nonincreasing and nonnegative.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularSpectrum<T> {
    values: Vec<T>,
}

impl<T: Real> SingularSpectrum<T> {
    /// Sorts the values into nonincreasing order; rejects negative or
    /// non-finite entries.
    pub fn new(mut values: Vec<T>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < T::zero()) {
            return Err(Error::InvalidArgument("singular values must be finite and nonnegative".into()));
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest singular value (operator norm); zero for an empty spectrum.
    pub fn max(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }
}

/// Thin SVD `x = U diag(s) Vh` with `k = min(rows, cols)`:
/// `U` is `rows x k`, `Vh` is `k x cols`.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    pub u: ComplexMatrix<T>,
    pub s: SingularSpectrum<T>,
    pub vh: ComplexMatrix<T>,
}

impl<T: Real> Svd<T> {
    pub fn reconstruct(&self) -> ComplexMatrix<T> {
        let mut us = self.u.clone();
        let k = self.s.len();
        for i in 0..us.rows() {
            for j in 0..k {
                us[(i, j)] = us[(i, j)] * self.s.values()[j];
            }
        }
        us.matmul(&self.vh)
    }
}

pub fn svd<T: Real>(x: &ComplexMatrix<T>) -> Result<Svd<T>> {
    let (m, n) = x.shape();
    if m >= n {
        let (cols, v) = jacobi_columns(x, true)?;
        let (u, s, v_cols) = finish(cols, v.expect("vectors requested"), m);
        let vh = ComplexMatrix::from_fn(n, n, |i, j| v_cols[i][j].conj());
        Ok(Svd { u, s, vh })
    } else {
        // x = a^*, a = Ua S Va^*  =>  x = Va S Ua^*
        let a = x.adjoint();
        let (cols, v) = jacobi_columns(&a, true)?;
        let (ua, s, va_cols) = finish(cols, v.expect("vectors requested"), n);
        let u = ComplexMatrix::from_fn(m, m, |i, j| va_cols[j][i]);
        Ok(Svd { u, s, vh: ua.adjoint() })
    }
}

/// Singular values only; skips accumulation of the right rotations.
pub fn singular_values<T: Real>(x: &ComplexMatrix<T>) -> Result<SingularSpectrum<T>> {
    let a;
    let tall = if x.rows() >= x.cols() {
        x
    } else {
        a = x.adjoint();
        &a
    };
    let (cols, _) = jacobi_columns(tall, false)?;
    SingularSpectrum::new(cols.iter().map(|c| col_norm(c)).collect())
}

fn col_norm<T: Real>(c: &[Complex<T>]) -> T {
    let m = c.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    if m.is_zero() {
        return T::zero();
    }
    m * c.iter().map(|z| (*z / m).norm_sqr()).sum::<T>().sqrt()
}

type Columns<T> = Vec<Vec<Complex<T>>>;

/// Orthogonalises the columns of a tall matrix. Returns the rotated columns
/// and, if requested, the accumulated right rotation as columns of `V`.
fn jacobi_columns<T: Real>(a: &ComplexMatrix<T>, want_v: bool) -> Result<(Columns<T>, Option<Columns<T>>)> {
    let (m, n) = a.shape();
    let mut cols: Columns<T> = (0..n).map(|j| (0..m).map(|i| a[(i, j)]).collect()).collect();
    let mut v: Option<Columns<T>> = want_v.then(|| {
        (0..n)
            .map(|j| (0..n).map(|i| if i == j { Complex::one() } else { Complex::zero() }).collect())
            .collect()
    });
    if n == 1 {
        return Ok((cols, v));
    }

    let tol = T::epsilon() * T::lit(m as f64).sqrt();
    let tiny = T::min_positive_value() / T::epsilon();
    for _sweep in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let (alpha, beta, gamma) = {
                    let (ci, cj) = (&cols[i], &cols[j]);
                    let mut alpha = T::zero();
                    let mut beta = T::zero();
                    let mut gamma = Complex::<T>::zero();
                    for k in 0..m {
                        alpha = alpha + ci[k].norm_sqr();
                        beta = beta + cj[k].norm_sqr();
                        gamma = gamma + ci[k].conj() * cj[k];
                    }
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g <= tiny || g <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let phase_conj = (gamma / g).conj();
                let zeta = (beta - alpha) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + T::one().hypot(zeta));
                let c = T::one() / T::one().hypot(t);
                let s = c * t;
                rotate(&mut cols, i, j, c, s, phase_conj);
                if let Some(v) = v.as_mut() {
                    rotate(v, i, j, c, s, phase_conj);
                }
            }
        }
        if !rotated {
            return Ok((cols, v));
        }
    }
    Err(Error::SvdNoConvergence { rows: a.rows(), cols: a.cols(), sweeps: MAX_SWEEPS })
}

#[inline]
fn rotate<T: Real>(cols: &mut Columns<T>, i: usize, j: usize, c: T, s: T, phase_conj: Complex<T>) {
    let (lo, hi) = cols.split_at_mut(j);
    let (ci, cj) = (&mut lo[i], &mut hi[0]);
    for (a, b) in ci.iter_mut().zip(cj.iter_mut()) {
        let x = *a;
        let y = *b * phase_conj;
        *a = x * c - y * s;
        *b = x * s + y * c;
    }
}

/// Sorts by singular value, normalises the left vectors and completes the
/// null part to an orthonormal set. Returns `U` (`m x n`), the spectrum, and
/// the permuted columns of `V`.
fn finish<T: Real>(cols: Columns<T>, v: Columns<T>, m: usize) -> (ComplexMatrix<T>, SingularSpectrum<T>, Columns<T>) {
    let n = cols.len();
    let norms: Vec<T> = cols.iter().map(|c| col_norm(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).expect("finite"));
    let smax = norms[order[0]];
    let null_tol = smax * T::epsilon() * T::lit((m.max(n)) as f64);

    let mut u_cols: Columns<T> = Vec::with_capacity(n);
    let mut pending = Vec::new();
    for (slot, &k) in order.iter().enumerate() {
        if norms[k] > null_tol && norms[k] > T::zero() {
            let inv = T::one() / norms[k];
            u_cols.push(cols[k].iter().map(|z| *z * inv).collect());
        } else {
            u_cols.push(vec![Complex::zero(); m]);
            pending.push(slot);
        }
    }
    if !pending.is_empty() {
        complete_orthonormal(&mut u_cols, &pending);
    }

    let values = order.iter().map(|&k| norms[k]).collect();
    let v_sorted = order.iter().map(|&k| v[k].clone()).collect();
    let u = ComplexMatrix::from_fn(m, n, |i, j| u_cols[j][i]);
    (u, SingularSpectrum { values }, v_sorted)
}

/// Fills the `pending` slots with unit vectors orthogonal to every other
/// column, drawing candidates from the standard basis.
fn complete_orthonormal<T: Real>(u_cols: &mut Columns<T>, pending: &[usize]) {
    let m = u_cols[0].len();
    let mut filled: Vec<bool> = (0..u_cols.len()).map(|k| !pending.contains(&k)).collect();
    let mut basis = 0;
    for &slot in pending {
        while basis < m {
            let mut cand: Vec<Complex<T>> = vec![Complex::zero(); m];
            cand[basis] = Complex::one();
            basis += 1;
            for _ in 0..2 {
                for (k, col) in u_cols.iter().enumerate() {
                    if !filled[k] {
                        continue;
                    }
                    let proj: Complex<T> = col.iter().zip(&cand).map(|(a, b)| a.conj() * b).fold(Complex::zero(), |x, y| x + y);
                    for (c, a) in cand.iter_mut().zip(col) {
                        *c = *c - proj * a;
                    }
                }
            }
            let nrm = col_norm(&cand);
            if nrm > T::lit(0.5) {
                u_cols[slot] = cand.into_iter().map(|z| z / nrm).collect();
                filled[slot] = true;
                break;
            }
        }
    }
}
