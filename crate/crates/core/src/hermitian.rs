//! Cyclic Jacobi eigensolver for Hermitian matrices.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// `a = V diag(values) V^*`, eigenvalues ascending, eigenvectors in the
/// columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    pub values: Vec<T>,
    pub vectors: ComplexMatrix<T>,
}

pub fn hermitian_eigen<T: Real>(a: &ComplexMatrix<T>) -> Result<HermitianEigen<T>> {
    let (values, vectors) = jacobi(a, true)?;
    Ok(HermitianEigen { values, vectors: vectors.expect("vectors requested") })
}

pub fn hermitian_eigenvalues<T: Real>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    Ok(jacobi(a, false)?.0)
}

/// Eigenvalues of a positive semidefinite matrix. Values below
/// `1e-12 * trace`, round-off negatives included, are clamped to zero.
pub fn psd_eigenvalues<T: Real>(a: &ComplexMatrix<T>) -> Result<Vec<T>> {
    let mut vals = hermitian_eigenvalues(a)?;
    let tr: T = vals.iter().map(|v| v.abs()).sum();
    let floor = T::lit(1e-12) * tr;
    for v in vals.iter_mut() {
        if *v < floor {
            *v = T::zero();
        }
    }
    Ok(vals)
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt<T: Real>(a: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let HermitianEigen { values, vectors } = hermitian_eigen(a)?;
    let tr: T = values.iter().map(|v| v.abs()).sum();
    let floor = T::lit(1e-12) * tr;
    let roots: Vec<T> = values.iter().map(|&v| if v < floor { T::zero() } else { v.sqrt() }).collect();
    let n = a.rows();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).fold(Complex::zero(), |acc, k| acc + vectors[(i, k)] * vectors[(j, k)].conj() * roots[k])
    }))
}

fn jacobi<T: Real>(a: &ComplexMatrix<T>, want_vectors: bool) -> Result<(Vec<T>, Option<ComplexMatrix<T>>)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::ShapeMismatch { expected: (n, n), found: a.shape() });
    }
    let mut w = a.clone();
    // symmetrise: the eigensolver sees (a + a^*)/2
    let half = T::lit(0.5);
    for i in 0..n {
        w[(i, i)] = Complex::new(w[(i, i)].re, T::zero());
        for j in 0..i {
            let z = (a[(i, j)] + a[(j, i)].conj()) * half;
            w[(i, j)] = z;
            w[(j, i)] = z.conj();
        }
    }
    let mut v = want_vectors.then(|| ComplexMatrix::<T>::identity(n));

    let total = w.frobenius_sq();
    let eps = T::epsilon();
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: T = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| w[(i, j)].norm_sqr()).sum();
        if off <= eps * eps * total || total.is_zero() {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = w[(p, q)];
                let g = apq.norm();
                let scale = w[(p, p)].re.abs() + w[(q, q)].re.abs();
                if g.is_zero() || g <= eps * eps * scale {
                    w[(p, q)] = Complex::zero();
                    w[(q, p)] = Complex::zero();
                    continue;
                }
                let phase_conj = (apq / g).conj();
                let theta = (w[(q, q)].re - w[(p, p)].re) / (T::lit(2.0) * g);
                let t = theta.signum() / (theta.abs() + T::one().hypot(theta));
                let c = T::one() / T::one().hypot(t);
                let s = c * t;
                // Q restricted to (p, q)
                let qpp = Complex::new(c, T::zero());
                let qpq = Complex::new(s, T::zero());
                let qqp = phase_conj * (-s);
                let qqq = phase_conj * c;
                for k in 0..n {
                    let (akp, akq) = (w[(k, p)], w[(k, q)]);
                    w[(k, p)] = akp * qpp + akq * qqp;
                    w[(k, q)] = akp * qpq + akq * qqq;
                }
                for k in 0..n {
                    let (apk, aqk) = (w[(p, k)], w[(q, k)]);
                    w[(p, k)] = qpp.conj() * apk + qqp.conj() * aqk;
                    w[(q, k)] = qpq.conj() * apk + qqq.conj() * aqk;
                }
                w[(p, q)] = Complex::zero();
                w[(q, p)] = Complex::zero();
                w[(p, p)] = Complex::new(w[(p, p)].re, T::zero());
                w[(q, q)] = Complex::new(w[(q, q)].re, T::zero());
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = vkp * qpp + vkq * qqp;
                        v[(k, q)] = vkp * qpq + vkq * qqq;
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::EigenNoConvergence { dim: n });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| w[(i, i)].re.partial_cmp(&w[(j, j)].re).expect("finite"));
    let values = order.iter().map(|&i| w[(i, i)].re).collect();
    let vectors = v.map(|v| ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]));
    Ok((values, vectors))
}
