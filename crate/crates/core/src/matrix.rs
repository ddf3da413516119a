//! Dense row-major complex matrices.

use std::ops::{Index, IndexMut};

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense `rows x cols` complex matrix stored row-major.
///
/// Both dimensions are positive and every entry is finite; the checked
/// constructors enforce this and the arithmetic methods preserve it for
/// finite inputs.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidMatrix(format!("dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix(format!("entry {k} is not finite")));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real entries in row-major order.
    pub fn from_real(rows: usize, cols: usize, re: &[T]) -> Result<Self> {
        Self::new(rows, cols, re.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be positive");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "dimensions must be positive");
        Self { rows, cols, data: vec![Complex::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Complex::new(T::one(), T::zero()) } else { Complex::zero() })
    }

    /// Square matrix with the given real diagonal.
    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { Complex::new(diag[i], T::zero()) } else { Complex::zero() })
    }

    /// Matrix unit `E_ij` of the given shape.
    pub fn unit(rows: usize, cols: usize, i: usize, j: usize) -> Self {
        assert!(i < rows && j < cols, "matrix unit index out of range");
        let mut m = Self::zeros(rows, cols);
        m[(i, j)] = Complex::new(T::one(), T::zero());
        m
    }

    /// I.i.d. complex standard normal entries (`E|z|^2 = 1`).
    pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(T::lit(re * s), T::lit(im * s))
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn entries_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_entries(self) -> Vec<Complex<T>> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ in matmul");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    /// `self^* self` without forming the adjoint.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        for r in 0..self.rows {
            let row = &self.data[r * n..(r + 1) * n];
            for i in 0..n {
                let a = row[i].conj();
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * row[j];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in add");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in sub");
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `self += alpha * rhs`.
    pub fn axpy(&mut self, alpha: Complex<T>, rhs: &Self) {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in axpy");
        for (a, &b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + alpha * b;
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| z * s).collect() }
    }

    pub fn frobenius_sq(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius_norm(&self) -> T {
        // scaled accumulation avoids overflow for large entries
        let m = self.max_abs();
        if m.is_zero() {
            return T::zero();
        }
        let s: T = self.data.iter().map(|z| (*z / m).norm_sqr()).sum();
        m * s.sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).fold(Complex::zero(), |a, b| a + b)
    }

    /// Real part of `tr(self^* rhs)`, the real Hilbert-Schmidt pairing.
    pub fn re_inner(&self, rhs: &Self) -> T {
        assert_eq!(self.shape(), rhs.shape(), "shape mismatch in inner product");
        self.data.iter().zip(&rhs.data).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..=i).all(|j| (self[(i, j)] - self[(j, i)].conj()).norm() <= tol))
    }

    pub fn cast<U: Real>(&self) -> ComplexMatrix<U> {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))).collect(),
        }
    }

    pub fn to_literal(&self) -> MatrixLiteral {
        MatrixLiteral {
            rows: self.rows,
            cols: self.cols,
            re: self.data.iter().map(|z| z.re.as_f64()).collect(),
            im: Some(self.data.iter().map(|z| z.im.as_f64()).collect()),
        }
    }

    pub fn from_literal(lit: &MatrixLiteral) -> Result<Self> {
        let n = lit.rows * lit.cols;
        if lit.re.len() != n {
            return Err(Error::InvalidMatrix(format!("\"re\" has {} entries, expected {n}", lit.re.len())));
        }
        let zeros;
        let im = match &lit.im {
            Some(im) => im,
            None => {
                zeros = vec![0.0; n];
                &zeros
            }
        };
        if im.len() != n {
            return Err(Error::InvalidMatrix(format!("\"im\" has {} entries, expected {n}", im.len())));
        }
        let data = lit.re.iter().zip(im).map(|(&r, &i)| Complex::new(T::lit(r), T::lit(i))).collect();
        Self::new(lit.rows, lit.cols, data)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_literal(&serde_json::from_str(text)?)
    }
}

impl<T> Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// JSON form of a matrix: `{"rows": r, "cols": c, "re": [...], "im": [...]}`,
/// row-major. `im` may be omitted for real matrices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixLiteral {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = ComplexMatrix<f64>;

    #[test]
    fn rejects_bad_shapes_and_nonfinite() {
        assert!(M::new(0, 2, vec![]).is_err());
        assert!(M::new(2, 2, vec![Complex::zero(); 3]).is_err());
        assert!(M::from_real(1, 2, &[1.0, f64::NAN]).is_err());
        assert!(M::from_real(1, 1, &[f64::INFINITY]).is_err());
    }

    #[test]
    fn matmul_and_gram_agree() {
        let a = M::new(
            2,
            3,
            vec![
                Complex::new(1.0, 2.0),
                Complex::new(0.0, -1.0),
                Complex::new(3.0, 0.5),
                Complex::new(-2.0, 0.0),
                Complex::new(1.0, 1.0),
                Complex::new(0.0, 0.0),
            ],
        )
        .unwrap();
        let g = a.gram();
        let h = a.adjoint().matmul(&a);
        assert!(g.sub(&h).frobenius_norm() < 1e-14);
        assert!(g.is_hermitian(1e-14));
    }

    #[test]
    fn literal_round_trip() {
        let json = r#"{"rows": 2, "cols": 1, "re": [1.5, -2], "im": [0, 3]}"#;
        let m = M::from_json(json).unwrap();
        assert_eq!(m[(1, 0)], Complex::new(-2.0, 3.0));
        assert_eq!(M::from_literal(&m.to_literal()).unwrap(), m);
        let real = M::from_json(r#"{"rows": 1, "cols": 2, "re": [1, 2]}"#).unwrap();
        assert_eq!(real[(0, 1)], Complex::new(2.0, 0.0));
        assert!(M::from_json(r#"{"rows": 2, "cols": 2, "re": [1, 2]}"#).is_err());
    }

    #[test]
    fn frobenius_handles_large_entries() {
        let m = M::from_real(1, 2, &[3e200, 4e200]).unwrap();
        assert!((m.frobenius_norm() / 5e200 - 1.0).abs() < 1e-15);
    }
}
