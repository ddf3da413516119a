//! Row and column square functions of finite operator sequences, plus the
//! commutative (lattice) square function on discrete measures.
//!
//! For a sequence `(x_1, ..., x_N)` of `d1 x d2` matrices the column gram is
//! `sum x_n^* x_n` (`d2 x d2`) and the row gram is `sum x_n x_n^*`
//! (`d1 x d1`). Their square roots have the same singular values as the
//! vertically and horizontally stacked matrices, which is what lets the
//! decomposition norm be phrased as a two-term matrix norm problem.

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::psd_eigenvalues;
use crate::matrix::{ComplexMatrix, MatrixLiteral};
use crate::scalar::Real;
use crate::schatten::{lp_norm, SchattenExponent};

/// Nonempty ordered family of same-shape matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSequence<T> {
    shape: (usize, usize),
    terms: Vec<ComplexMatrix<T>>,
}

impl<T: Real> OperatorSequence<T> {
    pub fn new(terms: Vec<ComplexMatrix<T>>) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::InvalidArgument("operator sequence must be nonempty".into()))?;
        let shape = first.shape();
        if let Some(bad) = terms.iter().find(|t| t.shape() != shape) {
            return Err(Error::ShapeMismatch { expected: shape, found: bad.shape() });
        }
        Ok(Self { shape, terms })
    }

    /// Sequence of `1 x 1` matrices holding the given real scalars.
    pub fn scalars(values: &[T]) -> Result<Self> {
        Self::new(values.iter().map(|&v| ComplexMatrix::from_real(1, 1, &[v])).collect::<Result<_>>()?)
    }

    pub fn random_gaussian<R: Rng + ?Sized>(len: usize, rows: usize, cols: usize, rng: &mut R) -> Self {
        assert!(len > 0);
        let terms = (0..len).map(|_| ComplexMatrix::random_gaussian(rows, cols, rng)).collect();
        Self { shape: (rows, cols), terms }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// Always false: sequences have at least one term.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    #[inline]
    pub fn terms(&self) -> &[ComplexMatrix<T>] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<ComplexMatrix<T>> {
        self.terms
    }

    pub fn map(&self, f: impl FnMut(&ComplexMatrix<T>) -> ComplexMatrix<T>) -> Self {
        let terms: Vec<_> = self.terms.iter().map(f).collect();
        Self::new(terms).expect("map preserves a uniform shape")
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|t| t.scale(s))
    }

    pub fn adjoint(&self) -> Self {
        self.map(ComplexMatrix::adjoint)
    }

    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(&ComplexMatrix<T>, &ComplexMatrix<T>) -> ComplexMatrix<T>) -> Result<Self> {
        if self.shape != other.shape || self.len() != other.len() {
            return Err(Error::InvalidArgument(format!(
                "sequences differ: {} terms of {:?} vs {} terms of {:?}",
                self.len(),
                self.shape,
                other.len(),
                other.shape
            )));
        }
        Self::new(self.terms.iter().zip(&other.terms).map(|(a, b)| f(a, b)).collect())
    }

    /// `sum_n x_n * c_n` for complex coefficients.
    pub fn combine(&self, coeffs: &[Complex<T>]) -> ComplexMatrix<T> {
        assert_eq!(coeffs.len(), self.len(), "one coefficient per term");
        let mut acc = ComplexMatrix::zeros(self.shape.0, self.shape.1);
        for (t, &c) in self.terms.iter().zip(coeffs) {
            if !c.is_zero() {
                acc.axpy(c, t);
            }
        }
        acc
    }

    /// Real pairing `sum_n Re tr(a_n^* x_n)`.
    pub fn re_pairing(&self, other: &Self) -> T {
        self.terms.iter().zip(&other.terms).map(|(a, b)| a.re_inner(b)).sum()
    }

    pub fn frobenius_sq(&self) -> T {
        self.terms.iter().map(ComplexMatrix::frobenius_sq).sum()
    }

    pub fn cast<U: Real>(&self) -> OperatorSequence<U> {
        OperatorSequence { shape: self.shape, terms: self.terms.iter().map(ComplexMatrix::cast).collect() }
    }

    pub fn to_literal(&self) -> SequenceLiteral {
        SequenceLiteral { shape: [self.shape.0, self.shape.1], terms: self.terms.iter().map(ComplexMatrix::to_literal).collect() }
    }

    pub fn from_literal(lit: &SequenceLiteral) -> Result<Self> {
        let terms = lit.terms.iter().map(ComplexMatrix::from_literal).collect::<Result<Vec<_>>>()?;
        let seq = Self::new(terms)?;
        let declared = (lit.shape[0], lit.shape[1]);
        if seq.shape != declared {
            return Err(Error::ShapeMismatch { expected: declared, found: seq.shape });
        }
        Ok(seq)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_literal(&serde_json::from_str(text)?)
    }
}

/// JSON form: `{"shape": [d1, d2], "terms": [matrix, ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SequenceLiteral {
    pub shape: [usize; 2],
    pub terms: Vec<MatrixLiteral>,
}

/// A value with an optional note that the input lies outside the range where
/// the corresponding equivalence is known to hold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Flagged<V> {
    pub value: V,
    pub warning: Option<&'static str>,
}

/// `sum_n x_n^* x_n`.
pub fn column_gram<T: Real>(seq: &OperatorSequence<T>) -> ComplexMatrix<T> {
    let d2 = seq.shape().1;
    seq.terms().iter().fold(ComplexMatrix::zeros(d2, d2), |acc, t| acc.add(&t.gram()))
}

/// `sum_n x_n x_n^*`.
pub fn row_gram<T: Real>(seq: &OperatorSequence<T>) -> ComplexMatrix<T> {
    let d1 = seq.shape().0;
    seq.terms().iter().fold(ComplexMatrix::zeros(d1, d1), |acc, t| acc.add(&t.adjoint().gram()))
}

/// `||(sum x_n^* x_n)^(1/2)||_{C_q}` from the gram eigenvalues.
pub fn column_square_norm<T: Real>(seq: &OperatorSequence<T>, q: SchattenExponent) -> Result<T> {
    gram_root_norm(&column_gram(seq), q)
}

/// `||(sum x_n x_n^*)^(1/2)||_{C_q}` from the gram eigenvalues.
pub fn row_square_norm<T: Real>(seq: &OperatorSequence<T>, q: SchattenExponent) -> Result<T> {
    gram_root_norm(&row_gram(seq), q)
}

fn gram_root_norm<T: Real>(gram: &ComplexMatrix<T>, q: SchattenExponent) -> Result<T> {
    let roots: Vec<T> = psd_eigenvalues(gram)?.into_iter().map(T::sqrt).collect();
    Ok(lp_norm(&roots, q))
}

/// `max(||(sum x^* x)^(1/2)||_{C_q}, ||(sum x x^*)^(1/2)||_{C_q})`.
pub fn chi_norm<T: Real>(seq: &OperatorSequence<T>, q: SchattenExponent) -> Result<T> {
    Ok(column_square_norm(seq, q)?.max(row_square_norm(seq, q)?))
}

/// [`chi_norm`] with a warning when `q < 2`, where it is no longer
/// equivalent to the Rademacher series norm.
pub fn chi_norm_flagged<T: Real>(seq: &OperatorSequence<T>, q: SchattenExponent) -> Result<Flagged<T>> {
    let warning = (q.value() < 2.0).then_some("q < 2: square-function equivalence is only asserted for q >= 2");
    Ok(Flagged { value: chi_norm(seq, q)?, warning })
}

/// `(N d1) x d2` vertical concatenation of the terms.
pub fn vstack<T: Real>(seq: &OperatorSequence<T>) -> ComplexMatrix<T> {
    let (d1, d2) = seq.shape();
    let mut data = Vec::with_capacity(seq.len() * d1 * d2);
    for t in seq.terms() {
        data.extend_from_slice(t.entries());
    }
    ComplexMatrix::new(seq.len() * d1, d2, data).expect("finite entries")
}

/// `d1 x (N d2)` horizontal concatenation of the terms.
pub fn hstack<T: Real>(seq: &OperatorSequence<T>) -> ComplexMatrix<T> {
    let (d1, d2) = seq.shape();
    let n = seq.len();
    ComplexMatrix::from_fn(d1, n * d2, |i, j| seq.terms()[j / d2][(i, j % d2)])
}

/// Inverse of [`vstack`] for a sequence of `n` terms of shape `(d1, d2)`.
pub fn unvstack<T: Real>(m: &ComplexMatrix<T>, n: usize) -> OperatorSequence<T> {
    let d1 = m.rows() / n;
    let d2 = m.cols();
    assert_eq!(d1 * n, m.rows());
    let terms = m.entries().chunks(d1 * d2).map(|c| ComplexMatrix::new(d1, d2, c.to_vec()).expect("finite")).collect();
    OperatorSequence::new(terms).expect("uniform shape")
}

/// Inverse of [`hstack`].
pub fn unhstack<T: Real>(m: &ComplexMatrix<T>, n: usize) -> OperatorSequence<T> {
    let d1 = m.rows();
    let d2 = m.cols() / n;
    assert_eq!(d2 * n, m.cols());
    let terms = (0..n).map(|k| ComplexMatrix::from_fn(d1, d2, |i, j| m[(i, k * d2 + j)])).collect();
    OperatorSequence::new(terms).expect("uniform shape")
}

/// `(sum_n ||x_n||_{C_2}^2)^(1/2)`.
pub fn hilbert_sum_norm<T: Real>(seq: &OperatorSequence<T>) -> T {
    let norms: Vec<T> = seq.terms().iter().map(ComplexMatrix::frobenius_norm).collect();
    lp_norm(&norms, SchattenExponent::TWO)
}

/// Real functions `x_n` sampled on the atoms of a discrete measure `mu`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteFunctionFamily<T> {
    weights: Vec<T>,
    values: Vec<Vec<T>>,
}

impl<T: Real> DiscreteFunctionFamily<T> {
    /// `values[n][s] = x_n(s)`, `weights[s] = mu(s) > 0`.
    pub fn new(weights: Vec<T>, values: Vec<Vec<T>>) -> Result<Self> {
        if weights.is_empty() || values.is_empty() {
            return Err(Error::InvalidArgument("family needs at least one point and one function".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w <= T::zero()) {
            return Err(Error::InvalidArgument("measure weights must be positive and finite".into()));
        }
        if let Some(row) = values.iter().find(|r| r.len() != weights.len()) {
            return Err(Error::InvalidArgument(format!("function has {} samples, measure has {} points", row.len(), weights.len())));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("function values must be finite".into()));
        }
        Ok(Self { weights, values })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }
}

/// `(sum_s mu(s) (sum_n x_n(s)^2)^(p/2))^(1/p)`; rejects `p = inf`.
pub fn lattice_square_norm<T: Real>(fam: &DiscreteFunctionFamily<T>, p: SchattenExponent) -> Result<T> {
    if p.is_infinite() {
        return Err(Error::InvalidExponent(p.value()));
    }
    let pe = T::lit(p.value());
    let total: T = fam
        .weights
        .iter()
        .enumerate()
        .map(|(s, &mu)| {
            let col: Vec<T> = fam.values.iter().map(|row| row[s]).collect();
            mu * lp_norm(&col, SchattenExponent::TWO).powf(pe)
        })
        .sum();
    Ok(total.powf(T::one() / pe))
}
