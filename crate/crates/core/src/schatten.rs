//! Schatten `p`-norms and the operator absolute value.

use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::Real;
use crate::svd::{singular_values, svd};

/// Exponent `p` of the Schatten class `C_p`, `1 <= p <= inf`.
///
/// `p = inf` is the operator norm.
///
/// Serialized as a JSON number, or the string `"inf"` for `p = inf`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "ExponentRepr", into = "ExponentRepr")]
pub struct SchattenExponent(f64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<ExponentRepr> for SchattenExponent {
    type Error = Error;
    fn try_from(r: ExponentRepr) -> Result<Self> {
        match r {
            ExponentRepr::Number(p) => Self::new(p),
            ExponentRepr::Text(t) => t.parse(),
        }
    }
}

impl From<SchattenExponent> for ExponentRepr {
    fn from(p: SchattenExponent) -> Self {
        if p.is_infinite() {
            Self::Text("inf".into())
        } else {
            Self::Number(p.0)
        }
    }
}

impl SchattenExponent {
    pub const ONE: Self = Self(1.0);
    pub const TWO: Self = Self(2.0);
    pub const INFINITY: Self = Self(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self(p))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Self {
        if self.0 == 1.0 {
            Self::INFINITY
        } else if self.0.is_infinite() {
            Self::ONE
        } else {
            Self(self.0 / (self.0 - 1.0))
        }
    }
}

impl TryFrom<f64> for SchattenExponent {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        Self::new(p)
    }
}

impl From<SchattenExponent> for f64 {
    fn from(p: SchattenExponent) -> f64 {
        p.0
    }
}

impl fmt::Display for SchattenExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for SchattenExponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "Inf" | "INF" => Ok(Self::INFINITY),
            t => Self::new(t.parse().map_err(|_| Error::InvalidArgument(format!("cannot parse exponent {t:?}")))?),
        }
    }
}

/// `(sum |v_i|^p)^(1/p)` for `p < inf`, `max |v_i|` otherwise.
///
/// The sum is taken relative to the largest magnitude so that large or
/// small spectra neither overflow nor underflow.
pub fn lp_norm<T: Real>(values: &[T], p: SchattenExponent) -> T {
    let m = values.iter().map(|v| v.abs()).fold(T::zero(), T::max);
    if p.is_infinite() || m.is_zero() {
        return m;
    }
    let pe = T::lit(p.value());
    let s: T = values.iter().map(|v| (v.abs() / m).powf(pe)).sum();
    m * s.powf(T::one() / pe)
}

/// `||x||_{C_p} = (tr |x|^p)^(1/p)`, the `l_p` norm of the singular values.
pub fn schatten_norm<T: Real>(x: &ComplexMatrix<T>, p: SchattenExponent) -> Result<T> {
    if p == SchattenExponent::TWO {
        return Ok(x.frobenius_norm());
    }
    if x.rows() == 1 || x.cols() == 1 {
        // a single singular value: the Euclidean norm of the entries
        return Ok(x.frobenius_norm());
    }
    Ok(lp_norm(singular_values(x)?.values(), p))
}

/// `|x| = (x^* x)^(1/2)`, assembled from the SVD as `V diag(s) V^*`.
pub fn abs_op<T: Real>(x: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>> {
    let d = svd(x)?;
    let n = x.cols();
    let s = d.s.values();
    Ok(ComplexMatrix::from_fn(n, n, |i, j| {
        (0..s.len()).fold(Complex::zero(), |acc, k| acc + d.vh[(k, i)].conj() * d.vh[(k, j)] * s[k])
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponent_json() {
        assert_eq!(serde_json::to_string(&SchattenExponent::INFINITY).unwrap(), "\"inf\"");
        assert_eq!(serde_json::to_string(&SchattenExponent::new(1.5).unwrap()).unwrap(), "1.5");
        let v: Vec<SchattenExponent> = serde_json::from_str(r#"[1, 2.5, "inf"]"#).unwrap();
        assert!(v[2].is_infinite() && v[1].value() == 2.5);
        assert!(serde_json::from_str::<SchattenExponent>("0.5").is_err());
    }

    type M = ComplexMatrix<f64>;

    #[test]
    fn exponent_validation() {
        assert!(SchattenExponent::new(0.5).is_err());
        assert!(SchattenExponent::new(f64::NAN).is_err());
        assert!(SchattenExponent::new(f64::INFINITY).unwrap().is_infinite());
        assert_eq!(SchattenExponent::ONE.conjugate(), SchattenExponent::INFINITY);
        assert_eq!(SchattenExponent::INFINITY.conjugate(), SchattenExponent::ONE);
        assert_relative_eq!(SchattenExponent::new(1.5).unwrap().conjugate().value(), 3.0);
        assert_eq!("inf".parse::<SchattenExponent>().unwrap(), SchattenExponent::INFINITY);
        assert!("0.3".parse::<SchattenExponent>().is_err());
    }

    #[test]
    fn diagonal_examples() {
        let d = M::from_diag(&[3.0, 4.0]);
        assert_relative_eq!(schatten_norm(&d, SchattenExponent::ONE).unwrap(), 7.0, epsilon = 1e-14);
        assert_relative_eq!(schatten_norm(&d, SchattenExponent::INFINITY).unwrap(), 4.0, epsilon = 1e-14);
        assert_relative_eq!(schatten_norm(&M::identity(2), SchattenExponent::TWO).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let p3 = SchattenExponent::new(3.0).unwrap();
        assert_relative_eq!(schatten_norm(&d, p3).unwrap(), 91f64.cbrt(), epsilon = 1e-14);
    }

    #[test]
    fn abs_of_diagonal_and_zero() {
        let a = abs_op(&M::from_diag(&[-2.0, 5.0])).unwrap();
        assert!(a.sub(&M::from_diag(&[2.0, 5.0])).frobenius_norm() < 1e-14);
        let z = abs_op(&M::zeros(3, 2)).unwrap();
        assert_eq!(z.shape(), (2, 2));
        assert_eq!(z.frobenius_norm(), 0.0);
    }

    #[test]
    fn lp_norm_scales() {
        let p = SchattenExponent::new(1.5).unwrap();
        let v = [1e-200, 2e-200];
        assert_relative_eq!(lp_norm(&v, p) / 1e-200, lp_norm(&[1.0, 2.0], p), max_relative = 1e-14);
        assert_eq!(lp_norm::<f64>(&[], p), 0.0);
    }
}
