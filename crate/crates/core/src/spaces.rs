//! Finite-dimensional Banach spaces used as coefficient spaces: complex
//! `l_2^k`, `l_1^k`, `l_inf^k` and the Schatten class `C_p` on `d x d`
//! matrices stored as `d^2` row-major coordinates.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::scalar::Real;
use crate::schatten::{lp_norm, schatten_norm, SchattenExponent};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CoefficientSpace {
    Euclidean(usize),
    L1(usize),
    LInf(usize),
    Schatten { p: SchattenExponent, d: usize },
}

impl CoefficientSpace {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Euclidean(k) | Self::L1(k) | Self::LInf(k) => k,
            Self::Schatten { d, .. } => d * d,
        }
    }

    pub fn norm<T: Real>(&self, v: &[Complex<T>]) -> T {
        debug_assert_eq!(v.len(), self.dim());
        let abs = || v.iter().map(|z| z.norm()).collect::<Vec<T>>();
        match *self {
            Self::Euclidean(_) => lp_norm(&abs(), SchattenExponent::TWO),
            Self::L1(_) => abs().into_iter().sum(),
            Self::LInf(_) => abs().into_iter().fold(T::zero(), T::max),
            Self::Schatten { p, d } => {
                let m = ComplexMatrix::new(d, d, v.to_vec()).expect("finite coefficients");
                schatten_norm(&m, p).expect("SVD of a small matrix converges")
            }
        }
    }

    /// Canonical name, e.g. `euclidean`, `l1`, `linf`, `schatten(1)`.
    pub fn kind_name(&self) -> String {
        match self {
            Self::Euclidean(_) => "euclidean".into(),
            Self::L1(_) => "l1".into(),
            Self::LInf(_) => "linf".into(),
            Self::Schatten { p, .. } => format!("schatten({p})"),
        }
    }

    /// Parses a norm name together with the coordinate dimension, checking
    /// that Schatten coefficients have a square dimension.
    pub fn from_name(name: &str, coeff_dim: usize) -> Result<Self> {
        if coeff_dim == 0 {
            return Err(Error::InvalidArgument("coefficient dimension must be positive".into()));
        }
        let name = name.trim().to_ascii_lowercase();
        match name.as_str() {
            "euclidean" | "l2" => Ok(Self::Euclidean(coeff_dim)),
            "sum" | "l1" => Ok(Self::L1(coeff_dim)),
            "max" | "linf" => Ok(Self::LInf(coeff_dim)),
            other => {
                let inner = other
                    .strip_prefix("schatten(")
                    .and_then(|s| s.strip_suffix(')'))
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown coefficient norm {other:?}")))?;
                let p: SchattenExponent = inner.parse()?;
                let d = (coeff_dim as f64).sqrt().round() as usize;
                if d * d != coeff_dim {
                    return Err(Error::InvalidArgument(format!("schatten coefficients need a square dimension, got {coeff_dim}")));
                }
                Ok(Self::Schatten { p, d })
            }
        }
    }
}

impl fmt::Display for CoefficientSpace {
    /// `euclidean:4`, `l1:3`, `linf:8`, `schatten(1):2` (the last number is
    /// `k`, or `d` for Schatten spaces).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let size = match *self {
            Self::Euclidean(k) | Self::L1(k) | Self::LInf(k) => k,
            Self::Schatten { d, .. } => d,
        };
        write!(f, "{}:{size}", self.kind_name())
    }
}

impl FromStr for CoefficientSpace {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (name, size) = s
            .rsplit_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("expected <norm>:<size>, got {s:?}")))?;
        let size: usize = size.trim().parse().map_err(|_| Error::InvalidArgument(format!("bad space size in {s:?}")))?;
        let dim = if name.trim().to_ascii_lowercase().starts_with("schatten") { size * size } else { size };
        Self::from_name(name, dim)
    }
}

impl TryFrom<String> for CoefficientSpace {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CoefficientSpace> for String {
    fn from(s: CoefficientSpace) -> String {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn norms() {
        let v = [c(3.0, 0.0), c(0.0, -4.0)];
        assert!((CoefficientSpace::Euclidean(2).norm(&v) - 5.0).abs() < 1e-15);
        assert_eq!(CoefficientSpace::L1(2).norm(&v), 7.0);
        assert_eq!(CoefficientSpace::LInf(2).norm(&v), 4.0);
        let diag = [c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-4.0, 0.0)];
        let s1 = CoefficientSpace::Schatten { p: SchattenExponent::ONE, d: 2 };
        assert!((s1.norm(&diag) - 7.0).abs() < 1e-14);
    }

    #[test]
    fn parsing() {
        assert_eq!("euclidean:3".parse::<CoefficientSpace>().unwrap(), CoefficientSpace::Euclidean(3));
        assert_eq!("linf:5".parse::<CoefficientSpace>().unwrap(), CoefficientSpace::LInf(5));
        let s: CoefficientSpace = "schatten(1):3".parse().unwrap();
        assert_eq!(s.dim(), 9);
        assert_eq!(s.to_string(), "schatten(1):3");
        assert!(CoefficientSpace::from_name("schatten(1)", 5).is_err());
        assert!(CoefficientSpace::from_name("sum", 2).is_ok());
        assert!("lp:3".parse::<CoefficientSpace>().is_err());
        let json = serde_json::to_string(&CoefficientSpace::L1(4)).unwrap();
        assert_eq!(json, "\"l1:4\"");
        assert_eq!(serde_json::from_str::<CoefficientSpace>(&json).unwrap(), CoefficientSpace::L1(4));
    }
}
