//! Vector-valued trigonometric polynomials on the truncated torus `T^M`,
//! the filtration `E_n` generated by the first `n + 1` coordinates, Hardy
//! functions and their martingale differences.
//!
//! A term `c e^{i nu . t}` with multi-index `nu` is measurable for `E_n`
//! exactly when `nu` vanishes beyond coordinate `n`, so conditional
//! expectations and martingale differences are coefficient filters. A
//! polynomial is Hardy when, for every nonzero `nu` in its support, the last
//! nonzero frequency is positive.

pub mod umd;

use std::collections::BTreeMap;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::series::{mean_and_se, EstimateReport};
use crate::spaces::CoefficientSpace;
use rand::Rng;

/// Frequency vector with trailing zeros removed; the constant term is the
/// empty index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct MultiIndex(Vec<i64>);

impl MultiIndex {
    pub fn new(mut freqs: Vec<i64>) -> Self {
        while freqs.last() == Some(&0) {
            freqs.pop();
        }
        Self(freqs)
    }

    pub fn constant() -> Self {
        Self(Vec::new())
    }

    pub fn freqs(&self) -> &[i64] {
        &self.0
    }

    /// Largest coordinate with a nonzero frequency, `None` for the constant.
    pub fn level(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn get(&self, coord: usize) -> i64 {
        self.0.get(coord).copied().unwrap_or(0)
    }

    /// Index with `delta` added at `coord`.
    pub fn shifted(&self, coord: usize, delta: i64) -> Self {
        let mut f = self.0.clone();
        if f.len() <= coord {
            f.resize(coord + 1, 0);
        }
        f[coord] += delta;
        Self::new(f)
    }

    fn phase(&self, t: &[f64]) -> f64 {
        self.0.iter().zip(t).map(|(&k, &x)| k as f64 * x).sum()
    }
}

/// How `L^2(T^M)` integrals are evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quadrature {
    /// Uniform i.i.d. points; node `i` drawn from stream `i` of `seed`.
    MonteCarlo { samples: usize, seed: u64 },
    /// `points_per_axis^M` equispaced angles; exact for Euclidean
    /// coefficients once `points_per_axis > 2 * degree`.
    TensorGrid { points_per_axis: usize },
}

const MAX_GRID_NODES: usize = 20_000_000;

/// `E`-valued trigonometric polynomial on `T^M`.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusPolynomial<T> {
    torus_dim: usize,
    space: CoefficientSpace,
    terms: BTreeMap<MultiIndex, Vec<Complex<T>>>,
}

impl<T: Real> TorusPolynomial<T> {
    pub fn zero(torus_dim: usize, space: CoefficientSpace) -> Self {
        Self { torus_dim, space, terms: BTreeMap::new() }
    }

    /// Adds `coeff * e^{i freq . t}`; coefficients on equal indices are
    /// summed and exact zeros are dropped from the support.
    pub fn add_term(&mut self, freq: MultiIndex, coeff: Vec<Complex<T>>) -> Result<()> {
        if coeff.len() != self.space.dim() {
            return Err(Error::InvalidArgument(format!(
                "coefficient has {} entries, space has dimension {}",
                coeff.len(),
                self.space.dim()
            )));
        }
        if freq.freqs().len() > self.torus_dim {
            return Err(Error::InvalidArgument(format!(
                "frequency {:?} uses more than M = {} coordinates",
                freq.freqs(),
                self.torus_dim
            )));
        }
        if coeff.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("coefficients must be finite".into()));
        }
        let slot = self.terms.entry(freq).or_insert_with(|| vec![Complex::new(T::zero(), T::zero()); coeff.len()]);
        for (s, c) in slot.iter_mut().zip(coeff) {
            *s = *s + c;
        }
        self.terms.retain(|_, c| c.iter().any(|z| z.re != T::zero() || z.im != T::zero()));
        Ok(())
    }

    pub fn torus_dim(&self) -> usize {
        self.torus_dim
    }

    pub fn space(&self) -> CoefficientSpace {
        self.space
    }

    pub fn terms(&self) -> &BTreeMap<MultiIndex, Vec<Complex<T>>> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest absolute frequency in the support.
    pub fn degree(&self) -> u64 {
        self.terms.keys().flat_map(|k| k.freqs().iter().map(|f| f.unsigned_abs())).max().unwrap_or(0)
    }

    fn filtered(&self, keep: impl Fn(&MultiIndex) -> bool) -> Self {
        Self {
            torus_dim: self.torus_dim,
            space: self.space,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    /// `E_n f`: the terms depending only on `t_0, ..., t_n`; `n = -1` keeps
    /// the constant term.
    pub fn conditional_expectation(&self, n: i64) -> Self {
        assert!(n >= -1, "conditional expectation level must be >= -1");
        self.filtered(|k| (k.freqs().len() as i64) <= n + 1)
    }

    pub fn is_hardy(&self) -> bool {
        self.terms.keys().all(|k| k.freqs().last().is_none_or(|&f| f > 0))
    }

    /// `d_n f = E_n f - E_{n-1} f` for `n = 0..M`.
    pub fn martingale_differences(&self) -> Vec<Self> {
        (0..self.torus_dim).map(|n| self.filtered(|k| k.level() == Some(n))).collect()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.terms.values_mut().for_each(|v| v.iter_mut().for_each(|z| *z = *z * s));
        out.terms.retain(|_, c| c.iter().any(|z| z.re != T::zero() || z.im != T::zero()));
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.torus_dim != other.torus_dim || self.space != other.space {
            return Err(Error::InvalidArgument("polynomials live on different tori or coefficient spaces".into()));
        }
        Ok(())
    }

    /// `f(t)` for `t` in `T^M`.
    pub fn evaluate(&self, t: &[f64]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.space.dim()];
        for (k, c) in &self.terms {
            let ph = k.phase(t);
            let e = Complex::new(T::lit(ph.cos()), T::lit(ph.sin()));
            for (o, z) in out.iter_mut().zip(c) {
                *o = *o + *z * e;
            }
        }
        out
    }

    /// `(sum_nu ||c_nu||_2^2)^(1/2)`, the `L^2` norm for Euclidean
    /// coefficients by Parseval.
    pub fn parseval_norm(&self) -> T {
        self.terms.values().flatten().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// `(int ||f(t)||_E^2 dm(t))^(1/2)`. Euclidean coefficients use Parseval
    /// and are exact; other norms use `quad`.
    pub fn l2_norm(&self, quad: Quadrature) -> Result<EstimateReport> {
        if matches!(self.space, CoefficientSpace::Euclidean(_)) {
            return Ok(EstimateReport::exact(self.parseval_norm().as_f64(), self.terms.len() as u64));
        }
        self.l2_norm_numeric(quad)
    }

    /// [`Self::l2_norm`] by quadrature even when Parseval applies.
    pub fn l2_norm_numeric(&self, quad: Quadrature) -> Result<EstimateReport> {
        let sq = squared_norms_at_nodes(&[self], quad)?;
        Ok(report_from_squares(&sq[0], quad, self.exact_on_grid(quad)))
    }

    fn exact_on_grid(&self, quad: Quadrature) -> bool {
        matches!(self.space, CoefficientSpace::Euclidean(_))
            && matches!(quad, Quadrature::TensorGrid { points_per_axis } if points_per_axis as u64 > 2 * self.degree())
    }

    pub fn cast<U: Real>(&self) -> TorusPolynomial<U> {
        TorusPolynomial {
            torus_dim: self.torus_dim,
            space: self.space,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.iter().map(|z| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))).collect()))
                .collect(),
        }
    }

    pub fn to_literal(&self) -> PolynomialLiteral {
        PolynomialLiteral {
            torus_dim: self.torus_dim,
            coeff_dim: self.space.dim(),
            norm: self.space.kind_name(),
            terms: self
                .terms
                .iter()
                .map(|(k, v)| {
                    let mut freq = k.freqs().to_vec();
                    freq.resize(self.torus_dim, 0);
                    TermLiteral {
                        freq,
                        re: v.iter().map(|z| z.re.as_f64()).collect(),
                        im: Some(v.iter().map(|z| z.im.as_f64()).collect()),
                    }
                })
                .collect(),
        }
    }

    pub fn from_literal(lit: &PolynomialLiteral) -> Result<Self> {
        let space = CoefficientSpace::from_name(&lit.norm, lit.coeff_dim)?;
        let mut f = Self::zero(lit.torus_dim, space);
        for term in &lit.terms {
            let im = term.im.clone().unwrap_or_else(|| vec![0.0; term.re.len()]);
            if im.len() != term.re.len() {
                return Err(Error::InvalidArgument("term \"re\" and \"im\" lengths differ".into()));
            }
            let coeff = term.re.iter().zip(&im).map(|(&r, &i)| Complex::new(T::lit(r), T::lit(i))).collect();
            f.add_term(MultiIndex::new(term.freq.clone()), coeff)?;
        }
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_literal(&serde_json::from_str(text)?)
    }
}

/// JSON form: `{"M": m, "coeff_dim": k, "norm": "...", "terms": [{"freq": [..], "re": [..], "im": [..]}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialLiteral {
    #[serde(rename = "M")]
    pub torus_dim: usize,
    pub coeff_dim: usize,
    pub norm: String,
    pub terms: Vec<TermLiteral>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermLiteral {
    pub freq: Vec<i64>,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

/// Quadrature nodes on `T^M`.
pub(crate) fn quadrature_nodes(torus_dim: usize, quad: Quadrature) -> Result<Vec<Vec<f64>>> {
    match quad {
        Quadrature::MonteCarlo { samples, seed } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("quadrature needs at least one sample".into()));
            }
            Ok((0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64);
                    (0..torus_dim).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
                })
                .collect())
        }
        Quadrature::TensorGrid { points_per_axis: p } => {
            if p == 0 {
                return Err(Error::InvalidArgument("tensor grid needs at least one point per axis".into()));
            }
            let total = (p as f64).powi(torus_dim as i32);
            if total > MAX_GRID_NODES as f64 {
                return Err(Error::TooLarge(format!("{p}^{torus_dim} grid nodes")));
            }
            let total = total as usize;
            let h = std::f64::consts::TAU / p as f64;
            Ok((0..total)
                .map(|mut idx| {
                    (0..torus_dim)
                        .map(|_| {
                            let k = idx % p;
                            idx /= p;
                            k as f64 * h
                        })
                        .collect()
                })
                .collect())
        }
    }
}

/// `||f(t)||_E^2` at every node, for each polynomial, on shared nodes.
pub(crate) fn squared_norms_at_nodes<T: Real>(polys: &[&TorusPolynomial<T>], quad: Quadrature) -> Result<Vec<Vec<f64>>> {
    let torus_dim = polys.first().map_or(0, |f| f.torus_dim);
    let nodes = quadrature_nodes(torus_dim, quad)?;
    Ok(polys
        .iter()
        .map(|f| {
            nodes
                .par_iter()
                .map(|t| {
                    let v = f.space.norm(&f.evaluate(t)).as_f64();
                    v * v
                })
                .collect()
        })
        .collect())
}

pub(crate) fn report_from_squares(sq: &[f64], quad: Quadrature, exact: bool) -> EstimateReport {
    match quad {
        Quadrature::MonteCarlo { seed, .. } => EstimateReport::from_moment(&sq.iter().map(|v| v.sqrt()).collect::<Vec<_>>(), 2.0, seed),
        Quadrature::TensorGrid { .. } => {
            let (mean, _) = mean_and_se(sq.iter().copied());
            EstimateReport { exact, ..EstimateReport::exact(mean.sqrt(), sq.len() as u64) }
        }
    }
}

/// Random Hardy polynomial with `terms` terms of absolute frequency at most
/// `degree` per coordinate and complex Gaussian coefficients.
pub fn random_hardy_polynomial<R: Rng + ?Sized>(
    torus_dim: usize,
    space: CoefficientSpace,
    degree: u32,
    terms: usize,
    rng: &mut R,
) -> TorusPolynomial<f64> {
    let mut f = TorusPolynomial::zero(torus_dim, space);
    let k = space.dim();
    let deg = degree as i64;
    for _ in 0..terms {
        let freq = if deg == 0 || torus_dim == 0 {
            MultiIndex::constant()
        } else {
            let level = rng.random_range(0..torus_dim);
            let mut fr: Vec<i64> = (0..level).map(|_| rng.random_range(-deg..=deg)).collect();
            fr.push(rng.random_range(1..=deg));
            MultiIndex::new(fr)
        };
        let coeff = (0..k).map(|_| complex_gaussian(rng)).collect();
        f.add_term(freq, coeff).expect("valid by construction");
    }
    f
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

#[cfg(test)]
mod tests {
    use super::*;

    type P = TorusPolynomial<f64>;

    fn one(k: usize) -> Vec<Complex<f64>> {
        let mut v = vec![Complex::new(0.0, 0.0); k];
        v[0] = Complex::new(1.0, 0.0);
        v
    }

    fn poly(m: usize, space: CoefficientSpace, terms: &[(&[i64], Vec<Complex<f64>>)]) -> P {
        let mut f = P::zero(m, space);
        for (fr, c) in terms {
            f.add_term(MultiIndex::new(fr.to_vec()), c.clone()).unwrap();
        }
        f
    }

    #[test]
    fn multi_index_canonical() {
        assert_eq!(MultiIndex::new(vec![1, 0, 0]), MultiIndex::new(vec![1]));
        assert_eq!(MultiIndex::new(vec![0, 0]).level(), None);
        assert_eq!(MultiIndex::new(vec![0, 2]).level(), Some(1));
        assert_eq!(MultiIndex::new(vec![0, 1]).shifted(1, -1), MultiIndex::constant());
    }

    #[test]
    fn conditional_expectation_examples() {
        let e = CoefficientSpace::Euclidean(1);
        let f = poly(2, e, &[(&[1], one(1)), (&[0, 1], one(1))]);
        assert_eq!(f.conditional_expectation(0), poly(2, e, &[(&[1], one(1))]));
        assert_eq!(f.conditional_expectation(5), f);
        assert!(f.conditional_expectation(-1).is_zero());
    }

    #[test]
    fn hardy_examples() {
        let e = CoefficientSpace::Euclidean(1);
        assert!(!poly(1, e, &[(&[-1], one(1))]).is_hardy());
        assert!(poly(1, e, &[(&[], one(1))]).is_hardy());
        assert!(poly(2, e, &[(&[-1, 1], one(1))]).is_hardy());
    }

    #[test]
    fn differences_examples() {
        let e = CoefficientSpace::Euclidean(2);
        let f = poly(3, e, &[(&[1], one(2))]);
        let d = f.martingale_differences();
        assert_eq!(d[0], f);
        assert!(d[1].is_zero() && d[2].is_zero());
        let c = poly(3, e, &[(&[], one(2))]);
        assert!(c.martingale_differences().iter().all(P::is_zero));
    }

    #[test]
    fn parseval_examples() {
        let e = CoefficientSpace::Euclidean(2);
        let v = vec![Complex::new(0.6, 0.0), Complex::new(0.0, 0.8)];
        let f = poly(1, e, &[(&[1], v.clone())]);
        let quad = Quadrature::MonteCarlo { samples: 10, seed: 0 };
        let r = f.l2_norm(quad).unwrap();
        assert!(r.exact && (r.estimate - 1.0).abs() < 1e-15);
        let g = poly(2, e, &[(&[1], v.clone()), (&[0, 1], v)]);
        assert!((g.l2_norm(quad).unwrap().estimate - 2f64.sqrt()).abs() < 1e-15);
        let grid = g.l2_norm_numeric(Quadrature::TensorGrid { points_per_axis: 3 }).unwrap();
        assert!(grid.exact && (grid.estimate - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn literal_round_trip_and_validation() {
        let json = r#"{"M": 2, "coeff_dim": 4, "norm": "schatten(1)",
                       "terms": [{"freq": [1, 0], "re": [1, 0, 0, 1]}, {"freq": [-1, 2], "re": [0, 1, 0, 0], "im": [0, 0, 1, 0]}]}"#;
        let f = P::from_json(json).unwrap();
        assert_eq!(f.terms().len(), 2);
        assert!(f.is_hardy());
        assert_eq!(P::from_literal(&f.to_literal()).unwrap(), f);
        assert!(P::from_json(r#"{"M": 1, "coeff_dim": 3, "norm": "schatten(1)", "terms": []}"#).is_err());
        assert!(P::from_json(r#"{"M": 1, "coeff_dim": 1, "norm": "l1", "terms": [{"freq": [0, 1], "re": [1]}]}"#).is_err());
        assert!(P::from_json(r#"{"M": 1, "coeff_dim": 2, "norm": "l1", "terms": [{"freq": [1], "re": [1]}]}"#).is_err());
    }

    #[test]
    fn cancelling_terms_leave_the_support() {
        let e = CoefficientSpace::Euclidean(1);
        let mut f = poly(1, e, &[(&[1], one(1))]);
        f.add_term(MultiIndex::new(vec![1]), vec![Complex::new(-1.0, 0.0)]).unwrap();
        assert!(f.is_zero());
    }
}
