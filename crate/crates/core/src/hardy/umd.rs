//! Martingale transforms `sum_n eps_n d_n f` of Hardy polynomials and
//! lower bounds for the analytic-UMD constant `K(E)`.
//!
//! Level 0 is excluded from the transform unless requested; when included it
//! always carries the sign `+1`. The rotated variant multiplies `d_n f` by
//! `e^{-i t_n}`. For Euclidean coefficients the plain transform has norm
//! `(sum_{n >= 1} ||d_n f||^2)^(1/2)` for every choice of signs, while the
//! rotated one only keeps that value after averaging over signs: rotation
//! can move terms of different levels onto the same frequency.

use num_complex::Complex;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{quadrature_nodes, random_hardy_polynomial, report_from_squares, PolynomialLiteral, Quadrature, TorusPolynomial};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::scalar::Real;
use crate::series::EstimateReport;
use crate::spaces::CoefficientSpace;

/// Largest number of free signs searched exhaustively.
pub const MAX_EXHAUSTIVE_LEVELS: usize = 12;
/// Largest number of signs averaged exactly.
pub const MAX_AVERAGED_LEVELS: usize = 16;

/// Signs `eps_1, ..., eps_{M-1}` for martingale levels `n >= 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidArgument(format!("signs must be +-1, got {signs:?}")));
        }
        Ok(Self(signs))
    }

    pub fn all_plus(levels: usize) -> Self {
        Self(vec![1; levels])
    }

    /// Bit `k` of `mask` set means `eps_{k+1} = -1`.
    pub fn from_mask(levels: usize, mask: u64) -> Self {
        Self((0..levels).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    /// Sign of level `n >= 1`.
    pub fn level(&self, n: usize) -> i8 {
        self.0[n - 1]
    }

    pub fn flipped(&self, k: usize) -> Self {
        let mut s = self.0.clone();
        s[k] = -s[k];
        Self(s)
    }
}

impl std::ops::Neg for &SignVector {
    type Output = SignVector;
    fn neg(self) -> SignVector {
        SignVector(self.0.iter().map(|s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SignVector {
    type Error = Error;
    fn try_from(v: Vec<i8>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SignVector> for Vec<i8> {
    fn from(s: SignVector) -> Vec<i8> {
        s.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOptions {
    /// Multiply `d_n f` by `e^{-i t_n}`.
    pub rotated: bool,
    /// Add `d_0 f` (with sign `+1`) to the transform.
    pub include_level_zero: bool,
}

fn check_input<T: Real>(f: &TorusPolynomial<T>, signs: &SignVector) -> Result<()> {
    if !f.is_hardy() {
        return Err(Error::NotHardy("martingale transforms are defined for Hardy polynomials".into()));
    }
    let levels = f.torus_dim().saturating_sub(1);
    if signs.len() != levels {
        return Err(Error::InvalidArgument(format!("expected {levels} signs for M = {}, got {}", f.torus_dim(), signs.len())));
    }
    Ok(())
}

/// Level-`n` difference, rotated if requested.
fn level_term<T: Real>(d: &TorusPolynomial<T>, n: usize, rotated: bool) -> TorusPolynomial<T> {
    if !rotated {
        return d.clone();
    }
    let mut out = TorusPolynomial::zero(d.torus_dim(), d.space());
    for (k, c) in d.terms() {
        out.add_term(k.shifted(n, -1), c.clone()).expect("same space");
    }
    out
}

/// Levels entering the transform and their signs.
fn signed_levels(m: usize, signs: &SignVector, opts: TransformOptions) -> Vec<(usize, i8)> {
    let first = if opts.include_level_zero { 0 } else { 1 };
    (first..m).map(|n| (n, if n == 0 { 1 } else { signs.level(n) })).collect()
}

/// `sum_{n >= 1} eps_n rho_n d_n f`, with `rho_n = e^{-i t_n}` when rotated.
pub fn umd_transform<T: Real>(f: &TorusPolynomial<T>, signs: &SignVector, opts: TransformOptions) -> Result<TorusPolynomial<T>> {
    check_input(f, signs)?;
    let diffs = f.martingale_differences();
    let mut out = TorusPolynomial::zero(f.torus_dim(), f.space());
    for (n, s) in signed_levels(f.torus_dim(), signs, opts) {
        let term = level_term(&diffs[n], n, opts.rotated);
        let sign = Complex::new(T::lit(s as f64), T::zero());
        for (k, c) in term.terms() {
            out.add_term(k.clone(), c.iter().map(|z| *z * sign).collect())?;
        }
    }
    Ok(out)
}

/// `L^2` norm of [`umd_transform`].
pub fn umd_transform_norm<T: Real>(
    f: &TorusPolynomial<T>,
    signs: &SignVector,
    opts: TransformOptions,
    quad: Quadrature,
) -> Result<EstimateReport> {
    umd_transform(f, signs, opts)?.l2_norm(quad)
}

/// `(E_eps int ||sum eps_n rho_n d_n f||^2 dm)^(1/2)` with every included
/// level (level 0 as well, when requested) carrying an independent sign.
pub fn averaged_transform_norm<T: Real>(f: &TorusPolynomial<T>, opts: TransformOptions, quad: Quadrature) -> Result<EstimateReport> {
    if !f.is_hardy() {
        return Err(Error::NotHardy("martingale transforms are defined for Hardy polynomials".into()));
    }
    let m = f.torus_dim();
    let first = if opts.include_level_zero { 0 } else { 1 };
    let levels: Vec<usize> = (first..m).collect();
    if levels.len() > MAX_AVERAGED_LEVELS {
        return Err(Error::TooLarge(format!("{} levels for exact sign averaging", levels.len())));
    }
    let diffs = f.martingale_differences();
    let terms: Vec<TorusPolynomial<T>> = levels.iter().map(|&n| level_term(&diffs[n], n, opts.rotated)).collect();
    let patterns = 1u64 << levels.len();
    let combine = |mask: u64| {
        let mut g = TorusPolynomial::zero(m, f.space());
        for (k, t) in terms.iter().enumerate() {
            let s = if mask >> k & 1 == 1 { -T::one() } else { T::one() };
            g = g.add(&t.scale(Complex::new(s, T::zero()))).expect("same space");
        }
        g
    };
    if matches!(f.space(), CoefficientSpace::Euclidean(_)) {
        let mean = (0..patterns).map(|mask| combine(mask).parseval_norm().as_f64().powi(2)).sum::<f64>() / patterns as f64;
        return Ok(EstimateReport::exact(mean.sqrt(), patterns));
    }
    let nodes = quadrature_nodes(m, quad)?;
    let space = f.space();
    let per_node: Vec<f64> = nodes
        .par_iter()
        .map(|t| {
            let vals: Vec<Vec<Complex<T>>> = terms.iter().map(|g| g.evaluate(t)).collect();
            (0..patterns)
                .map(|mask| {
                    let v = signed_sum(&vals, |k| mask >> k & 1 == 1, space.dim());
                    space.norm(&v).as_f64().powi(2)
                })
                .sum::<f64>()
                / patterns as f64
        })
        .collect();
    Ok(report_from_squares(&per_node, quad, false))
}

fn signed_sum<T: Real>(vals: &[Vec<Complex<T>>], negative: impl Fn(usize) -> bool, dim: usize) -> Vec<Complex<T>> {
    let mut v = vec![Complex::new(T::zero(), T::zero()); dim];
    for (k, x) in vals.iter().enumerate() {
        let neg = negative(k);
        for (a, b) in v.iter_mut().zip(x) {
            *a = if neg { *a - *b } else { *a + *b };
        }
    }
    v
}

/// Parameters of the random search for a lower bound on `K(E)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmdSearchConfig {
    pub space: CoefficientSpace,
    /// Torus truncation `M`.
    pub torus_dim: usize,
    /// Largest absolute frequency per coordinate.
    pub degree: u32,
    /// Terms per random polynomial.
    pub terms: usize,
    pub trials: usize,
    /// Sign evaluations per candidate in greedy mode.
    pub sign_search_budget: usize,
    pub quadrature_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub options: TransformOptions,
}

impl Default for UmdSearchConfig {
    fn default() -> Self {
        Self {
            space: CoefficientSpace::Euclidean(2),
            torus_dim: 4,
            degree: 2,
            terms: 8,
            trials: 20,
            sign_search_budget: 256,
            quadrature_samples: 2000,
            seed: 0,
            options: TransformOptions::default(),
        }
    }
}

/// Best ratio found with its witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmdEstimate {
    pub lower_bound: f64,
    pub std_error: f64,
    pub exact: bool,
    pub witness: PolynomialLiteral,
    pub signs: SignVector,
    pub candidates: usize,
    pub seed: u64,
}

/// Per-candidate evaluator sharing quadrature nodes across sign vectors.
struct Candidate<'a> {
    f: &'a TorusPolynomial<f64>,
    opts: TransformOptions,
    quad: Quadrature,
    /// `rho_n d_n f` at every node, for levels `0..M`; empty for Euclidean.
    node_values: Vec<Vec<Vec<Complex<f64>>>>,
    denominator: EstimateReport,
}

impl<'a> Candidate<'a> {
    fn new(f: &'a TorusPolynomial<f64>, opts: TransformOptions, quad: Quadrature) -> Result<Self> {
        let denominator = f.l2_norm(quad)?;
        let node_values = if matches!(f.space(), CoefficientSpace::Euclidean(_)) {
            Vec::new()
        } else {
            let diffs = f.martingale_differences();
            let terms: Vec<_> = diffs.iter().enumerate().map(|(n, d)| level_term(d, n, opts.rotated)).collect();
            quadrature_nodes(f.torus_dim(), quad)?
                .par_iter()
                .map(|t| terms.iter().map(|g| g.evaluate(t)).collect())
                .collect()
        };
        Ok(Self { f, opts, quad, node_values, denominator })
    }

    fn numerator(&self, signs: &SignVector) -> Result<EstimateReport> {
        if self.node_values.is_empty() {
            return umd_transform_norm(self.f, signs, self.opts, self.quad);
        }
        let levels = signed_levels(self.f.torus_dim(), signs, self.opts);
        let space = self.f.space();
        let sq: Vec<f64> = self
            .node_values
            .par_iter()
            .map(|vals| {
                let mut v = vec![Complex::new(0.0, 0.0); space.dim()];
                for &(n, s) in &levels {
                    for (a, b) in v.iter_mut().zip(&vals[n]) {
                        *a += *b * s as f64;
                    }
                }
                space.norm(&v).powi(2)
            })
            .collect();
        Ok(report_from_squares(&sq, self.quad, false))
    }

    /// Ratio with a delta-method standard error treating the two estimates
    /// as independent.
    fn ratio(&self, signs: &SignVector) -> Result<(f64, f64, bool)> {
        let num = self.numerator(signs)?;
        let den = &self.denominator;
        if den.estimate == 0.0 {
            return Ok((0.0, 0.0, true));
        }
        let r = num.estimate / den.estimate;
        let rel = |e: &EstimateReport| if e.estimate > 0.0 { e.std_error / e.estimate } else { 0.0 };
        let se = r * (rel(&num).powi(2) + rel(den).powi(2)).sqrt();
        Ok((r, se, num.exact && den.exact))
    }
}

struct Best {
    ratio: f64,
    std_error: f64,
    exact: bool,
    signs: SignVector,
}

fn search_signs<R: Rng>(cand: &Candidate<'_>, budget: usize, rng: &mut R) -> Result<Best> {
    let levels = cand.f.torus_dim().saturating_sub(1);
    let eval = |s: SignVector| -> Result<Best> {
        let (ratio, std_error, exact) = cand.ratio(&s)?;
        Ok(Best { ratio, std_error, exact, signs: s })
    };
    let better = |a: &Best, b: &Best| a.ratio > b.ratio;
    let mut best = eval(SignVector::all_plus(levels))?;
    if levels <= MAX_EXHAUSTIVE_LEVELS {
        // without level 0 the transform is odd in the signs, so eps_1 = +1
        let free = if cand.opts.include_level_zero { levels } else { levels.saturating_sub(1) };
        let offset = levels - free;
        for mask in 1..(1u64 << free) {
            let b = eval(SignVector::from_mask(levels, mask << offset))?;
            if better(&b, &best) {
                best = b;
            }
        }
        return Ok(best);
    }
    let mut used = 1;
    while used < budget {
        let mut cur = eval(SignVector::new((0..levels).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())?)?;
        used += 1;
        let mut improved = true;
        while improved && used < budget {
            improved = false;
            for k in 0..levels {
                if used >= budget {
                    break;
                }
                let b = eval(cur.signs.flipped(k))?;
                used += 1;
                if better(&b, &cur) {
                    cur = b;
                    improved = true;
                }
            }
        }
        if better(&cur, &best) {
            best = cur;
        }
    }
    Ok(best)
}

/// Lower bound on `K(E)`: the largest transform-to-input ratio over random
/// Hardy polynomials `f` and their level-0-free parts `f - E_0 f`, each with
/// searched signs. Polynomials of degree 0 give ratio 0.
pub fn estimate_analytic_umd_constant(cfg: &UmdSearchConfig) -> Result<UmdEstimate> {
    if cfg.torus_dim == 0 || cfg.trials == 0 {
        return Err(Error::InvalidArgument("need M >= 1 and at least one trial".into()));
    }
    let mut best: Option<(Best, TorusPolynomial<f64>)> = None;
    let mut candidates = 0;
    for trial in 0..cfg.trials {
        let mut rng = stream_rng(derive_seed(cfg.seed, "umd-poly", trial as u64), 0);
        let f = random_hardy_polynomial(cfg.torus_dim, cfg.space, cfg.degree, cfg.terms, &mut rng);
        let mean_free = f.add(&f.conditional_expectation(0).scale(Complex::new(-1.0, 0.0)))?;
        let quad = Quadrature::MonteCarlo {
            samples: cfg.quadrature_samples,
            seed: derive_seed(cfg.seed, "umd-quad", trial as u64),
        };
        for g in [f, mean_free] {
            if g.is_zero() {
                continue;
            }
            candidates += 1;
            let cand = Candidate::new(&g, cfg.options, quad)?;
            let b = search_signs(&cand, cfg.sign_search_budget, &mut rng)?;
            if best.as_ref().is_none_or(|(cur, _)| b.ratio > cur.ratio) {
                best = Some((b, g));
            }
        }
    }
    let (b, g) = best.unwrap_or_else(|| {
        let levels = cfg.torus_dim - 1;
        let zero = TorusPolynomial::zero(cfg.torus_dim, cfg.space);
        (Best { ratio: 0.0, std_error: 0.0, exact: true, signs: SignVector::all_plus(levels) }, zero)
    });
    Ok(UmdEstimate {
        lower_bound: b.ratio,
        std_error: b.std_error,
        exact: b.exact,
        witness: g.to_literal(),
        signs: b.signs,
        candidates,
        seed: cfg.seed,
    })
}

/// One point of a parameter sweep; `running_max` is the best bound over
/// this and all earlier points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmdSweepPoint {
    pub space: CoefficientSpace,
    pub degree: u32,
    pub estimate: UmdEstimate,
    pub running_max: f64,
}

/// Runs the configurations in order and reports the monotone envelope of
/// the bounds; individual estimates are not forced to increase.
pub fn umd_sweep(configs: &[UmdSearchConfig]) -> Result<Vec<UmdSweepPoint>> {
    let mut running = 0.0f64;
    configs
        .iter()
        .map(|cfg| {
            let estimate = estimate_analytic_umd_constant(cfg)?;
            running = running.max(estimate.lower_bound);
            Ok(UmdSweepPoint { space: cfg.space, degree: cfg.degree, estimate, running_max: running })
        })
        .collect()
}
