//! The decomposition norm
//!
//! ```text
//! |||(x_n)|||_p = inf { ||(sum y_n^* y_n)^(1/2)||_p + ||(sum z_n z_n^*)^(1/2)||_p : x_n = y_n + z_n }
//! ```
//!
//! Through the stacking identities this is the convex problem
//! `min_Y ||vstack(Y)||_p + ||hstack(X - Y)||_p`, which is solved here by
//! Douglas-Rachford splitting. Both proximal maps act on singular values of
//! a rearrangement of `Y`, and the splitting's scaled dual iterate is a
//! feasible point of the dual problem `max { Re<A, X> : chi_q(A) <= 1 }`, so
//! each run carries its own lower bound.

mod oracle;
pub mod prox;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::scalar::Real;
use crate::schatten::{schatten_norm, SchattenExponent};
use crate::square::{chi_norm, hstack, unhstack, unvstack, vstack, OperatorSequence};

pub use oracle::triple_norm_oracle;
use prox::prox_schatten;

/// Douglas-Rachford solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Relative duality gap at which a run is declared converged.
    pub tolerance: f64,
    /// Proximal step, relative to `||X||_F / sqrt(N)`.
    pub step_size: f64,
    /// Extra runs from randomly perturbed starting points.
    pub restart_count: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { max_iterations: 20_000, tolerance: 1e-6, step_size: 3.0, restart_count: 1, seed: 0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("solver tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument("max_iterations must be at least 1".into()));
        }
        if !(self.step_size > 0.0) {
            return Err(Error::InvalidArgument("step_size must be positive".into()));
        }
        Ok(())
    }
}

/// Optimal split `x_n = y_n + z_n` together with a duality certificate.
#[derive(Clone, Debug)]
pub struct DecompositionResult<T> {
    pub y_terms: OperatorSequence<T>,
    pub z_terms: OperatorSequence<T>,
    /// `||vstack(y)||_p + ||hstack(z)||_p` at the returned split.
    pub objective: T,
    pub iterations: usize,
    /// Douglas-Rachford fixed-point residual of the winning run.
    pub primal_residual: T,
    /// Best weak-duality lower bound found.
    pub certificate_lower_bound: T,
    /// Dual sequence attaining `certificate_lower_bound`, if any.
    pub witness: Option<OperatorSequence<T>>,
    pub converged: bool,
    pub seed: u64,
    pub warning: Option<&'static str>,
}

impl<T: Real> DecompositionResult<T> {
    /// Relative gap between objective and certificate.
    pub fn relative_gap(&self) -> T {
        if self.objective.is_zero() {
            return T::zero();
        }
        ((self.objective - self.certificate_lower_bound) / self.objective).max(T::zero())
    }

    pub fn report(&self) -> TripleNormReport {
        TripleNormReport {
            objective: self.objective.as_f64(),
            lower_bound: self.certificate_lower_bound.as_f64(),
            iterations: self.iterations,
            converged: self.converged,
            seed: self.seed,
        }
    }
}

/// Machine-readable solver summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleNormReport {
    pub objective: f64,
    pub lower_bound: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// `||vstack(y)||_p + ||hstack(x - y)||_p`.
pub fn split_objective<T: Real>(x: &OperatorSequence<T>, y: &OperatorSequence<T>, p: SchattenExponent) -> Result<T> {
    let z = x.zip_with(y, |a, b| a.sub(b))?;
    Ok(schatten_norm(&vstack(y), p)? + schatten_norm(&hstack(&z), p)?)
}

/// Weak-duality bound `|sum Re tr(a_n^* x_n)| / chi_q(a)` with `1/p + 1/q = 1`.
pub fn pairing_lower_bound<T: Real>(
    seq: &OperatorSequence<T>,
    p: SchattenExponent,
    witness: &OperatorSequence<T>,
) -> Result<T> {
    if witness.shape() != seq.shape() || witness.len() != seq.len() {
        return Err(Error::InvalidArgument("dual witness must match the sequence shape and length".into()));
    }
    let dual = chi_norm(witness, p.conjugate())?;
    if dual.is_zero() {
        return Err(Error::InvalidArgument("dual witness has zero norm".into()));
    }
    Ok(seq.re_pairing(witness).abs() / dual)
}

/// Random-search ascent of the pairing bound starting at `start`.
pub fn optimize_witness<T: Real>(
    seq: &OperatorSequence<T>,
    p: SchattenExponent,
    start: &OperatorSequence<T>,
    rounds: usize,
    seed: u64,
) -> Result<(OperatorSequence<T>, T)> {
    let mut best = start.clone();
    let mut best_val = pairing_lower_bound(seq, p, &best)?;
    let mut rng = stream_rng(seed, 0x5eed);
    let (d1, d2) = seq.shape();
    let mut sigma = T::lit(0.3);
    for _ in 0..rounds {
        let scale = (best.frobenius_sq() / T::lit((seq.len() * d1 * d2) as f64)).sqrt();
        let noise = OperatorSequence::random_gaussian(seq.len(), d1, d2, &mut rng);
        let cand = best.zip_with(&noise, |a, g| {
            let mut c = a.clone();
            c.axpy(num_complex::Complex::new(sigma * scale, T::zero()), g);
            c
        })?;
        match pairing_lower_bound(seq, p, &cand) {
            Ok(v) if v > best_val => {
                best = cand;
                best_val = v;
                sigma = (sigma * T::lit(1.5)).min(T::one());
            }
            _ => sigma = (sigma * T::lit(0.7)).max(T::lit(1e-8)),
        }
    }
    Ok((best, best_val))
}

/// Lower bounds from `count` i.i.d. complex Gaussian witnesses.
pub fn sampled_witness_bounds<T: Real>(seq: &OperatorSequence<T>, p: SchattenExponent, count: usize, seed: u64) -> Result<Vec<T>> {
    let (d1, d2) = seq.shape();
    (0..count)
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let a = OperatorSequence::random_gaussian(seq.len(), d1, d2, &mut rng);
            pairing_lower_bound(seq, p, &a)
        })
        .collect()
}

struct RunOutcome<T> {
    y: OperatorSequence<T>,
    objective: T,
    iterations: usize,
    residual: T,
    lower_bound: T,
    witness: Option<OperatorSequence<T>>,
}

const CHECK_EVERY: usize = 5;

fn dr_run<T: Real>(
    x: &OperatorSequence<T>,
    p: SchattenExponent,
    cfg: &SolverConfig,
    z0: OperatorSequence<T>,
    gamma: T,
) -> Result<RunOutcome<T>> {
    let n = x.len();
    let tol = T::lit(cfg.tolerance);
    let mut z = z0;
    let mut best: Option<(OperatorSequence<T>, T)> = None;
    let mut lower = T::zero();
    let mut witness = None;
    let mut residual = T::infinity();
    let mut iterations = 0;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let y = unvstack(&prox_schatten(&vstack(&z), gamma, p)?, n);
        let reflected = y.zip_with(&z, |yi, zi| yi.scale(T::lit(2.0)).sub(zi))?;
        let resid_row = x.zip_with(&reflected, |xi, ri| xi.sub(ri))?;
        let shrunk = unhstack(&prox_schatten(&hstack(&resid_row), gamma, p)?, n);
        let w = x.zip_with(&shrunk, |xi, si| xi.sub(si))?;

        if it % CHECK_EVERY == 0 || it == cfg.max_iterations || it == 1 {
            residual = w.zip_with(&y, |a, b| a.sub(b))?.frobenius_sq().sqrt();
            let obj = split_objective(x, &y, p)?;
            if best.as_ref().is_none_or(|(_, b)| obj < *b) {
                best = Some((y.clone(), obj));
            }
            let a = z.zip_with(&y, |zi, yi| zi.sub(yi).scale(T::one() / gamma))?;
            if let Ok(lb) = pairing_lower_bound(x, p, &a) {
                if lb > lower {
                    lower = lb;
                    witness = Some(a);
                }
            }
            let best_obj = best.as_ref().map(|b| b.1).expect("set above");
            if best_obj - lower <= tol * best_obj {
                break;
            }
        }
        z = z.zip_with(&w, |zi, wi| zi.add(wi))?.zip_with(&y, |a, yi| a.sub(yi))?;
    }
    let (y, objective) = best.expect("at least one check");
    Ok(RunOutcome { y, objective, iterations, residual, lower_bound: lower, witness })
}

/// Computes `|||(x_n)|||_p` by Douglas-Rachford splitting.
///
/// The returned objective never exceeds the better of the two pure splits
/// (`y = x` or `z = x`). Runs are deterministic in `cfg.seed`; restarts are
/// independent and the lowest objective wins, ties going to the lower
/// restart index.
pub fn triple_norm<T: Real>(
    seq: &OperatorSequence<T>,
    p: SchattenExponent,
    cfg: &SolverConfig,
) -> Result<DecompositionResult<T>> {
    cfg.validate()?;
    let warning = (p.value() > 2.0).then_some("p > 2: decomposition-norm equivalence is only asserted for 1 <= p <= 2");
    let n = seq.len();
    let (d1, d2) = seq.shape();
    let zero = seq.map(|t| crate::matrix::ComplexMatrix::zeros(t.rows(), t.cols()));

    let fro = seq.frobenius_sq().sqrt();
    if fro.is_zero() {
        return Ok(DecompositionResult {
            y_terms: zero.clone(),
            z_terms: zero,
            objective: T::zero(),
            iterations: 0,
            primal_residual: T::zero(),
            certificate_lower_bound: T::zero(),
            witness: None,
            converged: true,
            seed: cfg.seed,
            warning,
        });
    }

    let gamma = T::lit(cfg.step_size) * fro / T::lit(n as f64).sqrt();
    let half = seq.scale(T::lit(0.5));
    let runs: Vec<Result<RunOutcome<T>>> = (0..=cfg.restart_count)
        .into_par_iter()
        .map(|r| {
            let z0 = if r == 0 {
                half.clone()
            } else {
                let mut rng = stream_rng(cfg.seed, r as u64);
                let noise_scale = T::lit(0.5) * fro / T::lit((n * d1 * d2) as f64).sqrt();
                let noise = OperatorSequence::random_gaussian(n, d1, d2, &mut rng);
                half.zip_with(&noise, |h, g| h.add(&g.scale(noise_scale)))?
            };
            dr_run(seq, p, cfg, z0, gamma)
        })
        .collect();

    let mut winner: Option<RunOutcome<T>> = None;
    let mut lower = T::zero();
    let mut witness: Option<OperatorSequence<T>> = None;
    for run in runs {
        let run = run?;
        if run.lower_bound > lower {
            lower = run.lower_bound;
            witness = run.witness.clone();
        }
        if winner.as_ref().is_none_or(|w| run.objective < w.objective) {
            winner = Some(run);
        }
    }
    let winner = winner.expect("at least one run");
    let mut y = winner.y;
    let mut objective = winner.objective;

    // pure splits are always feasible
    for cand in [seq.clone(), zero.clone()] {
        let v = split_objective(seq, &cand, p)?;
        if v < objective {
            objective = v;
            y = cand;
        }
    }

    let tol = T::lit(cfg.tolerance);
    if objective - lower > tol * objective {
        let start = witness.clone().unwrap_or_else(|| seq.clone());
        let (w, v) = optimize_witness(seq, p, &start, 200, cfg.seed)?;
        if v > lower {
            lower = v;
            witness = Some(w);
        }
    }
    // rounding can push the certificate a hair above the primal value
    let lower = lower.min(objective);
    let converged = objective - lower <= tol * objective;
    let z = seq.zip_with(&y, |a, b| a.sub(b))?;
    Ok(DecompositionResult {
        y_terms: y,
        z_terms: z,
        objective,
        iterations: winner.iterations,
        primal_residual: winner.residual,
        certificate_lower_bound: lower,
        witness,
        converged,
        seed: cfg.seed,
        warning,
    })
}
