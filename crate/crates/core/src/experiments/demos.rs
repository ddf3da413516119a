//! Closed-form demonstrations (row-unit counterexample, `l_inf` dichotomy)
//! and the moment, tail and type/cotype probes.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{instance_grid, ExperimentConfig, InstanceSpec, Kind, RatioRecord};
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::rng::{derive_seed, stream_rng};
use crate::schatten::SchattenExponent;
use crate::series::{
    kahane_ratio, rademacher_pattern_norms, sample_norms, sample_series_norm, tail_profile, EstimateReport, Randomizer,
    SeriesMethod, TailProfile, MAX_EXHAUSTIVE_TERMS,
};
use crate::spaces::CoefficientSpace;
use crate::square::{column_square_norm, row_square_norm, OperatorSequence};

/// Cap on sampled sign patterns when `N` is too large to enumerate.
const MAX_CHECKED_PATTERNS: usize = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub q: SchattenExponent,
    /// `(E ||sum eps_n E_{0n}||_{C_q}^2)^(1/2)`.
    pub series_norm: f64,
    pub min_pattern_norm: f64,
    pub max_pattern_norm: f64,
    pub patterns_checked: u64,
    /// All `2^N` patterns were checked (else a random subset).
    pub exhaustive: bool,
    /// `||(sum x_n^* x_n)^(1/2)||_q = N^(1/q)`.
    pub column_functional: f64,
    /// `||(sum x_n x_n^*)^(1/2)||_q = N^(1/2)`.
    pub row_functional: f64,
    pub ratio: f64,
    /// `N^(1/2 - 1/q)`.
    pub predicted_ratio: f64,
}

/// Row units `x_n = E_{0n}` in `N x N`: every sign pattern has norm `sqrt N`
/// while the column term alone is `N^(1/q)`.
pub fn counterexample_row_column(
    q: SchattenExponent,
    n_list: &[usize],
    exhaustive_limit: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<CounterexampleRow>> {
    if !(q.value() > 2.0) {
        return Err(Error::InvalidArgument(format!("counterexample needs q > 2, got {q}")));
    }
    n_list
        .iter()
        .map(|&n| {
            let seq = OperatorSequence::new((0..n).map(|k| ComplexMatrix::<f64>::unit(n, n, 0, k)).collect())?;
            let exhaustive = n <= exhaustive_limit.min(MAX_EXHAUSTIVE_TERMS);
            let norms = if exhaustive {
                rademacher_pattern_norms(&seq, q)?
            } else {
                sample_norms(&seq, Randomizer::Rademacher, q, samples.min(MAX_CHECKED_PATTERNS), derive_seed(seed, "patterns", n as u64))?
            };
            let series_norm = (norms.iter().map(|v| v * v).sum::<f64>() / norms.len() as f64).sqrt();
            let column_functional = column_square_norm(&seq, q)?;
            let row_functional = row_square_norm(&seq, q)?;
            Ok(CounterexampleRow {
                n,
                q,
                series_norm,
                min_pattern_norm: norms.iter().copied().fold(f64::INFINITY, f64::min),
                max_pattern_norm: norms.iter().copied().fold(0.0, f64::max),
                patterns_checked: if exhaustive { 1u64 << n } else { norms.len() as u64 },
                exhaustive,
                column_functional,
                row_functional,
                ratio: series_norm / column_functional,
                predicted_ratio: (n as f64).powf(0.5 - 1.0 / q.value()),
            })
        })
        .collect()
}

pub(crate) fn counterexample_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RatioRecord>, Value)> {
    let mut rows = Vec::new();
    for &q in &cfg.exponents {
        rows.extend(counterexample_row_column(q, &cfg.terms, cfg.exhaustive_limit, cfg.samples, cfg.seed)?);
    }
    let records = rows
        .iter()
        .map(|r| {
            let mut rec = RatioRecord::new(
                format!("counterexample-N{}-q{}", r.n, r.q),
                (r.n, r.n, r.n),
                r.q,
                Randomizer::Rademacher,
                r.series_norm,
                r.column_functional,
                cfg.seed,
            );
            rec.exact = r.exhaustive;
            rec
        })
        .collect();
    Ok((records, json!({ "rows": rows })))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub n: usize,
    /// `E ||sum eps_i e_i||_inf`, which is 1.
    pub rademacher: EstimateReport,
    /// `E ||sum g_i e_i||_inf = E max |g_i|`.
    pub gaussian: EstimateReport,
    pub ratio: f64,
}

/// Rademacher and Gaussian sums of the coordinate vectors of `l_inf^n`.
pub fn dichotomy_demo(n_list: &[usize], samples: usize, seed: u64) -> Result<Vec<DichotomyRow>> {
    if n_list.is_empty() || n_list.contains(&0) || samples == 0 {
        return Err(Error::InvalidArgument("dichotomy needs positive n values and samples".into()));
    }
    let max_abs = |rnd: Randomizer, n: usize, stream_seed: u64| -> Vec<f64> {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(stream_seed, i as u64);
                (0..n).map(|_| rnd.draw::<f64, _>(&mut rng).norm()).fold(0.0, f64::max)
            })
            .collect()
    };
    Ok(n_list
        .iter()
        .map(|&n| {
            let rs = derive_seed(seed, "rademacher", n as u64);
            let r = max_abs(Randomizer::Rademacher, n, rs);
            let rademacher = if r.iter().all(|&v| v == r[0]) {
                EstimateReport { seed: rs, ..EstimateReport::exact(r[0], samples as u64) }
            } else {
                EstimateReport::from_moment(&r, 1.0, rs)
            };
            let gs = derive_seed(seed, "gaussian", n as u64);
            let gaussian = EstimateReport::from_moment(&max_abs(Randomizer::Gaussian, n, gs), 1.0, gs);
            let ratio = gaussian.estimate / rademacher.estimate;
            DichotomyRow { n, rademacher, gaussian, ratio }
        })
        .collect())
}

pub(crate) fn dichotomy_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RatioRecord>, Value)> {
    let rows = dichotomy_demo(&cfg.terms, cfg.samples, cfg.seed)?;
    let increasing = rows.windows(2).all(|w| w[0].gaussian.estimate < w[1].gaussian.estimate);
    let records = rows
        .iter()
        .map(|r| {
            let mut rec = RatioRecord::new(
                format!("dichotomy-n{}", r.n),
                (r.n, 1, r.n),
                SchattenExponent::INFINITY,
                Randomizer::Gaussian,
                r.gaussian.estimate,
                r.rademacher.estimate,
                r.gaussian.seed,
            );
            rec.numerator_std_error = r.gaussian.std_error;
            rec.exact = false;
            rec
        })
        .collect();
    Ok((records, json!({ "rows": rows, "gaussian_increasing": increasing })))
}

pub(crate) fn kahane_instance(cfg: &ExperimentConfig, spec: &InstanceSpec) -> Result<RatioRecord> {
    let seq = cfg.family.generate(spec.n, spec.d1, spec.d2, spec.seed);
    let method = SeriesMethod::auto(cfg.randomizer(), spec.n, cfg.exhaustive_limit, cfg.samples, derive_seed(spec.seed, "series", 0));
    let [r1, r2] = cfg.kahane_moments;
    let k = kahane_ratio(&seq, method, spec.exponent, r1, r2)?;
    let mut rec =
        RatioRecord::new(spec.id(Kind::Kahane), (spec.d1, spec.d2, spec.n), spec.exponent, cfg.randomizer(), k.high.estimate, k.low.estimate, spec.seed);
    rec.numerator_std_error = k.high.std_error;
    rec.exact = k.high.exact;
    Ok(rec)
}

pub(crate) fn kahane_experiment(cfg: &ExperimentConfig) -> Result<Vec<RatioRecord>> {
    instance_grid(cfg).par_iter().map(|s| kahane_instance(cfg, s)).collect()
}

/// Spacing fine enough that concentrated norms, whose normalised survival
/// drops from 1 to 0 within a fraction of a unit, still leave several
/// interior points for the fit.
fn default_t_grid() -> Vec<f64> {
    (1..=60).map(|k| 0.05 * k as f64).collect()
}

/// Gaussian decay rate `1/2` of `P(|g| > t)`; tail records report the fitted
/// rate against it.
const GAUSSIAN_RATE: f64 = 0.5;

pub(crate) fn tails_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RatioRecord>, Value)> {
    let grid = cfg.t_grid.clone().unwrap_or_else(default_t_grid);
    let rnd = cfg.randomizer();
    let out: Vec<(RatioRecord, TailProfile)> = instance_grid(cfg)
        .par_iter()
        .map(|spec| {
            let seq = cfg.family.generate(spec.n, spec.d1, spec.d2, spec.seed);
            let sigma = sample_series_norm(&seq, rnd, spec.exponent, 2.0, cfg.samples, derive_seed(spec.seed, "scale", 0))?.estimate;
            let profile = tail_profile(&seq.scale(1.0 / sigma), rnd, spec.exponent, cfg.samples, derive_seed(spec.seed, "tails", 0), &grid)?;
            let mut rec = RatioRecord::new(
                spec.id(Kind::Tails),
                (spec.d1, spec.d2, spec.n),
                spec.exponent,
                rnd,
                profile.delta_hat.unwrap_or(0.0),
                GAUSSIAN_RATE,
                spec.seed,
            );
            rec.exact = false;
            Ok((rec, profile))
        })
        .collect::<Result<_>>()?;
    let details: Vec<Value> = out.iter().map(|(r, p)| json!({ "instance_id": r.instance_id, "profile": p })).collect();
    Ok((out.into_iter().map(|(r, _)| r).collect(), json!({ "profiles": details })))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Type,
    Cotype,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeCotypeConfig {
    pub space: CoefficientSpace,
    pub exponent: SchattenExponent,
    pub direction: Direction,
    /// Random families on top of the coordinate family.
    pub families: usize,
    pub family_size: usize,
    pub randomizer: Randomizer,
    pub samples: usize,
    pub exhaustive_limit: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyRatio {
    pub family: String,
    pub size: usize,
    /// `(E ||sum xi_n x_n||^2)^(1/2)`.
    pub series_norm: EstimateReport,
    /// `(sum ||x_n||^s)^(1/s)` with `s` the probed exponent.
    pub power_sum: f64,
    pub ratio: f64,
    pub std_error: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypeCotypeEstimate {
    pub constant: f64,
    pub std_error: f64,
    pub exact: bool,
    /// Index into `families` of the maximising family.
    pub witness: usize,
    pub families: Vec<FamilyRatio>,
}

/// `(E ||sum xi_n v_n||_E^r)^(1/r)` for vectors in a coefficient space.
pub fn vector_series_norm(space: CoefficientSpace, vectors: &[Vec<Complex<f64>>], method: SeriesMethod, r: f64) -> Result<EstimateReport> {
    let n = vectors.len();
    if n == 0 || vectors.iter().any(|v| v.len() != space.dim()) {
        return Err(Error::InvalidArgument(format!("need a nonempty family of vectors of length {}", space.dim())));
    }
    let combine = |coeffs: &[Complex<f64>]| {
        let mut s = vec![Complex::new(0.0, 0.0); space.dim()];
        for (c, v) in coeffs.iter().zip(vectors) {
            for (a, b) in s.iter_mut().zip(v) {
                *a += c * b;
            }
        }
        space.norm(&s)
    };
    match method {
        SeriesMethod::Exhaustive => {
            if n > MAX_EXHAUSTIVE_TERMS {
                return Err(Error::TooLarge(format!("exhaustive enumeration needs N <= {MAX_EXHAUSTIVE_TERMS}, got {n}")));
            }
            let norms: Vec<f64> = (0..1u64 << (n - 1))
                .into_par_iter()
                .map(|mask| {
                    let c: Vec<Complex<f64>> =
                        (0..n).map(|k| Complex::new(if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 }, 0.0)).collect();
                    combine(&c)
                })
                .collect();
            let mean = norms.iter().map(|v| v.powf(r)).sum::<f64>() / norms.len() as f64;
            Ok(EstimateReport::exact(mean.powf(1.0 / r), 1u64 << n))
        }
        SeriesMethod::MonteCarlo { randomizer, samples, seed } => {
            let norms: Vec<f64> = (0..samples)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream_rng(seed, i as u64);
                    let c: Vec<Complex<f64>> = (0..n).map(|_| randomizer.draw(&mut rng)).collect();
                    combine(&c)
                })
                .collect();
            Ok(EstimateReport::from_moment(&norms, r, seed))
        }
    }
}

fn gaussian_family<R: Rng>(size: usize, dim: usize, rng: &mut R) -> Vec<Vec<Complex<f64>>> {
    (0..size)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
                })
                .collect()
        })
        .collect()
}

/// Best empirical type (`series / (sum ||x||^p)^(1/p)`) or cotype
/// (`(sum ||x||^q)^(1/q) / series`) ratio over the coordinate family and
/// `families` random Gaussian families, with the series norm in `L_2`.
pub fn estimate_type_cotype(cfg: &TypeCotypeConfig) -> Result<TypeCotypeEstimate> {
    let s = cfg.exponent.value();
    match cfg.direction {
        Direction::Type if !(1.0..=2.0).contains(&s) => return Err(Error::InvalidArgument(format!("type exponent must lie in [1, 2], got {s}"))),
        Direction::Cotype if !(2.0..f64::INFINITY).contains(&s) => {
            return Err(Error::InvalidArgument(format!("cotype exponent must lie in [2, inf), got {s}")))
        }
        _ => {}
    }
    let dim = cfg.space.dim();
    let coordinate: Vec<Vec<Complex<f64>>> =
        (0..dim).map(|i| (0..dim).map(|j| Complex::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    let mut fams = vec![("coordinate".to_string(), coordinate, derive_seed(cfg.seed, "coordinate", 0))];
    for k in 0..cfg.families {
        let fs = derive_seed(cfg.seed, "family", k as u64);
        fams.push((format!("gaussian-{k}"), gaussian_family(cfg.family_size, dim, &mut stream_rng(fs, 0)), fs));
    }
    let families: Vec<FamilyRatio> = fams
        .into_iter()
        .map(|(name, vecs, fs)| {
            let method = SeriesMethod::auto(cfg.randomizer, vecs.len(), cfg.exhaustive_limit, cfg.samples, derive_seed(fs, "series", 0));
            let series = vector_series_norm(cfg.space, &vecs, method, 2.0)?;
            let power_sum = vecs.iter().map(|v| cfg.space.norm(v).powf(s)).sum::<f64>().powf(1.0 / s);
            let (ratio, std_error) = match cfg.direction {
                Direction::Type => (series.estimate / power_sum, series.std_error / power_sum),
                Direction::Cotype => {
                    let r = power_sum / series.estimate;
                    (r, r * series.std_error / series.estimate)
                }
            };
            Ok(FamilyRatio { family: name, size: vecs.len(), series_norm: series, power_sum, ratio, std_error, seed: fs })
        })
        .collect::<Result<_>>()?;
    let witness = (0..families.len()).fold(0, |b, i| if families[i].ratio > families[b].ratio { i } else { b });
    let w = &families[witness];
    Ok(TypeCotypeEstimate { constant: w.ratio, std_error: w.std_error, exact: w.series_norm.exact, witness, families })
}

pub(crate) fn type_cotype_experiment(cfg: &ExperimentConfig) -> Result<(Vec<RatioRecord>, Value)> {
    let space = cfg.space.unwrap_or(CoefficientSpace::Euclidean(4));
    let direction = cfg.direction.unwrap_or(Direction::Type);
    let mut records = Vec::new();
    let mut estimates = Vec::new();
    let mut index = 0u64;
    for &exponent in &cfg.exponents {
        for &family_size in &cfg.terms {
            let tc = TypeCotypeConfig {
                space,
                exponent,
                direction,
                families: cfg.trials,
                family_size,
                randomizer: cfg.randomizer(),
                samples: cfg.samples,
                exhaustive_limit: cfg.exhaustive_limit,
                seed: derive_seed(cfg.seed, &cfg.name, index),
            };
            index += 1;
            let est = estimate_type_cotype(&tc)?;
            for f in &est.families {
                let (num, den) = match direction {
                    Direction::Type => (f.series_norm.estimate, f.power_sum),
                    Direction::Cotype => (f.power_sum, f.series_norm.estimate),
                };
                let mut rec = RatioRecord::new(
                    format!("type_cotype-{space}-s{exponent}-n{family_size}-{}", f.family),
                    (space.dim(), 1, f.size),
                    exponent,
                    tc.randomizer,
                    num,
                    den,
                    f.seed,
                );
                rec.numerator_std_error = if direction == Direction::Type { f.series_norm.std_error } else { 0.0 };
                rec.exact = f.series_norm.exact;
                records.push(rec);
            }
            estimates.push(json!({ "space": space, "exponent": exponent, "direction": direction, "family_size": family_size, "estimate": est }));
        }
    }
    Ok((records, json!({ "estimates": estimates })))
}
