//! Named experiments over grids of random instances, their records, and
//! the suite runner that persists them.
//!
//! Every instance draws its operators from stream 0 of a seed derived from
//! `(suite seed, experiment name, instance index)`; any further randomness
//! (Monte-Carlo draws, solver restarts) uses seeds derived from the instance
//! seed, so a record can be recomputed from its metadata alone.

mod demos;
mod suite;
mod theorems;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::decomposition::SolverConfig;
use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::rng::{derive_seed, stream_rng};
use crate::schatten::SchattenExponent;
use crate::series::Randomizer;
use crate::spaces::CoefficientSpace;
use crate::square::OperatorSequence;

pub use demos::{
    counterexample_row_column, dichotomy_demo, estimate_type_cotype, vector_series_norm, CounterexampleRow, DichotomyRow,
    Direction, FamilyRatio, TypeCotypeConfig, TypeCotypeEstimate,
};
pub use suite::{
    parse_suite, render_report, run_and_persist, run_suite, write_report, Manifest, ManifestEntry, SuiteOutcome, CSV_COLUMNS,
};
pub use theorems::{verify_thm3, verify_thm4};

/// Ratio band `[1/4, 4]` used for the equivalence experiments.
pub const ACCEPTANCE_BAND: (f64, f64) = (0.25, 4.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            other => Err(Error::InvalidArgument(format!("unknown output format {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Series norm against the square-function norm, `q >= 2`.
    Thm3,
    /// Series norm against the decomposition norm, `1 <= p <= 2`.
    Thm4,
    /// Row-unit family where only one square-function term is kept.
    Counterexample,
    /// Rademacher against Gaussian sums of `l_inf` coordinate vectors.
    Dichotomy,
    /// `L_{r2} / L_{r1}` moment ratio of the series norm.
    Kahane,
    /// Tail decay of the normalised series norm.
    Tails,
    /// Empirical type or cotype constant of a coefficient space.
    TypeCotype,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Thm3 => "thm3",
            Self::Thm4 => "thm4",
            Self::Counterexample => "counterexample",
            Self::Dichotomy => "dichotomy",
            Self::Kahane => "kahane",
            Self::Tails => "tails",
            Self::TypeCotype => "type_cotype",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase().replace('-', "_")))
            .map_err(|_| Error::InvalidArgument(format!("unknown experiment {s:?}")))
    }
}

/// Structured or random operator families used as test instances.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFamily {
    /// I.i.d. complex standard normal entries.
    #[default]
    Gaussian,
    /// `x_n = E_{0, n mod d2}`.
    RowUnits,
    /// Diagonal with Gaussian diagonal entries.
    Diagonal,
    /// `x_n = u_n v_n^*` with Gaussian vectors.
    RankOne,
}

impl InstanceFamily {
    pub fn generate(self, n: usize, d1: usize, d2: usize, seed: u64) -> OperatorSequence<f64> {
        let mut rng = stream_rng(seed, 0);
        let terms = (0..n)
            .map(|k| match self {
                Self::Gaussian => ComplexMatrix::random_gaussian(d1, d2, &mut rng),
                Self::RowUnits => ComplexMatrix::unit(d1, d2, 0, k % d2),
                Self::Diagonal => {
                    let diag: Vec<Complex<f64>> = (0..d1.min(d2)).map(|_| complex_normal(&mut rng)).collect();
                    ComplexMatrix::from_fn(d1, d2, |i, j| if i == j { diag[i] } else { Complex::new(0.0, 0.0) })
                }
                Self::RankOne => {
                    let u: Vec<Complex<f64>> = (0..d1).map(|_| complex_normal(&mut rng)).collect();
                    let v: Vec<Complex<f64>> = (0..d2).map(|_| complex_normal(&mut rng)).collect();
                    ComplexMatrix::from_fn(d1, d2, |i, j| u[i] * v[j].conj())
                }
            })
            .collect();
        OperatorSequence::new(terms).expect("nonempty, uniform shape")
    }
}

fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex::new(re * s, im * s)
}

fn default_dims() -> Vec<[usize; 2]> {
    vec![[2, 2]]
}
fn default_terms() -> Vec<usize> {
    vec![2]
}
fn default_exponents() -> Vec<SchattenExponent> {
    vec![SchattenExponent::TWO]
}
fn default_trials() -> usize {
    20
}
fn default_samples() -> usize {
    20_000
}
fn default_exhaustive_limit() -> usize {
    12
}
fn default_moment() -> f64 {
    2.0
}
fn default_kahane_moments() -> [f64; 2] {
    [2.0, 4.0]
}

/// One experiment of a suite. Missing lists take single-element defaults,
/// so every list is nonempty after parsing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Label; also selects the experiment when `experiment` is absent.
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    #[serde(default = "default_dims")]
    pub dims: Vec<[usize; 2]>,
    #[serde(default = "default_terms")]
    pub terms: Vec<usize>,
    #[serde(default = "default_exponents")]
    pub exponents: Vec<SchattenExponent>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    pub output_path: String,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub randomizer: Option<Randomizer>,
    #[serde(default)]
    pub family: InstanceFamily,
    /// Largest `N` evaluated by exhaustive sign enumeration.
    #[serde(default = "default_exhaustive_limit")]
    pub exhaustive_limit: usize,
    /// Moment `r` of the series norm in the equivalence experiments.
    #[serde(default = "default_moment")]
    pub moment: f64,
    #[serde(default = "default_kahane_moments")]
    pub kahane_moments: [f64; 2],
    #[serde(default)]
    pub solver: SolverConfig,
    /// Normalised thresholds for the tail experiment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<CoefficientSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the experiment and output.
    pub fn new(kind: ExperimentKind, output_path: impl Into<String>) -> Self {
        Self {
            name: kind.as_str().into(),
            experiment: Some(kind),
            dims: default_dims(),
            terms: default_terms(),
            exponents: default_exponents(),
            trials: default_trials(),
            samples: default_samples(),
            seed: 0,
            output_path: output_path.into(),
            format: OutputFormat::Json,
            randomizer: None,
            family: InstanceFamily::Gaussian,
            exhaustive_limit: default_exhaustive_limit(),
            moment: default_moment(),
            kahane_moments: default_kahane_moments(),
            solver: SolverConfig::default(),
            t_grid: None,
            space: None,
            direction: None,
        }
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        match self.experiment {
            Some(k) => Ok(k),
            None => self.name.parse(),
        }
    }

    pub fn randomizer(&self) -> Randomizer {
        self.randomizer.unwrap_or(Randomizer::Rademacher)
    }

    /// Checks the invariants; the error names the offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let kind = self.kind().map_err(|e| ("name", e.to_string()))?;
        if self.dims.is_empty() {
            return Err(("dims", "must be nonempty".into()));
        }
        if let Some([a, b]) = self.dims.iter().find(|[a, b]| *a == 0 || *b == 0) {
            return Err(("dims", format!("dimensions must be positive, got [{a}, {b}]")));
        }
        if self.terms.is_empty() || self.terms.contains(&0) {
            return Err(("terms", "must be nonempty with every N >= 1".into()));
        }
        if self.exponents.is_empty() {
            return Err(("exponents", "must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(("trials", "must be at least 1".into()));
        }
        if self.samples == 0 {
            return Err(("samples", "must be at least 1".into()));
        }
        if self.output_path.trim().is_empty() {
            return Err(("output_path", "must be a file path".into()));
        }
        if !(self.moment > 0.0 && self.moment.is_finite()) {
            return Err(("moment", "must be positive and finite".into()));
        }
        let [r1, r2] = self.kahane_moments;
        if !(r1 > 0.0 && r1 < r2 && r2.is_finite()) {
            return Err(("kahane_moments", "need 0 < r1 < r2 < inf".into()));
        }
        self.solver.validate().map_err(|e| ("solver", e.to_string()))?;
        let bad = |pred: &dyn Fn(f64) -> bool, msg: &str| -> std::result::Result<(), (&'static str, String)> {
            match self.exponents.iter().find(|p| !pred(p.value())) {
                Some(p) => Err(("exponents", format!("{msg}, got {p}"))),
                None => Ok(()),
            }
        };
        match kind {
            Kind::Thm3 => bad(&|q| q >= 2.0, "thm3 needs q >= 2")?,
            Kind::Thm4 => bad(&|p| p <= 2.0, "thm4 needs 1 <= p <= 2")?,
            Kind::Counterexample => bad(&|q| q > 2.0, "counterexample needs q > 2")?,
            Kind::Dichotomy => {
                if self.terms.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(("terms", "dichotomy needs a strictly increasing n list".into()));
                }
            }
            Kind::Tails => {
                if let Some(g) = &self.t_grid {
                    if g.is_empty() || g.windows(2).any(|w| !(w[0] < w[1])) {
                        return Err(("t_grid", "must be nonempty and strictly increasing".into()));
                    }
                }
            }
            Kind::TypeCotype => match self.direction.unwrap_or(Direction::Type) {
                Direction::Type => bad(&|p| p <= 2.0, "type needs 1 <= p <= 2")?,
                Direction::Cotype => bad(&|q| (2.0..f64::INFINITY).contains(&q), "cotype needs 2 <= q < inf")?,
            },
            Kind::Kahane => {}
        }
        Ok(())
    }
}

use ExperimentKind as Kind;

/// One numerator/denominator comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub instance_id: String,
    pub d1: usize,
    pub d2: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub exponent: SchattenExponent,
    pub randomizer: Randomizer,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
    /// Instance seed; regenerates the instance and all of its draws.
    pub seed: u64,
    pub numerator_std_error: f64,
    /// Numerator computed without sampling error.
    pub exact: bool,
    /// Solver convergence, for records whose denominator is optimised.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
}

impl RatioRecord {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new(
        instance_id: String,
        (d1, d2, n): (usize, usize, usize),
        exponent: SchattenExponent,
        randomizer: Randomizer,
        numerator: f64,
        denominator: f64,
        seed: u64,
    ) -> Self {
        Self {
            instance_id,
            d1,
            d2,
            n,
            exponent,
            randomizer,
            numerator,
            denominator,
            ratio: numerator / denominator,
            seed,
            numerator_std_error: 0.0,
            exact: true,
            converged: None,
        }
    }
}

/// Range of ratios within one `(d1, d2, N, exponent)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub d1: usize,
    pub d2: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub exponent: SchattenExponent,
    pub count: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

impl CellSummary {
    pub fn within(&self, low: f64, high: f64) -> bool {
        self.min_ratio >= low && self.max_ratio <= high
    }
}

/// Cells in first-appearance order.
pub fn summarize(records: &[RatioRecord]) -> Vec<CellSummary> {
    let mut cells: Vec<CellSummary> = Vec::new();
    for r in records {
        let key = (r.d1, r.d2, r.n, r.exponent);
        match cells.iter_mut().find(|c| (c.d1, c.d2, c.n, c.exponent) == key) {
            Some(c) => {
                c.count += 1;
                c.min_ratio = c.min_ratio.min(r.ratio);
                c.max_ratio = c.max_ratio.max(r.ratio);
            }
            None => cells.push(CellSummary {
                d1: r.d1,
                d2: r.d2,
                n: r.n,
                exponent: r.exponent,
                count: 1,
                min_ratio: r.ratio,
                max_ratio: r.ratio,
            }),
        }
    }
    cells
}

/// Data file contents of one experiment. Holds no wall-clock values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub acceptance_band: (f64, f64),
    pub records: Vec<RatioRecord>,
    pub cells: Vec<CellSummary>,
    /// Experiment-specific tables.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

/// Grid point of an experiment with its derived seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct InstanceSpec {
    pub index: usize,
    pub trial: usize,
    pub d1: usize,
    pub d2: usize,
    pub n: usize,
    pub exponent: SchattenExponent,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn id(&self, kind: ExperimentKind) -> String {
        format!("{kind}-d{}x{}-N{}-p{}-t{}", self.d1, self.d2, self.n, self.exponent, self.trial)
    }
}

/// Instances in `dims x terms x exponents x trials` order.
pub(crate) fn instance_grid(cfg: &ExperimentConfig) -> Vec<InstanceSpec> {
    let mut out = Vec::new();
    for &[d1, d2] in &cfg.dims {
        for &n in &cfg.terms {
            for &exponent in &cfg.exponents {
                for trial in 0..cfg.trials {
                    let index = out.len();
                    let seed = derive_seed(cfg.seed, &cfg.name, index as u64);
                    out.push(InstanceSpec { index, trial, d1, d2, n, exponent, seed });
                }
            }
        }
    }
    out
}

/// Runs one experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate().map_err(|(field, msg)| Error::InvalidArgument(format!("{field}: {msg}")))?;
    let kind = cfg.kind()?;
    let (records, details) = match kind {
        Kind::Thm3 => (verify_thm3(cfg)?, serde_json::Value::Null),
        Kind::Thm4 => (verify_thm4(cfg)?, serde_json::Value::Null),
        Kind::Counterexample => demos::counterexample_experiment(cfg)?,
        Kind::Dichotomy => demos::dichotomy_experiment(cfg)?,
        Kind::Kahane => (demos::kahane_experiment(cfg)?, serde_json::Value::Null),
        Kind::Tails => demos::tails_experiment(cfg)?,
        Kind::TypeCotype => demos::type_cotype_experiment(cfg)?,
    };
    Ok(ExperimentReport {
        name: cfg.name.clone(),
        experiment: kind,
        seed: cfg.seed,
        acceptance_band: ACCEPTANCE_BAND,
        cells: summarize(&records),
        records,
        details,
    })
}

/// Recomputes a grid record of `cfg` from its metadata and seed.
pub fn recompute_record(cfg: &ExperimentConfig, record: &RatioRecord) -> Result<RatioRecord> {
    let trial = record
        .instance_id
        .rsplit_once("-t")
        .and_then(|(_, t)| t.parse().ok())
        .ok_or_else(|| Error::InvalidArgument(format!("malformed instance id {:?}", record.instance_id)))?;
    let spec = InstanceSpec {
        index: 0,
        trial,
        d1: record.d1,
        d2: record.d2,
        n: record.n,
        exponent: record.exponent,
        seed: record.seed,
    };
    match cfg.kind()? {
        Kind::Thm3 => theorems::thm3_instance(cfg, &spec),
        Kind::Thm4 => theorems::thm4_instance(cfg, &spec),
        Kind::Kahane => demos::kahane_instance(cfg, &spec),
        other => Err(Error::InvalidArgument(format!("{other} records are not grid instances"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_defaults_and_kind() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"name": "thm3", "output_path": "out.json"}"#).unwrap();
        assert_eq!(cfg.kind().unwrap(), Kind::Thm3);
        assert_eq!(cfg.trials, 20);
        assert_eq!(cfg.samples, 20_000);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = ExperimentConfig::new(Kind::Thm4, "x.json");
        cfg.exponents = vec![SchattenExponent::new(3.0).unwrap()];
        assert_eq!(cfg.validate().unwrap_err().0, "exponents");
        cfg.exponents = vec![SchattenExponent::ONE];
        cfg.trials = 0;
        assert_eq!(cfg.validate().unwrap_err().0, "trials");
        let mut d = ExperimentConfig::new(Kind::Dichotomy, "x.json");
        d.terms = vec![4, 2];
        assert_eq!(d.validate().unwrap_err().0, "terms");
    }

    #[test]
    fn kinds_parse() {
        assert_eq!("type-cotype".parse::<ExperimentKind>().unwrap(), Kind::TypeCotype);
        assert!("thm5".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn families_have_expected_structure() {
        let rows = InstanceFamily::RowUnits.generate(3, 2, 4, 0);
        assert_eq!(rows.terms()[2][(0, 2)], Complex::new(1.0, 0.0));
        let diag = InstanceFamily::Diagonal.generate(2, 3, 3, 1);
        assert_eq!(diag.terms()[0][(0, 1)], Complex::new(0.0, 0.0));
        let r1 = InstanceFamily::RankOne.generate(1, 3, 3, 2);
        let s = crate::svd::singular_values(&r1.terms()[0]).unwrap();
        assert!(s.values()[1] < 1e-12 * s.values()[0]);
        assert_eq!(InstanceFamily::Gaussian.generate(2, 2, 2, 9), InstanceFamily::Gaussian.generate(2, 2, 2, 9));
    }

    #[test]
    fn grid_seeds_are_distinct() {
        let mut cfg = ExperimentConfig::new(Kind::Thm3, "x.json");
        cfg.dims = vec![[2, 2], [4, 4]];
        cfg.trials = 3;
        let grid = instance_grid(&cfg);
        assert_eq!(grid.len(), 6);
        let mut seeds: Vec<u64> = grid.iter().map(|s| s.seed).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 6);
    }
}
