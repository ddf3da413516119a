//! Command-line front end for the series laboratory.
//!
//! Matrices, sequences and polynomials are read from JSON files (`-` reads
//! standard input). Results go to `--output` or standard output.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use series_lab::decomposition::{triple_norm, SolverConfig};
use series_lab::experiments::{
    parse_suite, render_report, run_and_persist, run_experiment, run_suite, ExperimentConfig, ExperimentKind, OutputFormat,
};
use series_lab::hardy::umd::{estimate_analytic_umd_constant, TransformOptions, UmdSearchConfig};
use series_lab::hardy::{Quadrature, TorusPolynomial};
use series_lab::series::{series_norm, Randomizer, SeriesMethod};
use series_lab::square::{chi_norm_flagged, column_square_norm, row_square_norm};
use series_lab::{schatten_norm, CMatrix, CoefficientSpace, Error, SchattenExponent, Sequence};

#[derive(Parser, Debug)]
#[command(name = "series-lab", version, about = "Schatten norms, square functions and random operator series")]
struct Cli {
    /// Base seed for every random quantity.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (all cores when absent).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Schatten p-norm of a matrix.
    Schatten {
        /// Matrix JSON: {"rows", "cols", "re", "im"}.
        matrix: PathBuf,
        #[arg(short, long, default_value = "1")]
        p: SchattenExponent,
    },
    /// Square-function norm max(||(sum x*x)^(1/2)||_q, ||(sum xx*)^(1/2)||_q).
    Chi {
        /// Sequence JSON: {"shape": [d1, d2], "terms": [matrix, ...]}.
        sequence: PathBuf,
        #[arg(short, long, default_value = "2")]
        q: SchattenExponent,
    },
    /// Decomposition norm by Douglas-Rachford splitting.
    TripleNorm {
        sequence: PathBuf,
        #[arg(short, long, default_value = "1")]
        p: SchattenExponent,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Moment of the series norm, exhaustive or Monte Carlo.
    Simulate {
        sequence: PathBuf,
        #[arg(short, long, default_value = "2")]
        p: SchattenExponent,
        #[arg(long, default_value = "rademacher")]
        randomizer: Randomizer,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        /// Moment order r.
        #[arg(long, default_value_t = 2.0)]
        moment: f64,
        /// Largest N enumerated exhaustively for Rademacher series.
        #[arg(long, default_value_t = 12)]
        exhaustive_limit: usize,
    },
    /// Run a named experiment.
    Verify {
        #[arg(value_enum)]
        which: Verify,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Hardy polynomials and analytic-UMD estimates.
    Hardy {
        #[command(subcommand)]
        command: HardyCommand,
    },
    /// Run every experiment of a suite file.
    Suite { config: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Verify {
    Thm3,
    Thm4,
    Counterexample,
    Dichotomy,
    Kahane,
    Tails,
}

impl From<Verify> for ExperimentKind {
    fn from(v: Verify) -> Self {
        match v {
            Verify::Thm3 => ExperimentKind::Thm3,
            Verify::Thm4 => ExperimentKind::Thm4,
            Verify::Counterexample => ExperimentKind::Counterexample,
            Verify::Dichotomy => ExperimentKind::Dichotomy,
            Verify::Kahane => ExperimentKind::Kahane,
            Verify::Tails => ExperimentKind::Tails,
        }
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[arg(long, default_value_t = 20_000)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-6)]
    tolerance: f64,
    #[arg(long, default_value_t = 3.0)]
    step_size: f64,
    #[arg(long, default_value_t = 1)]
    restarts: usize,
}

#[derive(Args, Debug)]
struct GridArgs {
    /// Experiment config (JSON); command-line values override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated shapes, e.g. 2x2,4x4.
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<String>>,
    /// Comma-separated N values.
    #[arg(long, value_delimiter = ',')]
    terms: Option<Vec<usize>>,
    /// Comma-separated exponents (`inf` allowed).
    #[arg(long, value_delimiter = ',')]
    exponents: Option<Vec<SchattenExponent>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    randomizer: Option<Randomizer>,
}

#[derive(Subcommand, Debug)]
enum HardyCommand {
    /// Lower bound on the analytic-UMD constant by random search.
    Umd {
        /// Coefficient space, e.g. euclidean:2, l1:3, linf:4, schatten(1):2.
        #[arg(long, default_value = "euclidean:2")]
        space: CoefficientSpace,
        /// Torus truncation M.
        #[arg(long, default_value_t = 4)]
        torus_dim: usize,
        #[arg(long, default_value_t = 2)]
        degree: u32,
        /// Terms per random polynomial.
        #[arg(long, default_value_t = 8)]
        poly_terms: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 256)]
        sign_search_budget: usize,
        #[arg(long, default_value_t = 2000)]
        quadrature_samples: usize,
        #[arg(long)]
        rotated: bool,
        #[arg(long)]
        include_level_zero: bool,
    },
    /// Hardy test, martingale differences and L2 norm of a polynomial.
    Check {
        /// Polynomial JSON: {"M", "coeff_dim", "norm", "terms"}.
        polynomial: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        quadrature_samples: usize,
    },
}

/// Output path meaning standard output.
const STDOUT: &str = "-";

fn read_input(path: &Path) -> anyhow::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn parse_dims(items: &[String]) -> anyhow::Result<Vec<[usize; 2]>> {
    items
        .iter()
        .map(|s| {
            let (a, b) = s.split_once(['x', 'X']).with_context(|| format!("shape {s:?} is not of the form D1xD2"))?;
            Ok([a.trim().parse()?, b.trim().parse()?])
        })
        .collect()
}

/// Flat JSON object as a two-line CSV table.
fn object_csv(v: &Value) -> anyhow::Result<Vec<u8>> {
    let Value::Object(map) = v else { bail!("CSV output needs a flat object") };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(map.keys())?;
    w.write_record(map.values().map(|x| match x {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }))?;
    Ok(w.into_inner()?)
}

fn emit(cli: &Cli, value: &Value) -> anyhow::Result<()> {
    let bytes = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s.into_bytes()
        }
        Format::Csv => object_csv(value)?,
    };
    write_bytes(cli.output.as_deref(), &bytes)
}

fn write_bytes(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

fn experiment_config(cli: &Cli, kind: ExperimentKind, grid: &GridArgs) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &grid.config {
        Some(path) => {
            let mut configs = parse_suite(&read_input(path)?)?;
            let pos = configs.iter().position(|c| c.kind().ok() == Some(kind));
            match pos {
                Some(i) => configs.swap_remove(i),
                None => bail!("{} has no {kind} experiment", path.display()),
            }
        }
        None => {
            let mut c = ExperimentConfig::new(kind, STDOUT);
            c.seed = cli.seed;
            c
        }
    };
    if grid.config.is_none() || cli.seed != 0 {
        cfg.seed = cli.seed;
    }
    if let Some(d) = &grid.dims {
        cfg.dims = parse_dims(d)?;
    }
    if let Some(t) = &grid.terms {
        cfg.terms = t.clone();
    }
    if let Some(e) = &grid.exponents {
        cfg.exponents = e.clone();
    }
    if let Some(t) = grid.trials {
        cfg.trials = t;
    }
    if let Some(s) = grid.samples {
        cfg.samples = s;
    }
    if grid.randomizer.is_some() {
        cfg.randomizer = grid.randomizer;
    }
    cfg.format = cli.format.into();
    if let Some(o) = &cli.output {
        cfg.output_path = o.display().to_string();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Schatten { matrix, p } => {
            let m = CMatrix::from_json(&read_input(matrix)?)?;
            emit(cli, &json!({ "rows": m.rows(), "cols": m.cols(), "p": p, "norm": schatten_norm(&m, *p)? }))?;
        }
        Command::Chi { sequence, q } => {
            let s = Sequence::from_json(&read_input(sequence)?)?;
            let chi = chi_norm_flagged(&s, *q)?;
            emit(
                cli,
                &json!({
                    "q": q,
                    "chi": chi.value,
                    "column": column_square_norm(&s, *q)?,
                    "row": row_square_norm(&s, *q)?,
                    "warning": chi.warning,
                }),
            )?;
        }
        Command::TripleNorm { sequence, p, solver } => {
            let s = Sequence::from_json(&read_input(sequence)?)?;
            let cfg = SolverConfig {
                max_iterations: solver.max_iterations,
                tolerance: solver.tolerance,
                step_size: solver.step_size,
                restart_count: solver.restarts,
                seed: cli.seed,
            };
            let res = triple_norm(&s, *p, &cfg)?;
            let mut v = serde_json::to_value(res.report())?;
            v["p"] = json!(p);
            v["warning"] = json!(res.warning);
            emit(cli, &v)?;
        }
        Command::Simulate { sequence, p, randomizer, samples, moment, exhaustive_limit } => {
            let s = Sequence::from_json(&read_input(sequence)?)?;
            let method = SeriesMethod::auto(*randomizer, s.len(), *exhaustive_limit, *samples, cli.seed);
            let est = series_norm(&s, method, *p, *moment)?;
            let mut v = serde_json::to_value(&est)?;
            v["p"] = json!(p);
            v["randomizer"] = json!(randomizer);
            v["moment"] = json!(moment);
            emit(cli, &v)?;
        }
        Command::Verify { which, grid } => {
            let cfg = experiment_config(cli, (*which).into(), grid)?;
            if cfg.output_path == STDOUT {
                let report = run_experiment(&cfg)?;
                write_bytes(None, &render_report(&report, cfg.format)?)?;
            } else {
                let entry = run_and_persist(&cfg, None)?;
                eprintln!("{}: {} ({} records) -> {}", entry.name, entry.status, entry.records, entry.output_path);
                if let Some(e) = entry.error {
                    bail!(e);
                }
            }
        }
        Command::Hardy { command } => match command {
            HardyCommand::Umd {
                space,
                torus_dim,
                degree,
                poly_terms,
                trials,
                sign_search_budget,
                quadrature_samples,
                rotated,
                include_level_zero,
            } => {
                let cfg = UmdSearchConfig {
                    space: *space,
                    torus_dim: *torus_dim,
                    degree: *degree,
                    terms: *poly_terms,
                    trials: *trials,
                    sign_search_budget: *sign_search_budget,
                    quadrature_samples: *quadrature_samples,
                    seed: cli.seed,
                    options: TransformOptions { rotated: *rotated, include_level_zero: *include_level_zero },
                };
                let est = estimate_analytic_umd_constant(&cfg)?;
                match cli.format {
                    Format::Json => emit(cli, &serde_json::to_value(&est)?)?,
                    Format::Csv => emit(
                        cli,
                        &json!({
                            "space": space,
                            "lower_bound": est.lower_bound,
                            "std_error": est.std_error,
                            "exact": est.exact,
                            "candidates": est.candidates,
                            "seed": est.seed,
                        }),
                    )?,
                }
            }
            HardyCommand::Check { polynomial, quadrature_samples } => {
                let f = TorusPolynomial::<f64>::from_json(&read_input(polynomial)?)?;
                let quad = Quadrature::MonteCarlo { samples: *quadrature_samples, seed: cli.seed };
                let diffs: Vec<f64> = f.martingale_differences().iter().map(|d| d.l2_norm(quad).map(|r| r.estimate)).collect::<Result<_, _>>()?;
                let l2 = f.l2_norm(quad)?;
                let v = json!({
                    "hardy": f.is_hardy(),
                    "terms": f.terms().len(),
                    "degree": f.degree(),
                    "l2_norm": l2.estimate,
                    "l2_std_error": l2.std_error,
                    "exact": l2.exact,
                    "difference_norms": diffs,
                });
                match cli.format {
                    Format::Json => emit(cli, &v)?,
                    Format::Csv => {
                        let mut flat = v.clone();
                        flat["difference_norms"] = json!(diffs.iter().map(f64::to_string).collect::<Vec<_>>().join(";"));
                        emit(cli, &flat)?
                    }
                }
            }
        },
        Command::Suite { config } => {
            let outcome = run_suite(config)?;
            for e in &outcome.entries {
                eprintln!("{}: {} ({} records, {} ms) -> {}", e.name, e.status, e.records, e.wall_clock_ms, e.output_path);
                if let Some(err) = &e.error {
                    eprintln!("  error: {err}");
                }
            }
            if !outcome.all_ok() {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: cannot configure {j} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            if let Some(Error::Config { line, message }) = e.downcast_ref::<Error>() {
                eprintln!("config error at line {line}: {message}");
                return ExitCode::from(2);
            }
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
