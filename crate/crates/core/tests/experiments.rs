//! End-to-end behaviour of experiments, suite files and persisted outputs.

use num_complex::Complex;
use series_lab::experiments::{
    counterexample_row_column, dichotomy_demo, estimate_type_cotype, parse_suite, recompute_record, run_experiment, run_suite,
    Direction, ExperimentConfig, ExperimentKind, InstanceFamily, Manifest, OutputFormat, TypeCotypeConfig, CSV_COLUMNS,
};
use series_lab::series::Randomizer;
use series_lab::{CoefficientSpace, Error, SchattenExponent};

fn exponent(p: f64) -> SchattenExponent {
    SchattenExponent::new(p).unwrap()
}

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind, "unused.json");
    cfg.dims = vec![[2, 3], [3, 2]];
    cfg.terms = vec![2, 5];
    cfg.trials = 2;
    cfg.samples = 400;
    cfg.seed = 77;
    cfg
}

#[test]
fn records_recompute_from_metadata() {
    let mut thm3 = small(ExperimentKind::Thm3);
    thm3.exponents = vec![exponent(2.0), exponent(4.0)];
    thm3.terms = vec![3, 14];
    let mut thm4 = small(ExperimentKind::Thm4);
    thm4.exponents = vec![exponent(1.0), exponent(1.5)];
    let mut kahane = small(ExperimentKind::Kahane);
    kahane.randomizer = Some(Randomizer::Steinhaus);
    for cfg in [thm3, thm4, kahane] {
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.records.len(), 2 * 2 * cfg.exponents.len() * 2);
        for rec in &report.records {
            assert_eq!(rec.ratio, rec.numerator / rec.denominator);
            assert!(rec.denominator > 0.0);
            assert_eq!(&recompute_record(&cfg, rec).unwrap(), rec);
        }
    }
}

#[test]
fn instance_seeds_are_distinct_and_stable() {
    let cfg = small(ExperimentKind::Thm3);
    let a = run_experiment(&cfg).unwrap();
    let mut seeds: Vec<u64> = a.records.iter().map(|r| r.seed).collect();
    seeds.sort_unstable();
    seeds.dedup();
    assert_eq!(seeds.len(), a.records.len());
    assert_eq!(run_experiment(&cfg).unwrap(), a);
    let other = ExperimentConfig { seed: 78, ..cfg };
    assert_ne!(run_experiment(&other).unwrap().records[0].seed, a.records[0].seed);
}

#[test]
fn q_two_and_p_two_collapse_to_one() {
    let mut thm3 = small(ExperimentKind::Thm3);
    thm3.exponents = vec![exponent(2.0)];
    let mut thm4 = small(ExperimentKind::Thm4);
    thm4.exponents = vec![exponent(2.0)];
    for cfg in [thm3, thm4] {
        for rec in run_experiment(&cfg).unwrap().records {
            assert!((rec.ratio - 1.0).abs() <= 1e-6, "{rec:?}");
        }
    }
}

#[test]
fn single_term_rademacher_ratio_is_one() {
    for (kind, p) in [(ExperimentKind::Thm3, 3.0), (ExperimentKind::Thm4, 1.0)] {
        let mut cfg = small(kind);
        cfg.terms = vec![1];
        cfg.exponents = vec![exponent(p)];
        for rec in run_experiment(&cfg).unwrap().records {
            assert!((rec.ratio - 1.0).abs() <= 1e-6, "{kind}: {}", rec.ratio);
        }
    }
}

#[test]
fn counterexample_closed_forms() {
    let rows = counterexample_row_column(exponent(4.0), &[1, 4, 16], 12, 100, 0).unwrap();
    assert!((rows[0].ratio - 1.0).abs() <= 1e-12);
    let r4 = &rows[1];
    assert!((r4.series_norm - 2.0).abs() <= 1e-12);
    assert!((r4.column_functional - 2f64.sqrt()).abs() <= 1e-12);
    assert!((r4.row_functional - 2.0).abs() <= 1e-12);
    for r in &rows {
        assert!((r.min_pattern_norm - r.max_pattern_norm).abs() <= 1e-12);
    }
    assert!(counterexample_row_column(exponent(2.0), &[4], 12, 100, 0).is_err());
}

#[test]
fn dichotomy_single_coordinate_is_half_normal() {
    let rows = dichotomy_demo(&[1], 20_000, 5).unwrap();
    let g = &rows[0].gaussian;
    assert!(g.within((2.0 / std::f64::consts::PI).sqrt(), 3.0, 0.0), "{g:?}");
    assert_eq!(rows[0].rademacher.estimate, 1.0);
    assert!(rows[0].rademacher.exact);
}

#[test]
fn type_and_cotype_examples() {
    let base = TypeCotypeConfig {
        space: CoefficientSpace::Euclidean(3),
        exponent: exponent(2.0),
        direction: Direction::Type,
        families: 4,
        family_size: 5,
        randomizer: Randomizer::Rademacher,
        samples: 500,
        exhaustive_limit: 12,
        seed: 3,
    };
    let est = estimate_type_cotype(&base).unwrap();
    assert!(est.exact);
    assert!((est.constant - 1.0).abs() <= 1e-9, "{}", est.constant);

    // size-one families: the series norm is the norm of the single vector
    let single = TypeCotypeConfig { family_size: 1, space: CoefficientSpace::L1(3), ..base.clone() };
    for dir in [Direction::Type, Direction::Cotype] {
        let est = estimate_type_cotype(&TypeCotypeConfig { direction: dir, ..single.clone() }).unwrap();
        for f in est.families.iter().filter(|f| f.size == 1) {
            assert!((f.ratio - 1.0).abs() <= 1e-12, "{dir:?} {}: {}", f.family, f.ratio);
        }
        let one_dim = TypeCotypeConfig { direction: dir, space: CoefficientSpace::Euclidean(1), ..single.clone() };
        assert!((estimate_type_cotype(&one_dim).unwrap().constant - 1.0).abs() <= 1e-12);
    }

    let n = 9;
    let cotype = TypeCotypeConfig { space: CoefficientSpace::LInf(n), direction: Direction::Cotype, families: 0, ..base };
    let est = estimate_type_cotype(&cotype).unwrap();
    assert!(est.constant >= (n as f64).sqrt() - 1e-9, "{}", est.constant);
}

#[test]
fn vector_series_of_unit_vectors_in_linf() {
    let v: Vec<Vec<Complex<f64>>> =
        (0..4).map(|i| (0..4).map(|j| Complex::new(if i == j { 1.0 } else { 0.0 }, 0.0)).collect()).collect();
    let r = series_lab::experiments::vector_series_norm(CoefficientSpace::LInf(4), &v, series_lab::series::SeriesMethod::Exhaustive, 2.0)
        .unwrap();
    assert_eq!(r.estimate, 1.0);
}

#[test]
fn suite_writes_data_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested/thm3.csv");
    let suite = serde_json::json!({
        "name": "thm3", "dims": [[2, 2]], "terms": [2, 3], "exponents": [2, 4], "trials": 2,
        "output_path": out.to_string_lossy(), "format": "csv", "seed": 5
    });
    let config = dir.path().join("suite.json");
    std::fs::write(&config, suite.to_string()).unwrap();
    let outcome = run_suite(&config).unwrap();
    assert!(outcome.all_ok());

    let mut reader = csv::Reader::from_path(&out).unwrap();
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 8);
    for row in &rows {
        let num: f64 = row[6].parse().unwrap();
        let den: f64 = row[7].parse().unwrap();
        let ratio: f64 = row[8].parse().unwrap();
        assert_eq!(ratio, num / den);
        assert_eq!(&row[5], "rademacher");
    }

    let manifest_path = format!("{}.manifest.json", out.to_string_lossy());
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path).unwrap()).unwrap();
    assert_eq!(manifest.config_sha256.len(), 64);
    assert_eq!(manifest.acceptance_band, (0.25, 4.0));
    assert_eq!(manifest.entry.status, "ok");
    assert_eq!(manifest.entry.format, OutputFormat::Csv);
    assert_eq!(manifest.entry.instance_seeds.len(), 8);
    let csv_seeds: Vec<u64> = rows.iter().map(|r| r[9].parse().unwrap()).collect();
    assert_eq!(manifest.entry.instance_seeds, csv_seeds);
}

#[test]
fn json_output_has_no_timing_fields() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("dich.json");
    let suite = serde_json::json!([{ "name": "dichotomy", "terms": [1, 4], "samples": 300, "output_path": out.to_string_lossy() }]);
    let config = dir.path().join("suite.json");
    std::fs::write(&config, suite.to_string()).unwrap();
    run_suite(&config).unwrap();
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains("wall_clock") && !text.contains("unix_ms"));
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["details"]["gaussian_increasing"], true);
}

#[test]
fn failed_experiment_is_recorded_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    // an existing directory cannot be replaced by the data file
    let bad = dir.path().join("taken");
    std::fs::create_dir(&bad).unwrap();
    let suite = serde_json::json!([
        { "name": "kahane", "dims": [[1, 1]], "terms": [2], "trials": 1, "output_path": good.to_string_lossy() },
        { "name": "kahane", "dims": [[1, 1]], "terms": [2], "trials": 1, "output_path": bad.to_string_lossy() }
    ]);
    let config = dir.path().join("suite.json");
    std::fs::write(&config, suite.to_string()).unwrap();
    let outcome = run_suite(&config).unwrap();
    assert!(!outcome.all_ok());
    assert_eq!(outcome.entries[0].status, "ok");
    assert_eq!(outcome.entries[1].status, "failed");
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.manifest.json", bad.to_string_lossy())).unwrap()).unwrap();
    assert!(manifest.entry.error.is_some());
    assert!(bad.is_dir());
}

#[test]
fn config_errors_name_their_line() {
    let cases = [
        ("{\n  \"name\": \"thm4\",\n  \"output_path\": \"a.json\",\n  \"exponents\": [1, 3]\n}", 4),
        ("{\n  \"name\": \"thm3\",\n  \"output_path\": \"a.json\",\n  \"trials\": 0\n}", 4),
        ("[\n  {\"name\": \"thm3\", \"output_path\": \"a.json\"},\n  {\"name\": \"nonsense\",\n   \"output_path\": \"b.json\"}\n]", 3),
        ("{\n  \"name\": \"dichotomy\",\n  \"output_path\": \"a.json\",\n\n  \"terms\": [16, 2]\n}", 5),
        ("{\n  \"name\": \"thm3\",\n  \"output_path\": \"a.json\",\n  \"seed\": -1\n}", 4),
    ];
    for (text, line) in cases {
        match parse_suite(text) {
            Err(Error::Config { line: got, message }) => assert_eq!(got, line, "{message}\n{text}"),
            other => panic!("expected a config error for\n{text}\ngot {other:?}"),
        }
    }
}

#[test]
fn family_generators_have_requested_shape() {
    for family in [InstanceFamily::Gaussian, InstanceFamily::RowUnits, InstanceFamily::Diagonal, InstanceFamily::RankOne] {
        let seq = family.generate(5, 3, 4, 1);
        assert_eq!(seq.len(), 5);
        assert_eq!(seq.shape(), (3, 4));
        assert_eq!(family.generate(5, 3, 4, 1), seq);
    }
}
