//! Suite files, atomic output writing and manifests.
//!
//! A suite file holds one experiment config or a JSON array of them. Data
//! files contain only deterministic values; timing lives in the manifest
//! written next to each data file as `<output_path>.manifest.json`.

use std::io::Write;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{run_experiment, ExperimentConfig, ExperimentReport, OutputFormat, ACCEPTANCE_BAND};
use crate::error::{Error, Result};

/// Column order of CSV data files.
pub const CSV_COLUMNS: [&str; 10] =
    ["instance_id", "d1", "d2", "N", "exponent", "randomizer", "numerator", "denominator", "ratio", "seed"];

/// Parses a suite file. Syntax errors carry the parser's line; invalid
/// values carry the line of the offending field.
pub fn parse_suite(text: &str) -> Result<Vec<ExperimentConfig>> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config { line: e.line(), message: e.to_string() })?;
    let count = match value {
        serde_json::Value::Array(items) if items.iter().all(|v| v.is_object()) => items.len(),
        serde_json::Value::Object(_) => 1,
        _ => return Err(Error::Config { line: 1, message: "expected an experiment object or an array of them".into() }),
    };
    let starts = object_starts(text);
    let mut configs = Vec::with_capacity(count);
    for k in 0..count {
        let start = starts.get(k).copied().unwrap_or(0);
        let end = starts.get(k + 1).copied().unwrap_or(text.len());
        // deserialising from the object's own text keeps serde's positions
        let mut de = serde_json::Deserializer::from_str(&text[start..end]);
        let cfg = ExperimentConfig::deserialize(&mut de).map_err(|e| {
            let msg = e.to_string();
            let line = match quoted_field(&msg) {
                Some(f) if msg.starts_with("missing field") => field_line(text, start, end, f),
                _ => line_of(text, start) + e.line().saturating_sub(1),
            };
            Error::Config { line, message: msg }
        })?;
        if let Err((field, msg)) = cfg.validate() {
            return Err(Error::Config { line: field_line(text, start, end, field), message: format!("{field}: {msg}") });
        }
        configs.push(cfg);
    }
    Ok(configs)
}

/// Byte offsets at which each experiment object opens.
fn object_starts(text: &str) -> Vec<usize> {
    let top_is_array = text.trim_start().starts_with('[');
    let target = if top_is_array { 1 } else { 0 };
    let (mut depth, mut in_str, mut escaped) = (0usize, false, false);
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        if in_str {
            match (escaped, c) {
                (true, _) => escaped = false,
                (false, '\\') => escaped = true,
                (false, '"') => in_str = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_str = true,
            '{' | '[' => {
                if c == '{' && depth == target {
                    out.push(i);
                }
                depth += 1;
            }
            '}' | ']' => depth = depth.saturating_sub(1),
            _ => {}
        }
    }
    out
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn field_line(text: &str, start: usize, end: usize, field: &str) -> usize {
    let key = format!("\"{field}\"");
    text[start..end].find(&key).map_or(line_of(text, start), |i| line_of(text, start + i))
}

/// Field name quoted with backticks in a serde message, if any.
fn quoted_field(msg: &str) -> Option<&str> {
    let a = msg.find('`')? + 1;
    let b = a + msg[a..].find('`')?;
    Some(&msg[a..b])
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Serialises a report in the requested format.
pub fn render_report(report: &ExperimentReport, format: OutputFormat) -> Result<Vec<u8>> {
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(report)?;
            s.push('\n');
            Ok(s.into_bytes())
        }
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)?;
            for r in &report.records {
                w.write_record([
                    r.instance_id.clone(),
                    r.d1.to_string(),
                    r.d2.to_string(),
                    r.n.to_string(),
                    r.exponent.to_string(),
                    r.randomizer.to_string(),
                    r.numerator.to_string(),
                    r.denominator.to_string(),
                    r.ratio.to_string(),
                    r.seed.to_string(),
                ])?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))
        }
    }
}

/// Writes the data file of `report` to `path`.
pub fn write_report(report: &ExperimentReport, format: OutputFormat, path: &Path) -> Result<()> {
    write_atomic(path, &render_report(report, format)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub experiment: String,
    pub seed: u64,
    pub output_path: String,
    pub format: OutputFormat,
    /// `ok` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub records: usize,
    /// Instance seeds in record order.
    pub instance_seeds: Vec<u64>,
    pub wall_clock_ms: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub version: String,
    pub acceptance_band: (f64, f64),
    pub started_unix_ms: u128,
    pub entry: ManifestEntry,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub entries: Vec<ManifestEntry>,
}

impl SuiteOutcome {
    pub fn all_ok(&self) -> bool {
        self.entries.iter().all(|e| e.status == "ok")
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one experiment, writes its data file and manifest, and reports the
/// status without propagating experiment failures. Without a suite-file
/// hash the manifest records the hash of the serialised config.
pub fn run_and_persist(cfg: &ExperimentConfig, config_sha256: Option<&str>) -> Result<ManifestEntry> {
    let config_sha256 = match config_sha256 {
        Some(h) => h.to_string(),
        None => sha256_hex(serde_json::to_string(cfg)?.as_bytes()),
    };
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let clock = Instant::now();
    let out = Path::new(&cfg.output_path);
    let result = run_experiment(cfg).and_then(|report| {
        write_report(&report, cfg.format, out)?;
        Ok(report)
    });
    let mut entry = ManifestEntry {
        name: cfg.name.clone(),
        experiment: cfg.kind().map_or_else(|_| cfg.name.clone(), |k| k.to_string()),
        seed: cfg.seed,
        output_path: cfg.output_path.clone(),
        format: cfg.format,
        status: "ok".into(),
        error: None,
        records: 0,
        instance_seeds: Vec::new(),
        wall_clock_ms: 0,
    };
    match result {
        Ok(report) => {
            entry.records = report.records.len();
            entry.instance_seeds = report.records.iter().map(|r| r.seed).collect();
        }
        Err(e) => {
            entry.status = "failed".into();
            entry.error = Some(e.to_string());
        }
    }
    entry.wall_clock_ms = clock.elapsed().as_millis();
    let manifest = Manifest {
        config_sha256,
        version: env!("CARGO_PKG_VERSION").to_string(),
        acceptance_band: ACCEPTANCE_BAND,
        started_unix_ms,
        entry: entry.clone(),
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    write_atomic(Path::new(&format!("{}.manifest.json", cfg.output_path)), text.as_bytes())?;
    Ok(entry)
}

/// Parses and runs every experiment of a suite file. Configuration errors
/// abort before anything runs; experiment failures are recorded per entry.
pub fn run_suite(config_path: &Path) -> Result<SuiteOutcome> {
    let text = std::fs::read_to_string(config_path)?;
    let configs = parse_suite(&text)?;
    let hash = sha256_hex(text.as_bytes());
    let entries = configs.iter().map(|cfg| run_and_persist(cfg, Some(&hash))).collect::<Result<_>>()?;
    Ok(SuiteOutcome { entries })
}
