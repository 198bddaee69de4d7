//! Table emission, the reproducibility header and read-back verification.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trapmass::constants::CONSTANTS_VERSION;

use crate::config::Format;
use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "TRAPMASS_OUT_DIR";

/// Columns that hold probabilities or visibilities.
const UNIT_INTERVAL_COLUMNS: &[&str] = &["P", "V", "V_analytic", "P_exact", "P_approx", "Q", "vacuum_visibility"];
const UNIT_INTERVAL_SLACK: f64 = 1e-9;

/// Formats like C's `%.17g`, which round-trips every finite `f64`.
pub fn format_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let prec = (16 - exp) as usize;
        trim_zeros(&format!("{x:.prec$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub tool: String,
    pub version: String,
    pub experiment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
    pub constants: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated: Option<String>,
}

impl Meta {
    pub fn new(experiment: &str, config_sha256: Option<String>, timestamp: bool) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            experiment: experiment.into(),
            config_sha256,
            constants: CONSTANTS_VERSION.into(),
            generated: timestamp
                .then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        }
    }

    fn header_lines(&self) -> String {
        let mut s = format!("# {} {}\n# experiment: {}\n", self.tool, self.version, self.experiment);
        if let Some(h) = &self.config_sha256 {
            s += &format!("# config_sha256: {h}\n");
        }
        s += &format!("# constants: {}\n", self.constants);
        if let Some(t) = &self.generated {
            s += &format!("# generated: {t}\n");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    meta: Meta,
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

/// Extra read-back checks an experiment declares for its table.
#[derive(Debug, Clone, PartialEq)]
pub enum Invariant {
    /// `Σ column · weight = 1` within `tol`.
    SumsToOne { column: &'static str, weight: f64, tol: f64 },
}

/// Output directory: `--out`, then the environment override, then `.`.
pub fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e))
}

pub fn write_table(path: &Path, format: Format, meta: &Meta, table: &Table) -> Result<(), CliError> {
    ensure_parent(path)?;
    let bytes = match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(meta.header_lines().into_bytes());
            w.write_record(&table.columns).map_err(csv_error)?;
            for row in &table.rows {
                w.write_record(row.iter().map(|&x| format_g17(x))).map_err(csv_error)?;
            }
            w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))?
        }
        Format::Json => {
            let doc = JsonTable {
                meta: meta.clone(),
                columns: table.columns.clone(),
                rows: table.rows.iter().map(|r| r.iter().map(|x| x.is_finite().then_some(*x)).collect()).collect(),
            };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.into()))?;
            s.push('\n');
            s.into_bytes()
        }
    };
    fs::write(path, bytes)?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, meta: &Meta, body: &S) -> Result<(), CliError> {
    ensure_parent(path)?;
    let doc = serde_json::json!({ "meta": meta, "summary": body });
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.into()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// `run.csv` → `run.summary.json`.
pub fn summary_path(data: &Path) -> PathBuf {
    data.with_extension("summary.json")
}

/// Re-reads a written table, checking that every cell round-trips exactly.
pub fn read_table(path: &Path, format: Format) -> Result<Table, CliError> {
    match format {
        Format::Csv => {
            let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).map_err(csv_error)?;
            let columns: Vec<String> = r.headers().map_err(csv_error)?.iter().map(String::from).collect();
            let mut rows = Vec::new();
            for (i, rec) in r.records().enumerate() {
                let rec = rec.map_err(csv_error)?;
                let row = rec
                    .iter()
                    .map(|field| {
                        let x: f64 = field
                            .parse()
                            .map_err(|_| CliError::Verify(format!("row {i}: `{field}` is not a number")))?;
                        if format_g17(x) != field {
                            return Err(CliError::Verify(format!("row {i}: `{field}` does not round-trip")));
                        }
                        Ok(x)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                rows.push(row);
            }
            Ok(Table { columns, rows })
        }
        Format::Json => {
            let text = fs::read_to_string(path)?;
            let doc: JsonTable = serde_json::from_str(&text).map_err(|e| CliError::Verify(e.to_string()))?;
            let rows = doc.rows.into_iter().map(|r| r.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect()).collect();
            Ok(Table { columns: doc.columns, rows })
        }
    }
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

/// Re-reads `path` and checks it against `expected` and the declared invariants.
pub fn verify_written(path: &Path, format: Format, expected: &Table, invariants: &[Invariant]) -> Result<(), CliError> {
    let got = read_table(path, format)?;
    if got.columns != expected.columns || got.rows.len() != expected.rows.len() {
        return Err(CliError::Verify(format!("{}: shape differs from what was written", path.display())));
    }
    for (i, (a, b)) in got.rows.iter().zip(&expected.rows).enumerate() {
        // JSON cannot carry infinities; they come back as NaN.
        let json_inf = |x: f64, y: f64| format == Format::Json && x.is_nan() && y.is_infinite();
        if a.len() != b.len() || a.iter().zip(b).any(|(&x, &y)| !same(x, y) && !json_inf(x, y)) {
            return Err(CliError::Verify(format!("row {i} differs after read-back")));
        }
    }
    for name in UNIT_INTERVAL_COLUMNS {
        if let Some(col) = got.column(name) {
            if let Some((i, v)) = col
                .iter()
                .enumerate()
                .find(|(_, v)| !v.is_nan() && !(-UNIT_INTERVAL_SLACK..=1.0 + UNIT_INTERVAL_SLACK).contains(*v))
            {
                return Err(CliError::Verify(format!("column {name} row {i}: {v} outside [0, 1]")));
            }
        }
    }
    for inv in invariants {
        match *inv {
            Invariant::SumsToOne { column, weight, tol } => {
                let col = got.column(column).ok_or_else(|| CliError::Verify(format!("missing column {column}")))?;
                let sum: f64 = col.iter().sum::<f64>() * weight;
                if (sum - 1.0).abs() > tol {
                    return Err(CliError::Verify(format!("column {column} sums to {sum}, expected 1 within {tol}")));
                }
            }
        }
    }
    Ok(())
}
