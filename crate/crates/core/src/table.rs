//! Result tables and their CSV serialization.
//!
//! CSV files are UTF-8, comma separated, with `.` as decimal separator and
//! reals printed with 12 significant digits. They open with `#`-prefixed
//! provenance comments, the last of which is a SHA-256 digest over the
//! preceding ones.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Real(x) => Some(*x),
            Cell::Text(s) => s.parse().ok(),
            Cell::Empty => None,
        }
    }

    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => format_sig(*x, 12),
            Cell::Text(s) => escape(s),
            Cell::Empty => String::new(),
        }
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Formats `x` with `digits` significant digits, C `%g` style: plain notation
/// for moderate exponents, scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Plain rectangular table ready for CSV output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub provenance: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    /// Hex SHA-256 (first 16 digits) of the provenance entries.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (k, v) in &self.provenance {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b"\n");
        }
        hasher.finalize()[..8]
            .iter()
            .fold(String::new(), |mut s, b| {
                let _ = write!(s, "{b:02x}");
                s
            })
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.provenance {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "# config-hash: {}", self.config_hash());
        let header: Vec<String> = self.header.iter().map(|h| escape(h)).collect();
        let _ = writeln!(out, "{}", header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

pub fn write_csv(table: &CsvTable, path: &Path) -> Result<()> {
    fs::write(path, table.to_csv_string()).map_err(|e| Error::io(path, e))
}

/// Mean, standard error and trial count of one statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl Stat {
    /// Summarizes values in the given order; the standard error of a single
    /// value is reported as zero.
    pub fn from_values(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                stderr: f64::NAN,
                trials: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Stat {
            mean,
            stderr,
            trials: n,
        }
    }

    pub fn exact(value: f64) -> Self {
        Stat {
            mean: value,
            stderr: 0.0,
            trials: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub coordinates: Vec<Cell>,
    pub statistic: String,
    pub stat: Stat,
}

/// Aggregated sweep output: one row per (coordinates, statistic).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub coordinate_names: Vec<String>,
    pub rows: Vec<StatRow>,
    pub provenance: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(coordinate_names: &[&str]) -> Self {
        Self {
            coordinate_names: coordinate_names.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, coordinates: Vec<Cell>, statistic: &str, stat: Stat) {
        debug_assert_eq!(coordinates.len(), self.coordinate_names.len());
        self.rows.push(StatRow {
            coordinates,
            statistic: statistic.to_string(),
            stat,
        });
    }

    /// Rows of one statistic.
    pub fn statistic<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a StatRow> + 'a {
        self.rows.iter().filter(move |r| r.statistic == name)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut header = self.coordinate_names.clone();
        header.extend(["statistic", "mean", "stderr", "trials"].map(String::from));
        CsvTable {
            header,
            rows: self
                .rows
                .iter()
                .map(|r| {
                    let mut cells = r.coordinates.clone();
                    cells.push(Cell::Text(r.statistic.clone()));
                    cells.push(Cell::Real(r.stat.mean));
                    cells.push(Cell::Real(r.stat.stderr));
                    cells.push(Cell::Int(r.stat.trials as i64));
                    cells
                })
                .collect(),
            provenance: self.provenance.clone(),
        }
    }
}
