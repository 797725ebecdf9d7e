use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

pub const CSV_SCHEMA: &str = "# uccheck-csv v1";

/// One pass/fail entry of a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value ≤ tolerance`; NaN never passes.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            pass: value <= tolerance,
            value,
            tolerance,
        }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: impl Into<String>, value: f64, tolerance: f64) -> Check {
        Check {
            name: name.into(),
            pass: value >= tolerance,
            value,
            tolerance,
        }
    }

    pub fn flag(name: impl Into<String>, pass: bool) -> Check {
        Check {
            name: name.into(),
            pass,
            value: if pass { 1.0 } else { 0.0 },
            tolerance: 1.0,
        }
    }

    /// A check that could not be evaluated.
    pub fn failed(name: impl Into<String>, why: &str) -> Check {
        let name = name.into();
        log::error!("{name}: {why}");
        Check {
            name,
            pass: false,
            value: f64::NAN,
            tolerance: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Cell {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Cell {
        Cell::Text(v)
    }
}

/// Scientific notation with 12 significant digits.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.11e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> std::io::Result<Vec<u8>> {
        let mut buf = Vec::new();
        writeln!(buf, "{CSV_SCHEMA} table={}", self.name)?;
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().map_err(|e| e.into_error())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn extend(&mut self, other: SuiteOutput) {
        self.checks.extend(other.checks);
        self.tables.extend(other.tables);
    }

    /// `{check: {pass, value, tolerance}}`, in check order. Non-finite
    /// numbers are written as strings.
    pub fn summary_json(&self) -> String {
        let num = |v: f64| {
            if v.is_finite() {
                Value::from(v)
            } else {
                Value::from(format_number(v))
            }
        };
        let mut map = Map::new();
        for c in &self.checks {
            let mut entry = Map::new();
            entry.insert("pass".into(), Value::from(c.pass));
            entry.insert("value".into(), num(c.value));
            entry.insert("tolerance".into(), num(c.tolerance));
            map.insert(c.name.clone(), Value::Object(entry));
        }
        serde_json::to_string_pretty(&Value::Object(map)).expect("summary serializes") + "\n"
    }

    /// Writes `<table>.csv` per table and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            fs::write(&path, t.to_csv()?)?;
            written.push(path);
        }
        let path = dir.join("summary.json");
        fs::write(&path, self.summary_json())?;
        written.push(path);
        Ok(written)
    }
}
