//! Tables and their CSV/JSON encodings.
//!
//! Floats are written in the shortest form that parses back to the same
//! value, so identical runs give identical bytes.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

/// Shortest round-trip decimal, always with a `.` or an exponent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn json_num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => fmt_f64(*x),
                    Cell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|c| match c {
                            Cell::Num(x) => json_num(*x),
                            Cell::Text(s) => Value::String(s.clone()),
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => render_json(&self.to_json()),
        }
    }
}

pub fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Where command output goes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sink {
    pub path: Option<PathBuf>,
    pub stdout: bool,
}

impl Sink {
    pub fn write(&self, text: &str) -> Result<(), CliError> {
        if self.stdout {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })?;
        }
        if let Some(p) = &self.path {
            write_file(p, text)?;
        }
        Ok(())
    }

    /// Writes `meta` next to the main output file, if there is one.
    pub fn write_sidecar(&self, meta: &Value) -> Result<Option<PathBuf>, CliError> {
        match &self.path {
            Some(p) => {
                let side = sidecar_path(p);
                write_file(&side, &render_json(meta))?;
                Ok(Some(side))
            }
            None => Ok(None),
        }
    }
}

/// `out.csv` → `out.meta.json`.
pub fn sidecar_path(p: &Path) -> PathBuf {
    p.with_extension("meta.json")
}

fn write_file(p: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(p, text).map_err(|source| CliError::Write {
        path: p.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for x in [1.0, 0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, std::f64::consts::FRAC_1_PI] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
            assert!(digits <= 17 + 3, "{s}");
        }
        assert_eq!(fmt_f64(1.0), "1.0");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["E", "rho"]);
        t.push(vec![1.0.into(), 0.5.into()]);
        t.push(vec![2.0.into(), "x".into()]);
        assert_eq!(t.to_csv(), "E,rho\n1.0,0.5\n2.0,x\n");
    }

    #[test]
    fn json_layout() {
        let mut t = Table::new(&["a"]);
        t.push(vec![f64::NAN.into()]);
        t.push(vec![0.25.into()]);
        let v = t.to_json();
        assert_eq!(v["rows"][0][0], Value::Null);
        assert_eq!(v["rows"][1][0], json!(0.25));
        assert!(t.render(Format::Json).ends_with("}\n"));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("/tmp/out.csv")),
            PathBuf::from("/tmp/out.meta.json")
        );
        assert_eq!(sidecar_path(Path::new("out")), PathBuf::from("out.meta.json"));
    }
}
