//! Tables rendered as CSV with a `#` JSON metadata line, or as one JSON document.
//!
//! Floats always carry 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;

use serde_json::Value;

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Num(v) => float(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

fn json_field(c: &Cell) -> String {
    match c {
        Cell::Num(v) if v.is_finite() => float(*v),
        Cell::Num(_) => "null".into(),
        Cell::Int(v) => v.to_string(),
        Cell::Bool(v) => v.to_string(),
        Cell::Text(s) => Value::String(s.clone()).to_string(),
    }
}

impl Table {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = format!("# {}\n{}\n", self.metadata, self.columns.join(","));
        for row in &self.rows {
            let fields: Vec<String> = row.iter().map(csv_field).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    // Written by hand so floats keep the fixed 17-digit form.
    fn json(&self) -> String {
        let mut out = String::new();
        let columns = Value::from(self.columns.clone());
        let _ = write!(out, "{{\"metadata\":{},\"columns\":{columns},\"rows\":[", self.metadata);
        for (i, row) in self.rows.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let fields: Vec<String> = row.iter().map(json_field).collect();
            let _ = write!(out, "\n[{}]", fields.join(","));
        }
        out.push_str("\n]}\n");
        out
    }
}
