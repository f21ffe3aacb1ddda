//! JSON and CSV rendering of command results.
//!
//! Every JSON document has the top-level keys `query`, `inputs`, `results`
//! and `meta`, in that order. Floats are rounded to 12 significant digits
//! before serialization, so parsing a document and serializing it again
//! reproduces it byte for byte.

use std::io::{self, Write};

use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to `SIGNIFICANT_DIGITS` significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .expect("formatted float parses")
}

/// JSON number at 12 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Row-oriented data emitted instead of the flattened results in CSV mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub query: &'static str,
    pub inputs: Map<String, Value>,
    pub results: Map<String, Value>,
    pub seed: Option<u64>,
    pub table: Option<Table>,
}

impl Document {
    pub fn to_json(&self) -> Value {
        json!({
            "query": self.query,
            "inputs": self.inputs,
            "results": self.results,
            "meta": {
                "version": env!("CARGO_PKG_VERSION"),
                "seed": self.seed,
            },
        })
    }

    pub fn write<W: Write>(&self, format: Format, out: &mut W) -> io::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.to_json())?;
                writeln!(out)
            }
            Format::Csv => self.write_csv(out),
        }
    }

    fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        match &self.table {
            Some(table) => {
                writer.write_record(&table.header)?;
                for row in &table.rows {
                    writer.write_record(row.iter().map(cell))?;
                }
            }
            None => {
                let mut flat = Vec::new();
                flatten("", &Value::Object(self.results.clone()), &mut flat);
                writer.write_record(flat.iter().map(|(k, _)| k.as_str()))?;
                writer.write_record(flat.iter().map(|(_, v)| cell(v)))?;
            }
        }
        writer.flush()
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Nested objects become dotted keys; arrays are left out of the flat view.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten(&key, child, out);
            }
        }
        Value::Array(_) => {}
        scalar => out.push((prefix.to_string(), scalar.clone())),
    }
}
