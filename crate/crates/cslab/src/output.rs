//! JSON with 17 significant digits, CSV tables and plain text.

use std::io::{self, Write};

use serde_json::{Map, Number, Value};

/// A float as a JSON number with 17 significant digits; non-finite values
/// become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    // With arbitrary precision enabled, the digits are kept verbatim.
    let text = if x == 0.0 { "0.0".to_string() } else { format!("{x:.16e}") };
    text.parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| num(x)).collect())
}

/// Reads a float back from a report value.
pub fn as_f64(v: &Value) -> Option<f64> {
    v.as_f64().or_else(|| v.as_number().and_then(|n| n.as_str().parse().ok()))
}

/// A report: the command name, its effective configuration and its results.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub result: Map<String, Value>,
    pub table: Table,
    pub text: Vec<String>,
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self { command, config: Map::new(), result: Map::new(), table: Table::default(), text: Vec::new() }
    }

    pub fn config(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.config.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.result.insert(key.to_string(), value.into());
        self
    }

    pub fn line(&mut self, line: impl Into<String>) -> &mut Self {
        self.text.push(line.into());
        self
    }

    pub fn to_json(&self) -> Value {
        let mut root = Map::new();
        root.insert("command".into(), Value::from(self.command));
        root.insert("config".into(), Value::Object(self.config.clone()));
        for (k, v) in &self.result {
            root.insert(k.clone(), v.clone());
        }
        Value::Object(root)
    }
}

/// Rows for CSV output; cells are preformatted.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

/// A float cell with 17 significant digits.
pub fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Text => "text",
        }
    }
}

pub fn write_report(report: &Report, format: Format, out: &mut dyn Write) -> io::Result<()> {
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut *out, &report.to_json())?;
            writeln!(out)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(&report.table.header)?;
            for row in &report.table.rows {
                w.write_record(row)?;
            }
            w.flush()
        }
        Format::Text => {
            for line in &report.text {
                writeln!(out, "{line}")?;
            }
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let v = num(0.1);
        assert_eq!(v.to_string(), "1.0000000000000001e-1");
        assert_eq!(as_f64(&v), Some(0.1));
        let x = 0.814_050_428_420_355_1;
        assert_eq!(as_f64(&num(x)), Some(x));
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(num(0.0).to_string(), "0.0");
        assert_eq!(num(-2.5e-300).to_string(), "-2.5000000000000000e-300");
    }
}
