//! Column-oriented result tables and their CSV/JSON encodings.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Number};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    UInt(u64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::UInt(v) => Some(*v as f64),
            Value::Float(v) => Some(*v),
            _ => None,
        }
    }

    /// 17 significant digits for floats, so every `f64` survives a round trip.
    pub fn to_cell(&self) -> String {
        match self {
            Value::UInt(v) => v.to_string(),
            Value::Float(v) => format!("{v:.16e}"),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
        }
    }

    pub fn parse_cell(s: &str) -> Value {
        if let Ok(v) = s.parse::<u64>() {
            return Value::UInt(v);
        }
        if let Ok(v) = s.parse::<bool>() {
            return Value::Bool(v);
        }
        match s.parse::<f64>() {
            Ok(v) => Value::Float(v),
            Err(_) => Value::Text(s.to_string()),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Value::UInt(v) => json!(v),
            Value::Float(v) => Number::from_f64(*v).map_or(serde_json::Value::Null, serde_json::Value::Number),
            Value::Bool(v) => json!(v),
            Value::Text(v) => json!(v),
        }
    }

    fn from_json(v: &serde_json::Value) -> Option<Value> {
        Some(match v {
            serde_json::Value::Null => Value::Float(f64::NAN),
            serde_json::Value::Bool(b) => Value::Bool(*b),
            serde_json::Value::String(s) => Value::Text(s.clone()),
            serde_json::Value::Number(n) => match n.as_u64() {
                Some(u) => Value::UInt(u),
                None => Value::Float(n.as_f64()?),
            },
            _ => return None,
        })
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::UInt(v)
    }
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::UInt(v as u64)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of a column; `None` if absent or not numeric.
    pub fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|r| r[k].as_f64()).collect()
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Usage(format!("csv encoding: {e}"));
        w.write_record(&self.columns).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Value::to_cell)).map_err(fail)?;
        }
        w.into_inner().map_err(|e| CliError::Usage(format!("csv encoding: {e}")))
    }

    pub fn to_json(&self, config: &serde_json::Value) -> serde_json::Value {
        let records: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, serde_json::Value> =
                    self.columns.iter().cloned().zip(row.iter().map(Value::to_json)).collect();
                serde_json::Value::Object(obj)
            })
            .collect();
        json!({ "columns": self.columns, "config": config, "records": records })
    }

    pub fn write(&self, path: &Path, format: Format, config: &serde_json::Value) -> Result<()> {
        let bytes = match format {
            Format::Csv => self.to_csv()?,
            Format::Json => {
                let mut b = serde_json::to_vec_pretty(&self.to_json(config)).expect("json values serialize");
                b.push(b'\n');
                b
            }
        };
        let mut f = BufWriter::new(File::create(path).map_err(CliError::io(path))?);
        f.write_all(&bytes).map_err(CliError::io(path))?;
        f.flush().map_err(CliError::io(path))
    }

    /// Reads a table written by [`Table::write`]; the format follows the extension.
    pub fn read(path: &Path) -> Result<Table> {
        let malformed = |reason: String| CliError::Malformed {
            path: path.to_path_buf(),
            reason,
        };
        let file = File::open(path).map_err(CliError::io(path))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            let v: serde_json::Value =
                serde_json::from_reader(BufReader::new(file)).map_err(|e| malformed(e.to_string()))?;
            let columns: Vec<String> = v
                .get("columns")
                .and_then(|c| c.as_array())
                .ok_or_else(|| malformed("missing \"columns\"".into()))?
                .iter()
                .map(|c| c.as_str().map(str::to_string))
                .collect::<Option<_>>()
                .ok_or_else(|| malformed("non-string column name".into()))?;
            let records = v
                .get("records")
                .and_then(|r| r.as_array())
                .ok_or_else(|| malformed("missing \"records\"".into()))?;
            let mut table = Table { columns, rows: Vec::new() };
            for (i, rec) in records.iter().enumerate() {
                let row = table
                    .columns
                    .iter()
                    .map(|c| rec.get(c).and_then(Value::from_json))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| malformed(format!("record {i} is incomplete")))?;
                table.rows.push(row);
            }
            Ok(table)
        } else {
            let mut r = csv::Reader::from_reader(BufReader::new(file));
            let columns: Vec<String> = r
                .headers()
                .map_err(|e| malformed(e.to_string()))?
                .iter()
                .map(str::to_string)
                .collect();
            if columns.is_empty() || columns.iter().all(|c| c.is_empty()) {
                return Err(malformed("missing header".into()));
            }
            let mut rows = Vec::new();
            for rec in r.records() {
                let rec = rec.map_err(|e| malformed(e.to_string()))?;
                rows.push(rec.iter().map(Value::parse_cell).collect());
            }
            Ok(Table { columns, rows })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}
