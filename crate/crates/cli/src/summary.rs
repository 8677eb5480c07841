use std::fmt;
use std::path::Path;

use crate::error::{CliError, Result};
use crate::experiments::propeller_violations;
use crate::table::Table;

const GAIN_COLUMNS: [&str; 3] = ["gain_over_e", "gain", "mean_gain"];
const POSITIVE_GAIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub column: String,
    pub rows: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub positive_fraction: f64,
    /// Propeller-bound violations, for two-qubit transport samples only.
    pub violations: Option<usize>,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "column             {}", self.column)?;
        writeln!(f, "rows               {}", self.rows)?;
        writeln!(f, "mean               {:.6e}", self.mean)?;
        writeln!(f, "sd                 {:.6e}", self.sd)?;
        writeln!(f, "min                {:.6e}", self.min)?;
        writeln!(f, "max                {:.6e}", self.max)?;
        write!(f, "positive fraction  {:.6}", self.positive_fraction)?;
        if let Some(v) = self.violations {
            write!(f, "\nbound violations   {v}")?;
        }
        Ok(())
    }
}

pub fn summarize_table(table: &Table, path: &Path) -> Result<Summary> {
    let malformed = |reason: &str| CliError::Malformed {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if table.rows.is_empty() {
        return Err(malformed("no records"));
    }
    let column = GAIN_COLUMNS
        .iter()
        .find(|c| table.column(c).is_some())
        .ok_or_else(|| malformed("no gain column"))?;
    let values = table.floats(column).ok_or_else(|| malformed("non-numeric gain column"))?;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let two_qubit = || {
        let db = table.floats("d_b")?;
        let dc = table.floats("d_c")?;
        Some(db.iter().chain(&dc).all(|&d| d == 2.0))
    };
    let violations = match (table.floats("delta_mi"), *column == "gain_over_e" && two_qubit() == Some(true)) {
        (Some(mi), true) => Some(propeller_violations(&mi, &values)),
        _ => None,
    };
    Ok(Summary {
        column: column.to_string(),
        rows: values.len(),
        mean,
        sd,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        positive_fraction: values.iter().filter(|&&v| v > POSITIVE_GAIN).count() as f64 / n,
        violations,
    })
}

pub fn summarize(path: &Path) -> Result<Summary> {
    summarize_table(&Table::read(path)?, path)
}
