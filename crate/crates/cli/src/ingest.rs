//! CSV panels: comma separated, header row required, `.` decimals.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use vstar_core::model::TimePanel;
use vstar_core::statcore::Matrix;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    None,
    /// `ln(Y_t) - ln(Y_{t-1})` on every series.
    LogGrowth,
    /// Three-term moving average of the transition column.
    Ma3Spread,
}

impl Transform {
    fn rows_lost(&self) -> usize {
        match self {
            Transform::None => 0,
            Transform::LogGrowth => 1,
            Transform::Ma3Spread => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub panel: TimePanel,
    pub transition_column: String,
    pub rows_read: usize,
    /// Leading rows consumed by differencing or averaging.
    pub rows_dropped: usize,
}

/// Read a panel. Every column other than `transition_column` is a series.
/// Rows and columns in error messages are 1-based; rows count data lines
/// below the header.
pub fn ingest_csv(path: &Path, transition_column: &str, transforms: &[Transform]) -> Result<Ingested, CliError> {
    let file = File::open(path).map_err(|e| CliError::MissingFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    ingest_reader(file, transition_column, transforms)
}

pub fn ingest_reader<R: Read>(input: R, transition_column: &str, transforms: &[Transform]) -> Result<Ingested, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_error(e, 0))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.len() < 2 {
        return Err(CliError::Data(format!(
            "need at least two columns (series and transition), found {}",
            header.len()
        )));
    }
    let s_col = header
        .iter()
        .position(|h| h == transition_column)
        .ok_or_else(|| CliError::MissingColumn(transition_column.to_string()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| csv_error(e, row))?;
        let mut values = Vec::with_capacity(rec.len());
        for (j, cell) in rec.iter().enumerate() {
            let col = j + 1;
            if cell.is_empty() {
                return Err(CliError::NonNumeric { row, col });
            }
            let v: f64 = cell.parse().map_err(|_| CliError::Parse {
                row,
                col,
                detail: format!("{cell:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(CliError::NonNumeric { row, col });
            }
            values.push(v);
        }
        rows.push(values);
    }

    let rows_read = rows.len();
    let lost = transforms.iter().map(Transform::rows_lost).max().unwrap_or(0);
    if rows_read <= lost + 1 {
        return Err(CliError::Data(format!(
            "{rows_read} data rows leave nothing after dropping {lost} for transforms"
        )));
    }
    let series: Vec<usize> = (0..header.len()).filter(|&c| c != s_col).collect();
    let log_growth = transforms.contains(&Transform::LogGrowth);
    let ma3 = transforms.contains(&Transform::Ma3Spread);
    if log_growth {
        for (i, r) in rows.iter().enumerate() {
            if let Some(&c) = series.iter().find(|&&c| r[c] <= 0.0) {
                return Err(CliError::Data(format!(
                    "log-growth needs positive values; row {}, column {} is {}",
                    i + 1,
                    c + 1,
                    r[c]
                )));
            }
        }
    }

    let kept = rows_read - lost;
    let y = Matrix::from_fn(kept, series.len(), |r, j| {
        let t = r + lost;
        let c = series[j];
        if log_growth {
            rows[t][c].ln() - rows[t - 1][c].ln()
        } else {
            rows[t][c]
        }
    });
    let s: Vec<f64> = (lost..rows_read)
        .map(|t| {
            if ma3 {
                (rows[t][s_col] + rows[t - 1][s_col] + rows[t - 2][s_col]) / 3.0
            } else {
                rows[t][s_col]
            }
        })
        .collect();
    let labels = series.iter().map(|&c| header[c].clone()).collect();
    let panel = TimePanel::new(y, s, labels)?;
    Ok(Ingested {
        panel,
        transition_column: transition_column.to_string(),
        rows_read,
        rows_dropped: lost,
    })
}

fn csv_error(e: csv::Error, row: usize) -> CliError {
    let row = e.position().map_or(row, |p| p.record() as usize);
    CliError::Parse {
        row,
        col: 0,
        detail: e.to_string(),
    }
}

/// Write the series followed by the transition variable. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_panel_csv<W: Write>(panel: &TimePanel, transition_column: &str, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut header = panel.labels.clone();
    header.push(transition_column.to_string());
    w.write_record(&header).map_err(io)?;
    for t in 0..panel.len() {
        let mut rec: Vec<String> = panel.y.row(t).iter().map(|v| v.to_string()).collect();
        rec.push(panel.s[t].to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
