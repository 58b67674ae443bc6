//! CSV ingestion for externally recorded signals: two-column `time,value`
//! with inferred sample rate, or single-column `value` with an explicit
//! `--fs`. Errors carry the offending line number.

use crate::CliError;
use lfo_modes::TimeSeries;
use std::path::Path;

/// Relative jitter allowed between consecutive timestamp spacings.
const UNIFORMITY_TOL: f64 = 1e-6;

pub fn ingest_csv(path: &Path, fs_flag: Option<f64>) -> Result<TimeSeries, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Analysis(format!("ingest: cannot read {}: {e}", path.display())))?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut n_cols = None;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, &str> = fields
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| *f))
            .collect();
        let values = match parsed {
            Ok(v) => v,
            // A non-numeric first row is an optional header; anywhere else
            // it is a data error.
            Err(bad) if rows.is_empty() && n_cols.is_none() => {
                n_cols = Some(fields.len());
                let _ = bad;
                continue;
            }
            Err(bad) => {
                return Err(CliError::Analysis(format!(
                    "ingest: line {line_no}: could not parse '{bad}' as a number"
                )));
            }
        };
        match n_cols {
            None => n_cols = Some(values.len()),
            Some(c) if c != values.len() => {
                return Err(CliError::Analysis(format!(
                    "ingest: line {line_no}: expected {c} columns, found {}",
                    values.len()
                )));
            }
            Some(_) => {}
        }
        rows.push((line_no, values));
    }
    if rows.is_empty() {
        return Err(CliError::Analysis(format!(
            "ingest: no data rows in {}",
            path.display()
        )));
    }
    match n_cols.unwrap() {
        1 => {
            let fs = fs_flag.ok_or_else(|| {
                CliError::Usage("single-column input requires --fs".into())
            })?;
            let samples: Vec<f64> = rows.iter().map(|(_, v)| v[0]).collect();
            TimeSeries::new(samples, fs)
                .map_err(|e| CliError::Analysis(format!("ingest: {e}")))
        }
        2 => {
            if rows.len() < 2 {
                return Err(CliError::Analysis(
                    "ingest: need at least 2 rows to infer the sample rate".into(),
                ));
            }
            let dt = rows[1].1[0] - rows[0].1[0];
            if !(dt.is_finite() && dt > 0.0) {
                return Err(CliError::Analysis(format!(
                    "ingest: line {}: non-increasing timestamp",
                    rows[1].0
                )));
            }
            for w in rows.windows(2).skip(1) {
                let step = w[1].1[0] - w[0].1[0];
                if (step - dt).abs() > UNIFORMITY_TOL * dt.abs() {
                    return Err(CliError::Analysis(format!(
                        "ingest: line {}: non-uniform timestamp (spacing {step}, expected {dt})",
                        w[1].0
                    )));
                }
            }
            let samples: Vec<f64> = rows.iter().map(|(_, v)| v[1]).collect();
            TimeSeries::new(samples, 1.0 / dt)
                .map_err(|e| CliError::Analysis(format!("ingest: {e}")))
        }
        c => Err(CliError::Analysis(format!(
            "ingest: expected 1 or 2 columns, found {c}"
        ))),
    }
}
