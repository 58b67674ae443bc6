//! Artifact writers: full-precision CSV traces, decomposition dumps,
//! JSON reports, benchmark tables, and long-format plot panels. All numeric
//! text uses 17 significant digits so re-ingestion is bit-exact.

use crate::CliError;
use lfo_modes::ekf::HhtEkfResult;
use lfo_modes::emd::Decomposition;
use lfo_modes::eval::ExperimentSet;
use lfo_modes::hilbert::AnalyzedMode;
use lfo_modes::signalgen::GroundTruth;
use lfo_modes::TimeSeries;
use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits: enough decimal text to reproduce any f64 exactly.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Analysis(format!("cannot write {}: {e}", path.display())))
}

/// `time,value` rows; the canonical interchange form `ingest_csv` reads back.
pub fn signal_csv(y: &TimeSeries) -> String {
    let mut out = String::from("time,value\n");
    for (k, v) in y.samples.iter().enumerate() {
        let _ = writeln!(out, "{},{}", fmt17(y.time_at(k)), fmt17(*v));
    }
    out
}

pub fn truth_csv(truth: &GroundTruth, fs: f64) -> String {
    let mut out = String::from("k,t_seconds,mode_index,freq_rad_s,freq_hz,damping_per_s\n");
    for (l, freqs) in truth.freq_rad_s.iter().enumerate() {
        for (k, w) in freqs.iter().enumerate() {
            let _ = writeln!(
                out,
                "{k},{},{l},{},{},{}",
                fmt17(k as f64 / fs),
                fmt17(*w),
                fmt17(w / std::f64::consts::TAU),
                fmt17(truth.damping_per_s[l][k]),
            );
        }
    }
    out
}

const TRACE_HEADER: &str = "k,t_seconds,mode_index,freq_rad_s,freq_hz,damping_per_s,recon\n";

fn trace_row(out: &mut String, k: usize, fs: f64, l: usize, w: f64, sigma: f64, recon: f64) {
    let _ = writeln!(
        out,
        "{k},{},{l},{},{},{},{}",
        fmt17(k as f64 / fs),
        fmt17(w),
        fmt17(w / std::f64::consts::TAU),
        fmt17(sigma),
        fmt17(recon),
    );
}

/// EKF pipeline trace: one row per (sample, tracked mode).
pub fn ekf_trace_csv(result: &HhtEkfResult, fs: f64) -> String {
    let mut out = String::from(TRACE_HEADER);
    for (l, freqs) in result.trace.freq_rad_s.iter().enumerate() {
        for (k, w) in freqs.iter().enumerate() {
            trace_row(
                &mut out,
                k,
                fs,
                l,
                *w,
                result.trace.damping_per_s[l][k],
                result.trace.recon[l][k],
            );
        }
    }
    out
}

/// HHT/masking trace: one row per (sample, non-DC component); the IMF sample
/// itself serves as the mode reconstruction.
pub fn hht_trace_csv(modes: &[AnalyzedMode], fs: f64) -> String {
    let mut out = String::from(TRACE_HEADER);
    for (l, mode) in modes.iter().filter(|m| !m.is_dc).enumerate() {
        for k in 0..mode.trace.freq_rad_s.len() {
            trace_row(
                &mut out,
                k,
                fs,
                l,
                mode.trace.freq_rad_s[k],
                mode.trace.damping_per_s[k],
                mode.imf.samples[k],
            );
        }
    }
    out
}

pub fn decomposition_csv(dec: &Decomposition, fs: f64) -> String {
    let mut out = String::from("k,t_seconds");
    for imf in &dec.imfs {
        let _ = write!(out, ",imf_{}", imf.index);
    }
    out.push_str(",residue\n");
    for k in 0..dec.residue.len() {
        let _ = write!(out, "{k},{}", fmt17(k as f64 / fs));
        for imf in &dec.imfs {
            let _ = write!(out, ",{}", fmt17(imf.samples[k]));
        }
        let _ = writeln!(out, ",{}", fmt17(dec.residue[k]));
    }
    out
}

/// Per-run audit rows behind a reproduced table.
pub fn runs_csv(set: &ExperimentSet) -> String {
    let mut out = String::from(
        "method,seed,truth_mode,matched_estimate,failed,mse_full,mse_scored,mse_middle_third\n",
    );
    let opt = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
    for run in &set.runs {
        for m in &run.modes {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                run.method.label(),
                run.seed,
                m.truth_index,
                m.matched.map(|i| i.to_string()).unwrap_or_default(),
                m.failed,
                opt(m.mse_full),
                opt(m.mse_scored),
                opt(m.mse_middle_third),
            );
        }
    }
    out
}

/// Human-readable aligned table mirroring the benchmark layout: methods as
/// rows, mixing rate and per-mode MSE as columns.
pub fn text_table(title: &str, set: &ExperimentSet, middle_third: bool) -> String {
    let n_modes = set
        .reports
        .iter()
        .map(|r| r.mean_mse_full.len())
        .max()
        .unwrap_or(0);
    let mut header = format!("{:<10} {:>12}", "method", "mixing rate");
    for l in 0..n_modes {
        header.push_str(&format!(" {:>18}", format!("MSE w{} (rad2/s2)", l + 1)));
        if middle_third {
            header.push_str(&format!(" {:>18}", format!("MSE w{} mid-third", l + 1)));
        }
    }
    let mut out = format!("{title}\n{header}\n{}\n", "-".repeat(header.len()));
    let cell = |v: Option<f64>| match v {
        Some(x) => format!("{x:>18.4}"),
        None => format!("{:>18}", "-"),
    };
    for report in &set.reports {
        let _ = write!(
            out,
            "{:<10} {:>11.1}%",
            report.method.label(),
            100.0 * report.failure_rate
        );
        for l in 0..n_modes {
            out.push(' ');
            out.push_str(&cell(report.mean_mse_full.get(l).copied().flatten()));
            if middle_third {
                out.push(' ');
                out.push_str(&cell(report.mean_mse_middle_third.get(l).copied().flatten()));
            }
        }
        out.push('\n');
    }
    out
}

/// A parsed `trace.csv` row.
pub struct TraceRow {
    pub t_seconds: f64,
    pub mode_index: usize,
    pub freq_hz: f64,
    pub damping_per_s: f64,
    pub recon: f64,
}

pub fn parse_trace_csv(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Analysis(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(CliError::Analysis(format!(
                "trace {}: line {}: expected 7 columns, found {}",
                path.display(),
                idx + 1,
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            fields[i].trim().parse().map_err(|_| {
                CliError::Analysis(format!(
                    "trace {}: line {}: could not parse '{}' as a number",
                    path.display(),
                    idx + 1,
                    fields[i]
                ))
            })
        };
        rows.push(TraceRow {
            t_seconds: num(1)?,
            mode_index: num(2)? as usize,
            freq_hz: num(4)?,
            damping_per_s: num(5)?,
            recon: num(6)?,
        });
    }
    Ok(rows)
}

/// A parsed `truth.csv` row.
pub struct TruthRow {
    pub t_seconds: f64,
    pub mode_index: usize,
    pub freq_hz: f64,
    pub damping_per_s: f64,
}

pub fn parse_truth_csv(path: &Path) -> Result<Vec<TruthRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Analysis(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if idx == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(CliError::Analysis(format!(
                "truth {}: line {}: expected 6 columns, found {}",
                path.display(),
                idx + 1,
                fields.len()
            )));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            fields[i].trim().parse().map_err(|_| {
                CliError::Analysis(format!(
                    "truth {}: line {}: could not parse '{}' as a number",
                    path.display(),
                    idx + 1,
                    fields[i]
                ))
            })
        };
        rows.push(TruthRow {
            t_seconds: num(1)?,
            mode_index: num(2)? as usize,
            freq_hz: num(4)?,
            damping_per_s: num(5)?,
        });
    }
    Ok(rows)
}

/// Long-format panel: `series_name,t,value`.
pub fn panel_csv(series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut out = String::from("series_name,t,value\n");
    for (name, points) in series {
        for (t, v) in points {
            let _ = writeln!(out, "{name},{},{}", fmt17(*t), fmt17(*v));
        }
    }
    out
}
