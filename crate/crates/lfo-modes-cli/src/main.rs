//! Command-line front end for the oscillation-mode library: scenario
//! generation, single-signal analysis, Monte Carlo table reproduction, and
//! plot-data emission. Exit codes: 0 success, 1 analysis failure, 2 usage
//! error.

mod artifacts;
mod ingest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lfo_modes::ekf::run_hht_ekf;
use lfo_modes::emd;
use lfo_modes::eval::{monte_carlo, EvalConfig, Method};
use lfo_modes::hilbert::{hht, masking_hht};
use lfo_modes::signalgen::{self, GroundTruth};
use lfo_modes::TimeSeries;
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    /// Bad invocation: exit 2.
    Usage(String),
    /// The pipeline itself failed: exit 1.
    Analysis(String),
}

impl From<lfo_modes::Error> for CliError {
    fn from(e: lfo_modes::Error) -> Self {
        CliError::Analysis(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "lfo-modes", version, about = "Low-frequency oscillation mode detection and tracking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a benchmark scenario and write signal + ground truth CSVs.
    Generate(GenerateArgs),
    /// Run one method on one signal and write trace/decomposition/report.
    Analyze(AnalyzeArgs),
    /// Re-run a benchmark table as a Monte Carlo experiment.
    Reproduce(ReproduceArgs),
    /// Convert a trace.csv into long-format plot panels.
    Plotdata(PlotdataArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Scenario {
    #[value(name = "case_a")]
    CaseA,
    #[value(name = "case_b")]
    CaseB,
}

impl Scenario {
    fn generate(self, noise_std: f64, seed: u64) -> (TimeSeries, GroundTruth) {
        match self {
            Scenario::CaseA => signalgen::case_a(noise_std, seed),
            Scenario::CaseB => signalgen::case_b(noise_std, seed),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Scenario::CaseA => "case_a",
            Scenario::CaseB => "case_b",
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hht,
    Masking,
    Ekf,
    #[value(name = "hht-ekf")]
    HhtEkf,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableId {
    T1,
    T2,
}

/// Tuning flags shared by analyze and reproduce; unset flags keep the
/// documented defaults.
#[derive(Args, Clone, Copy)]
struct Overrides {
    /// Maximum number of EKF-tracked modes (L_max).
    #[arg(long)]
    n_modes: Option<usize>,
    /// Process-noise scale: Q = q_scale · I.
    #[arg(long)]
    q_scale: Option<f64>,
    /// Measurement-noise variance R.
    #[arg(long)]
    r: Option<f64>,
    /// Components with mean frequency below this are treated as trend, Hz.
    #[arg(long)]
    dc_cutoff_hz: Option<f64>,
    /// Sifting convergence threshold.
    #[arg(long)]
    sd_threshold: Option<f64>,
    /// Mask frequency as a multiple of the reference component frequency.
    #[arg(long)]
    mask_freq_ratio: Option<f64>,
    /// Mask amplitude as a multiple of the reference component amplitude.
    #[arg(long)]
    mask_amp_ratio: Option<f64>,
    /// Fraction of initial samples excluded from EKF scoring.
    #[arg(long)]
    burn_in: Option<f64>,
    /// Joseph-form covariance update (true) or the textbook form (false).
    #[arg(long)]
    robust_cov: Option<bool>,
}

impl Overrides {
    fn validate(&self) -> Result<(), CliError> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(CliError::Usage(format!(
                "--{name} must be positive and finite, got {x}"
            ))),
            _ => Ok(()),
        };
        positive("q-scale", self.q_scale)?;
        positive("r", self.r)?;
        positive("dc-cutoff-hz", self.dc_cutoff_hz)?;
        positive("sd-threshold", self.sd_threshold)?;
        positive("mask-freq-ratio", self.mask_freq_ratio)?;
        if let Some(x) = self.mask_amp_ratio {
            if !(x.is_finite() && x >= 0.0) {
                return Err(CliError::Usage(format!(
                    "--mask-amp-ratio must be non-negative, got {x}"
                )));
            }
        }
        if let Some(x) = self.burn_in {
            if !(x.is_finite() && (0.0..0.5).contains(&x)) {
                return Err(CliError::Usage(format!(
                    "--burn-in must lie in [0, 0.5), got {x}"
                )));
            }
        }
        if self.n_modes == Some(0) {
            return Err(CliError::Usage("--n-modes must be at least 1".into()));
        }
        Ok(())
    }

    fn apply(&self, cfg: &mut EvalConfig) {
        if let Some(v) = self.n_modes {
            cfg.pipeline.l_max = v;
        }
        if let Some(v) = self.q_scale {
            cfg.pipeline.q_scale = v;
        }
        if let Some(v) = self.r {
            cfg.pipeline.r = v;
        }
        if let Some(v) = self.dc_cutoff_hz {
            cfg.pipeline.dc_cutoff_hz = v;
            cfg.hht.dc_cutoff_hz = v;
        }
        if let Some(v) = self.sd_threshold {
            cfg.pipeline.emd.sd_threshold = v;
            cfg.hht.emd.sd_threshold = v;
        }
        if let Some(v) = self.mask_freq_ratio {
            cfg.hht.mask_freq_ratio = v;
        }
        if let Some(v) = self.mask_amp_ratio {
            cfg.hht.mask_amp_ratio = v;
        }
        if let Some(v) = self.burn_in {
            cfg.burn_in_frac = v;
        }
        if let Some(v) = self.robust_cov {
            cfg.pipeline.robust_cov = v;
        }
    }

    fn echo(&self, cfg: &EvalConfig) -> serde_json::Value {
        json!({
            "n_modes": cfg.pipeline.l_max,
            "q_scale": cfg.pipeline.q_scale,
            "r": cfg.pipeline.r,
            "dc_cutoff_hz": cfg.pipeline.dc_cutoff_hz,
            "sd_threshold": cfg.pipeline.emd.sd_threshold,
            "mask_freq_ratio": cfg.hht.mask_freq_ratio,
            "mask_amp_ratio": cfg.hht.mask_amp_ratio,
            "burn_in_frac": cfg.burn_in_frac,
            "robust_cov": cfg.pipeline.robust_cov,
            "huber_k": cfg.pipeline.huber_k,
            "fs_hz_builtin_scenarios": 30.0,
        })
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Built-in scenario to synthesize.
    #[arg(long, value_enum)]
    scenario: Scenario,
    /// Measurement noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    /// Noise stream seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long, env = "LFO_MODES_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Built-in scenario input (exclusive with --input).
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    /// CSV input path (exclusive with --scenario).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Sample rate for single-column CSV input, Hz.
    #[arg(long)]
    fs: Option<f64>,
    /// Estimation method.
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Measurement noise standard deviation for generated scenarios.
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    /// Noise stream seed for generated scenarios.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory (created if missing).
    #[arg(long, env = "LFO_MODES_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Which benchmark table to reproduce.
    #[arg(value_enum)]
    table: TableId,
    /// Number of Monte Carlo runs.
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    /// Base seed; run i uses seed base + i.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Measurement noise standard deviation.
    #[arg(long, default_value_t = 0.1)]
    noise_std: f64,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory (created if missing).
    #[arg(long, env = "LFO_MODES_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlotdataArgs {
    /// Path to a trace.csv produced by analyze.
    #[arg(long)]
    trace: PathBuf,
    /// Optional truth.csv from a generated scenario; adds truth series.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, env = "LFO_MODES_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Analyze(args) => analyze(args),
        Command::Reproduce(args) => reproduce(args),
        Command::Plotdata(args) => plotdata(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Analysis(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Analysis(format!("cannot create {}: {e}", dir.display())))
}

fn generate(args: GenerateArgs) -> Result<(), CliError> {
    ensure_dir(&args.out_dir)?;
    let (y, truth) = args.scenario.generate(args.noise_std, args.seed);
    artifacts::write_file(&args.out_dir.join("signal.csv"), &artifacts::signal_csv(&y))?;
    artifacts::write_file(
        &args.out_dir.join("truth.csv"),
        &artifacts::truth_csv(&truth, y.sample_rate_hz),
    )?;
    let meta = json!({
        "command": "generate",
        "scenario": args.scenario.label(),
        "noise_std": args.noise_std,
        "seed": args.seed,
        "fs_hz": y.sample_rate_hz,
        "n_samples": y.len(),
        "step_jump": truth.step_jump,
        "artifacts": ["signal.csv", "truth.csv"],
    });
    artifacts::write_file(
        &args.out_dir.join("scenario.json"),
        &serde_json::to_string_pretty(&meta).unwrap(),
    )?;
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    args.overrides.validate()?;
    let mut cfg = EvalConfig::default();
    args.overrides.apply(&mut cfg);
    ensure_dir(&args.out_dir)?;

    let (y, truth) = match (&args.scenario, &args.input) {
        (Some(s), None) => {
            let (y, truth) = s.generate(args.noise_std, args.seed);
            (y, Some(truth))
        }
        (None, Some(path)) => (ingest::ingest_csv(path, args.fs)?, None),
        _ => {
            return Err(CliError::Usage(
                "exactly one of --scenario and --input is required".into(),
            ));
        }
    };
    artifacts::write_file(&args.out_dir.join("signal.csv"), &artifacts::signal_csv(&y))?;
    if let Some(truth) = &truth {
        artifacts::write_file(
            &args.out_dir.join("truth.csv"),
            &artifacts::truth_csv(truth, y.sample_rate_hz),
        )?;
    }

    let dec = emd::emd(&y, &cfg.hht.emd);
    artifacts::write_file(
        &args.out_dir.join("decomposition.csv"),
        &artifacts::decomposition_csv(&dec, y.sample_rate_hz),
    )?;

    let (trace, detected, init): (String, usize, serde_json::Value) = match args.method {
        MethodArg::Hht | MethodArg::Masking => {
            let modes = match args.method {
                MethodArg::Hht => hht(&y, &cfg.hht)?,
                _ => masking_hht(&y, &cfg.hht)?,
            };
            let n = modes.iter().filter(|m| !m.is_dc).count();
            (
                artifacts::hht_trace_csv(&modes, y.sample_rate_hz),
                n,
                serde_json::Value::Null,
            )
        }
        MethodArg::Ekf | MethodArg::HhtEkf => {
            let result = run_hht_ekf(&y, &cfg.pipeline)?;
            let init = json!({
                "x0": result.init.x0.iter().copied().collect::<Vec<f64>>(),
                "peak_freqs_rad_s": result.init.peak_freqs_rad_s,
            });
            (
                artifacts::ekf_trace_csv(&result, y.sample_rate_hz),
                result.init.n_modes,
                init,
            )
        }
    };
    artifacts::write_file(&args.out_dir.join("trace.csv"), &trace)?;

    let method_label = match args.method {
        MethodArg::Hht => "hht",
        MethodArg::Masking => "masking",
        MethodArg::Ekf => "ekf",
        MethodArg::HhtEkf => "hht-ekf",
    };
    let report = json!({
        "command": "analyze",
        "method": method_label,
        "input": {
            "scenario": args.scenario.map(Scenario::label),
            "csv": args.input.as_ref().map(|p| p.display().to_string()),
            "fs_hz": y.sample_rate_hz,
            "n_samples": y.len(),
            "noise_std": args.scenario.map(|_| args.noise_std),
            "seed": args.scenario.map(|_| args.seed),
        },
        "config": args.overrides.echo(&cfg),
        "detected_modes": detected,
        "n_imfs": dec.imfs.len(),
        "init": init,
        "status": "ok",
        "artifacts": ["signal.csv", "trace.csv", "decomposition.csv", "report.json"],
    });
    artifacts::write_file(
        &args.out_dir.join("report.json"),
        &serde_json::to_string_pretty(&report).unwrap(),
    )?;
    Ok(())
}

fn reproduce(args: ReproduceArgs) -> Result<(), CliError> {
    args.overrides.validate()?;
    if args.runs < 1 {
        return Err(CliError::Usage("--runs must be at least 1".into()));
    }
    let mut cfg = EvalConfig {
        noise_std: args.noise_std,
        ..EvalConfig::default()
    };
    args.overrides.apply(&mut cfg);
    ensure_dir(&args.out_dir)?;

    let methods = [Method::Hht, Method::Masking, Method::Ekf];
    let (scenario, table_no) = match args.table {
        TableId::T1 => (Scenario::CaseA, 1),
        TableId::T2 => (Scenario::CaseB, 2),
    };
    let set = match scenario {
        Scenario::CaseA => monte_carlo(signalgen::case_a, &methods, args.runs, args.seed, &cfg)?,
        Scenario::CaseB => monte_carlo(signalgen::case_b, &methods, args.runs, args.seed, &cfg)?,
    };

    let doc = json!({
        "command": "reproduce",
        "table": format!("t{table_no}"),
        "scenario": scenario.label(),
        "n_runs": args.runs,
        "base_seed": args.seed,
        "noise_std": args.noise_std,
        "config": args.overrides.echo(&cfg),
        "reports": set.reports,
    });
    artifacts::write_file(
        &args.out_dir.join(format!("table{table_no}.json")),
        &serde_json::to_string_pretty(&doc).unwrap(),
    )?;

    let title = format!(
        "Table {table_no}: {} | {} runs, noise_std {}, base seed {}",
        scenario.label(),
        args.runs,
        args.noise_std,
        args.seed
    );
    let table = artifacts::text_table(&title, &set, matches!(args.table, TableId::T2));
    print!("{table}");
    artifacts::write_file(&args.out_dir.join(format!("table{table_no}.txt")), &table)?;
    artifacts::write_file(&args.out_dir.join("runs.csv"), &artifacts::runs_csv(&set))?;
    Ok(())
}

fn plotdata(args: PlotdataArgs) -> Result<(), CliError> {
    ensure_dir(&args.out_dir)?;
    let rows = artifacts::parse_trace_csv(&args.trace)?;
    let n_modes = rows.iter().map(|r| r.mode_index + 1).max().unwrap_or(0);

    let mut freq: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut damping: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut recon: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for l in 0..n_modes {
        let pick = |f: fn(&artifacts::TraceRow) -> f64| -> Vec<(f64, f64)> {
            rows.iter()
                .filter(|r| r.mode_index == l)
                .map(|r| (r.t_seconds, f(r)))
                .collect()
        };
        freq.push((format!("mode{l}_freq_hz"), pick(|r| r.freq_hz)));
        damping.push((format!("mode{l}_damping_per_s"), pick(|r| r.damping_per_s)));
        recon.push((format!("mode{l}_recon"), pick(|r| r.recon)));
    }
    if let Some(truth_path) = &args.truth {
        let truth = artifacts::parse_truth_csv(truth_path)?;
        let n_truth = truth.iter().map(|r| r.mode_index + 1).max().unwrap_or(0);
        for l in 0..n_truth {
            let series: Vec<(f64, f64)> = truth
                .iter()
                .filter(|r| r.mode_index == l)
                .map(|r| (r.t_seconds, r.freq_hz))
                .collect();
            freq.push((format!("truth_mode{l}_freq_hz"), series));
            let series: Vec<(f64, f64)> = truth
                .iter()
                .filter(|r| r.mode_index == l)
                .map(|r| (r.t_seconds, r.damping_per_s))
                .collect();
            damping.push((format!("truth_mode{l}_damping_per_s"), series));
        }
    }
    for (name, series) in [
        ("frequency_panel.csv", &freq),
        ("damping_panel.csv", &damping),
        ("recon_panel.csv", &recon),
    ] {
        artifacts::write_file(&args.out_dir.join(name), &artifacts::panel_csv(series))?;
    }
    Ok(())
}
