//! End-to-end tests of the command-line contract: artifact schemas,
//! round-trip ingestion, exit codes, and error diagnostics.

use serde::Deserialize;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lfo-modes"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn lfo-modes")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Documented report.json schema; unknown fields are a schema break.
/// Some fields exist purely so deserialization validates them.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct Report {
    command: String,
    method: String,
    input: ReportInput,
    config: ReportConfig,
    detected_modes: usize,
    n_imfs: usize,
    init: Option<ReportInit>,
    status: String,
    artifacts: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ReportInput {
    scenario: Option<String>,
    csv: Option<String>,
    fs_hz: f64,
    n_samples: usize,
    noise_std: Option<f64>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ReportConfig {
    n_modes: usize,
    q_scale: f64,
    r: f64,
    dc_cutoff_hz: f64,
    sd_threshold: f64,
    mask_freq_ratio: f64,
    mask_amp_ratio: f64,
    burn_in_frac: f64,
    robust_cov: bool,
    huber_k: Option<f64>,
    fs_hz_builtin_scenarios: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct ReportInit {
    x0: Vec<f64>,
    peak_freqs_rad_s: Vec<f64>,
}

/// Documented tableN.json schema.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(dead_code)]
struct TableDoc {
    command: String,
    table: String,
    scenario: String,
    n_runs: usize,
    base_seed: u64,
    noise_std: f64,
    config: ReportConfig,
    reports: Vec<lfo_modes::eval::ExperimentReport>,
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

fn value_column(csv: &str) -> Vec<String> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().to_string())
        .collect()
}

#[test]
fn analyze_scenario_writes_all_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "analyze",
        "--scenario",
        "case_a",
        "--method",
        "hht-ekf",
        "--seed",
        "1",
        "--noise-std",
        "0.1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let report: Report = serde_json::from_str(&read(&dir.path().join("report.json"))).unwrap();
    assert_eq!(report.command, "analyze");
    assert_eq!(report.method, "hht-ekf");
    assert_eq!(report.status, "ok");
    assert_eq!(report.detected_modes, 2);
    assert_eq!(report.input.n_samples, 150);
    assert_eq!(report.input.scenario.as_deref(), Some("case_a"));
    assert!(report.input.csv.is_none());
    assert_eq!(report.config.r, 1e-3);
    assert!(report.n_imfs >= 1);
    let init = report.init.expect("ekf report carries init");
    assert_eq!(init.x0.len(), 8);
    assert_eq!(init.peak_freqs_rad_s.len(), 2);
    assert!(report.artifacts.contains(&"trace.csv".to_string()));
    // 2 modes × 150 samples + header.
    let trace = read(&dir.path().join("trace.csv"));
    assert_eq!(trace.lines().count(), 301);
    assert!(trace.starts_with("k,t_seconds,mode_index,freq_rad_s,freq_hz,damping_per_s,recon"));
    let dec = read(&dir.path().join("decomposition.csv"));
    assert_eq!(dec.lines().count(), 151);
}

#[test]
fn round_trip_ingestion_is_bit_exact() {
    let dir = TempDir::new().unwrap();
    let gen_dir = dir.path().join("gen");
    let out = run(&[
        "generate",
        "--scenario",
        "case_a",
        "--noise-std",
        "0.1",
        "--seed",
        "9",
        "--out-dir",
        gen_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let first = gen_dir.join("signal.csv");
    let second_dir = dir.path().join("again");
    let out = run(&[
        "analyze",
        "--input",
        first.to_str().unwrap(),
        "--method",
        "hht",
        "--out-dir",
        second_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let a = value_column(&read(&first));
    let b = value_column(&read(&second_dir.join("signal.csv")));
    assert_eq!(a, b, "re-ingested samples must round-trip bit-exactly");
}

#[test]
fn two_column_input_infers_the_sample_rate() {
    let dir = TempDir::new().unwrap();
    let gen_dir = dir.path().join("gen");
    assert_code(
        &run(&[
            "generate",
            "--scenario",
            "case_b",
            "--seed",
            "3",
            "--out-dir",
            gen_dir.to_str().unwrap(),
        ]),
        0,
    );
    let out_dir = dir.path().join("out");
    assert_code(
        &run(&[
            "analyze",
            "--input",
            gen_dir.join("signal.csv").to_str().unwrap(),
            "--method",
            "hht",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]),
        0,
    );
    let report: Report = serde_json::from_str(&read(&out_dir.join("report.json"))).unwrap();
    assert!((report.input.fs_hz - 30.0).abs() < 1e-6);
    assert!(report.init.is_none());
}

#[test]
fn single_column_requires_fs() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("vals.csv");
    let body: String = (0..64)
        .map(|k| format!("{}\n", ((k as f64) * 0.4).sin()))
        .collect();
    std::fs::write(&csv, body).unwrap();
    let out = run(&[
        "analyze",
        "--input",
        csv.to_str().unwrap(),
        "--method",
        "hht",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--fs"));
    // With the flag the same file analyzes cleanly.
    let out = run(&[
        "analyze",
        "--input",
        csv.to_str().unwrap(),
        "--fs",
        "30",
        "--method",
        "hht",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
}

#[test]
fn bad_cell_is_reported_with_its_line_number() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bad.csv");
    let mut body = String::from("time,value\n");
    for k in 0..10 {
        if k == 5 {
            body.push_str("abc,1.0\n");
        } else {
            body.push_str(&format!("{},{}\n", k as f64 / 30.0, k as f64));
        }
    }
    std::fs::write(&csv, body).unwrap();
    let out = run(&[
        "analyze",
        "--input",
        csv.to_str().unwrap(),
        "--method",
        "hht",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 7"), "stderr: {stderr}");
    assert!(stderr.contains("abc"), "stderr: {stderr}");
}

#[test]
fn non_uniform_timestamps_are_rejected() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("jitter.csv");
    let mut body = String::new();
    for k in 0..10 {
        let t = k as f64 / 30.0 + if k == 8 { 0.01 } else { 0.0 };
        body.push_str(&format!("{t},{}\n", k as f64));
    }
    std::fs::write(&csv, body).unwrap();
    let out = run(&[
        "analyze",
        "--input",
        csv.to_str().unwrap(),
        "--method",
        "hht",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("non-uniform"));
}

#[test]
fn usage_errors_exit_2() {
    // Unknown method: rejected by the parser.
    let out = run(&["analyze", "--scenario", "case_a", "--method", "prony"]);
    assert_code(&out, 2);
    // Both input sources at once.
    let out = run(&[
        "analyze",
        "--scenario",
        "case_a",
        "--input",
        "x.csv",
        "--method",
        "hht",
    ]);
    assert_code(&out, 2);
    // Out-of-range override.
    let out = run(&[
        "reproduce",
        "t1",
        "--runs",
        "1",
        "--q-scale",
        "-1",
    ]);
    assert_code(&out, 2);
}

#[test]
fn reproduce_t1_emits_schema_valid_artifacts() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "reproduce",
        "t1",
        "--runs",
        "3",
        "--seed",
        "42",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let doc: TableDoc = serde_json::from_str(&read(&dir.path().join("table1.json"))).unwrap();
    assert_eq!(doc.command, "reproduce");
    assert_eq!(doc.table, "t1");
    assert_eq!(doc.scenario, "case_a");
    assert_eq!(doc.n_runs, 3);
    assert_eq!(doc.base_seed, 42);
    assert_eq!(doc.reports.len(), 3);
    for r in &doc.reports {
        assert_eq!(r.n_runs, 3);
    }
    let text = read(&dir.path().join("table1.txt"));
    for label in ["hht", "masking", "ekf", "mixing rate"] {
        assert!(text.contains(label), "table text missing {label}:\n{text}");
    }
    // stdout mirrors the text table.
    assert!(String::from_utf8_lossy(&out.stdout).contains("mixing rate"));
    let runs = read(&dir.path().join("runs.csv"));
    assert!(runs.starts_with("method,seed,truth_mode"));
    // 3 methods × 3 runs × 2 truth modes + header.
    assert_eq!(runs.lines().count(), 19);
}

#[test]
fn reproduce_t2_reports_the_middle_third() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "reproduce",
        "t2",
        "--runs",
        "2",
        "--seed",
        "7",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let doc: TableDoc = serde_json::from_str(&read(&dir.path().join("table2.json"))).unwrap();
    assert_eq!(doc.scenario, "case_b");
    let text = read(&dir.path().join("table2.txt"));
    assert!(text.contains("mid-third"), "missing middle-third column:\n{text}");
}

#[test]
fn reproduce_single_run_is_well_formed() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "reproduce",
        "t1",
        "--runs",
        "1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let doc: TableDoc = serde_json::from_str(&read(&dir.path().join("table1.json"))).unwrap();
    assert_eq!(doc.n_runs, 1);
}

#[test]
fn plotdata_emits_panels_with_truth() {
    let dir = TempDir::new().unwrap();
    let a_dir = dir.path().join("a");
    assert_code(
        &run(&[
            "analyze",
            "--scenario",
            "case_a",
            "--method",
            "ekf",
            "--seed",
            "1",
            "--out-dir",
            a_dir.to_str().unwrap(),
        ]),
        0,
    );
    let p_dir = dir.path().join("p");
    let out = run(&[
        "plotdata",
        "--trace",
        a_dir.join("trace.csv").to_str().unwrap(),
        "--truth",
        a_dir.join("truth.csv").to_str().unwrap(),
        "--out-dir",
        p_dir.to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let freq = read(&p_dir.join("frequency_panel.csv"));
    assert!(freq.starts_with("series_name,t,value"));
    for series in ["mode0_freq_hz", "mode1_freq_hz", "truth_mode0_freq_hz"] {
        assert!(freq.contains(series), "missing series {series}");
    }
    assert!(p_dir.join("damping_panel.csv").exists());
    assert!(p_dir.join("recon_panel.csv").exists());
}

#[test]
fn plotdata_of_headers_only_trace_is_empty_panels() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    std::fs::write(
        &trace,
        "k,t_seconds,mode_index,freq_rad_s,freq_hz,damping_per_s,recon\n",
    )
    .unwrap();
    let out = run(&[
        "plotdata",
        "--trace",
        trace.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_code(&out, 0);
    let freq = read(&dir.path().join("frequency_panel.csv"));
    assert_eq!(freq.trim(), "series_name,t,value");
}

#[test]
fn generate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let d1 = dir.path().join("one");
    let d2 = dir.path().join("two");
    for d in [&d1, &d2] {
        assert_code(
            &run(&[
                "generate",
                "--scenario",
                "case_a",
                "--noise-std",
                "0.1",
                "--seed",
                "5",
                "--out-dir",
                d.to_str().unwrap(),
            ]),
            0,
        );
    }
    assert_eq!(read(&d1.join("signal.csv")), read(&d2.join("signal.csv")));
    assert_eq!(read(&d1.join("truth.csv")), read(&d2.join("truth.csv")));
}
