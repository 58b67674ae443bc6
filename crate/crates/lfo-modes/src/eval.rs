//! Benchmark metrics and the Monte Carlo harness: mode assignment, the
//! 50% failure (mixing) criterion, windowed frequency MSE, and paired
//! multi-method experiments with deterministic seeding.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ekf::{run_hht_ekf, PipelineConfig};
use crate::error::{Error, Result};
use crate::hilbert::{hht, masking_hht, HhtConfig};
use crate::signalgen::GroundTruth;
use crate::types::TimeSeries;

/// Scoring window for the frequency MSE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreWindow {
    /// Every sample.
    Full,
    /// Samples `[⌊N/3⌋, ⌊2N/3⌋)`, which excludes both the convergence
    /// transient and the end effects.
    MiddleThird,
}

/// The estimation methods the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hht,
    Masking,
    Ekf,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Hht => "hht",
            Method::Masking => "masking",
            Method::Ekf => "ekf",
        }
    }
}

/// Mean squared difference between estimate and truth over a window.
pub fn mse(est: &[f64], truth: &[f64], window: ScoreWindow) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: est.len(),
            right: truth.len(),
        });
    }
    let n = est.len();
    let (a, b) = match window {
        ScoreWindow::Full => (0, n),
        ScoreWindow::MiddleThird => (n / 3, 2 * n / 3),
    };
    let count = (b - a) as f64;
    Ok(est[a..b]
        .iter()
        .zip(&truth[a..b])
        .map(|(e, t)| (e - t) * (e - t))
        .sum::<f64>()
        / count)
}

/// The 50% detection criterion: a mode fails when its mean estimated
/// frequency deviates from the mean true frequency by strictly more than
/// half the true value.
pub fn failure_flag(est_mean_rad_s: f64, truth_mean_rad_s: f64) -> bool {
    (est_mean_rad_s - truth_mean_rad_s).abs() / truth_mean_rad_s > 0.5
}

/// Greedy nearest-frequency assignment: truth modes claim estimates in
/// truth-index order, each taking the unclaimed estimate with the closest
/// mean frequency. Returns, per truth mode, the claimed estimate index.
pub fn assign_modes(est_means: &[f64], truth_means: &[f64]) -> Vec<Option<usize>> {
    let mut used = vec![false; est_means.len()];
    truth_means
        .iter()
        .map(|t| {
            let mut best: Option<(usize, f64)> = None;
            for (i, e) in est_means.iter().enumerate() {
                if used[i] {
                    continue;
                }
                let d = (e - t).abs();
                // Strict improvement keeps ties on the lower estimate index.
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
            best.map(|(i, _)| {
                used[i] = true;
                i
            })
        })
        .collect()
}

/// Score of one truth mode within one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeScore {
    pub truth_index: usize,
    /// Index of the claimed estimate, if any.
    pub matched: Option<usize>,
    /// Unmatched modes fail by definition; matched ones per the 50% rule.
    pub failed: bool,
    pub mse_full: Option<f64>,
    /// MSE over the method's scoring window (post burn-in for the EKF,
    /// full window for the decomposition trackers).
    pub mse_scored: Option<f64>,
    pub mse_middle_third: Option<f64>,
}

/// All mode scores of one method on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunScore {
    pub method: Method,
    pub seed: u64,
    pub modes: Vec<ModeScore>,
}

impl RunScore {
    /// A run fails when any of its truth modes does.
    pub fn any_failed(&self) -> bool {
        self.modes.iter().any(|m| m.failed)
    }
}

/// Aggregate over an experiment: per-mode means exclude failed runs, per
/// the benchmark's scoring convention (a mixed pair corrupts every mode of
/// its run). Set `include_failed_in_mse` for sensitivity analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub n_runs: usize,
    pub n_failed: usize,
    /// Fraction of runs with at least one failed mode.
    pub failure_rate: f64,
    /// Per truth mode, mean MSE over the aggregated runs (rad²/s²).
    pub mean_mse_full: Vec<Option<f64>>,
    pub mean_mse_scored: Vec<Option<f64>>,
    pub mean_mse_middle_third: Vec<Option<f64>>,
    /// Config echo for provenance.
    pub noise_std: f64,
    pub base_seed: u64,
    pub q_scale: f64,
    pub r: f64,
    pub burn_in_frac: f64,
    pub include_failed_in_mse: bool,
}

/// Harness configuration shared by all methods of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    /// Measurement noise standard deviation of the generated runs.
    pub noise_std: f64,
    /// Fraction of initial samples excluded from the EKF scoring window.
    pub burn_in_frac: f64,
    /// Decomposition tracker settings (plain and masking).
    pub hht: HhtConfig,
    /// EKF pipeline settings.
    pub pipeline: PipelineConfig,
    /// Aggregate MSE over all runs instead of non-failed runs only.
    pub include_failed_in_mse: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            noise_std: 0.1,
            burn_in_frac: 0.1,
            hht: HhtConfig::default(),
            pipeline: PipelineConfig::default(),
            include_failed_in_mse: false,
        }
    }
}

/// One estimated frequency trajectory with the mean used for assignment.
struct Estimate {
    mean: f64,
    series: Vec<f64>,
    /// First sample of the method's scoring window.
    scored_from: usize,
}

/// Runs one method on one realization; estimator errors yield an empty
/// estimate set (an automatic all-mode failure), never a panic.
fn estimates_for(method: Method, y: &TimeSeries, cfg: &EvalConfig) -> Vec<Estimate> {
    match method {
        Method::Hht | Method::Masking => {
            let analyzed = if method == Method::Hht {
                hht(y, &cfg.hht)
            } else {
                masking_hht(y, &cfg.hht)
            };
            match analyzed {
                Ok(modes) => modes
                    .into_iter()
                    .filter(|m| !m.is_dc)
                    .map(|m| Estimate {
                        mean: m.trace.mean_interior_freq(),
                        series: m.trace.freq_rad_s,
                        scored_from: 0,
                    })
                    .collect(),
                Err(_) => Vec::new(),
            }
        }
        Method::Ekf => match run_hht_ekf(y, &cfg.pipeline) {
            Ok(result) => {
                let n = y.len();
                let burn = ((n as f64 * cfg.burn_in_frac) as usize).min(n - 1);
                result
                    .trace
                    .freq_rad_s
                    .into_iter()
                    .map(|series| {
                        let mean =
                            series[burn..].iter().sum::<f64>() / (n - burn) as f64;
                        Estimate {
                            mean,
                            series,
                            scored_from: burn,
                        }
                    })
                    .collect()
            }
            Err(_) => Vec::new(),
        },
    }
}

/// Scores one method's estimates against the ground truth of one run.
fn score_run(method: Method, seed: u64, estimates: &[Estimate], truth: &GroundTruth) -> RunScore {
    let truth_means: Vec<f64> = truth
        .freq_rad_s
        .iter()
        .map(|f| f.iter().sum::<f64>() / f.len() as f64)
        .collect();
    let est_means: Vec<f64> = estimates.iter().map(|e| e.mean).collect();
    let assignment = assign_modes(&est_means, &truth_means);
    let modes = assignment
        .iter()
        .enumerate()
        .map(|(ti, claimed)| match claimed {
            Some(ei) => {
                let est = &estimates[*ei];
                let t = &truth.freq_rad_s[ti];
                let scored = mse(&est.series[est.scored_from..], &t[est.scored_from..], ScoreWindow::Full);
                ModeScore {
                    truth_index: ti,
                    matched: Some(*ei),
                    failed: failure_flag(est.mean, truth_means[ti]),
                    mse_full: mse(&est.series, t, ScoreWindow::Full).ok(),
                    mse_scored: scored.ok(),
                    mse_middle_third: mse(&est.series, t, ScoreWindow::MiddleThird).ok(),
                }
            }
            None => ModeScore {
                truth_index: ti,
                matched: None,
                failed: true,
                mse_full: None,
                mse_scored: None,
                mse_middle_third: None,
            },
        })
        .collect();
    RunScore {
        method,
        seed,
        modes,
    }
}

fn aggregate(
    method: Method,
    runs: &[RunScore],
    n_modes: usize,
    cfg: &EvalConfig,
    base_seed: u64,
) -> ExperimentReport {
    let n_runs = runs.len();
    let n_failed = runs.iter().filter(|r| r.any_failed()).count();
    let mean_over = |pick: &dyn Fn(&ModeScore) -> Option<f64>, mode: usize| -> Option<f64> {
        let values: Vec<f64> = runs
            .iter()
            .filter(|r| cfg.include_failed_in_mse || !r.any_failed())
            .filter_map(|r| r.modes.get(mode).and_then(pick))
            .collect();
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    ExperimentReport {
        method,
        n_runs,
        n_failed,
        failure_rate: n_failed as f64 / n_runs as f64,
        mean_mse_full: (0..n_modes).map(|m| mean_over(&|s| s.mse_full, m)).collect(),
        mean_mse_scored: (0..n_modes).map(|m| mean_over(&|s| s.mse_scored, m)).collect(),
        mean_mse_middle_third: (0..n_modes)
            .map(|m| mean_over(&|s| s.mse_middle_third, m))
            .collect(),
        noise_std: cfg.noise_std,
        base_seed,
        q_scale: cfg.pipeline.q_scale,
        r: cfg.pipeline.r,
        burn_in_frac: cfg.burn_in_frac,
        include_failed_in_mse: cfg.include_failed_in_mse,
    }
}

/// Full output of a Monte Carlo experiment: the per-method aggregates and
/// each individual run score for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSet {
    pub reports: Vec<ExperimentReport>,
    pub runs: Vec<RunScore>,
}

/// Runs `n_runs` paired comparisons: run `i` generates its realization
/// with seed `base_seed + i`, every requested method consumes the same
/// realization, and scores are aggregated per method. Runs execute in
/// parallel; results are collected in seed order, so the output is
/// identical regardless of worker count.
pub fn monte_carlo<G>(
    generate: G,
    methods: &[Method],
    n_runs: usize,
    base_seed: u64,
    cfg: &EvalConfig,
) -> Result<ExperimentSet>
where
    G: Fn(f64, u64) -> (TimeSeries, GroundTruth) + Sync,
{
    if n_runs == 0 {
        return Err(Error::InvalidInput("n_runs must be ≥ 1".into()));
    }
    let per_run: Vec<Vec<RunScore>> = (0..n_runs)
        .into_par_iter()
        .map(|i| {
            let seed = base_seed + i as u64;
            let (y, truth) = generate(cfg.noise_std, seed);
            methods
                .iter()
                .map(|&m| score_run(m, seed, &estimates_for(m, &y, cfg), &truth))
                .collect()
        })
        .collect();

    let n_modes = {
        let (_, truth) = generate(cfg.noise_std, base_seed);
        truth.n_modes()
    };
    let reports = methods
        .iter()
        .enumerate()
        .map(|(mi, &m)| {
            let runs: Vec<RunScore> = per_run.iter().map(|r| r[mi].clone()).collect();
            aggregate(m, &runs, n_modes, cfg, base_seed)
        })
        .collect();
    let runs = per_run.into_iter().flatten().collect();
    Ok(ExperimentSet { reports, runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signalgen::{case_a, case_b};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn assignment_picks_nearest() {
        let pairing = assign_modes(&[3.1 * PI, 2.05 * PI], &[2.0 * PI, 3.0 * PI]);
        assert_eq!(pairing, vec![Some(1), Some(0)]);
    }

    #[test]
    fn assignment_leaves_extra_truths_unmatched() {
        let pairing = assign_modes(&[2.9 * PI], &[2.0 * PI, 3.0 * PI]);
        assert_eq!(pairing, vec![Some(0), None]);
    }

    #[test]
    fn assignment_breaks_ties_toward_lower_truth_index() {
        // One estimate equidistant from both truths: the lower-index truth
        // claims it first.
        let pairing = assign_modes(&[2.5], &[2.0, 3.0]);
        assert_eq!(pairing, vec![Some(0), None]);
    }

    #[test]
    fn failure_flag_examples() {
        assert!(failure_flag(2.0 * PI * 1.6, 2.0 * PI));
        assert!(!failure_flag(2.0 * PI, 2.0 * PI));
        // Exactly 50% deviation is not a failure: the rule is strict.
        assert!(!failure_flag(1.5 * 2.0 * PI, 2.0 * PI));
    }

    #[test]
    fn mse_basics() {
        let t = vec![1.0; 12];
        assert_abs_diff_eq!(mse(&t, &t, ScoreWindow::Full).unwrap(), 0.0);
        let off: Vec<f64> = t.iter().map(|v| v + 0.5).collect();
        assert_abs_diff_eq!(mse(&off, &t, ScoreWindow::Full).unwrap(), 0.25);
        assert!(mse(&t[..5], &t, ScoreWindow::Full).is_err());
    }

    #[test]
    fn middle_third_window_bounds() {
        // N = 150: the middle third is samples 50..100.
        let mut est = vec![0.0; 150];
        let truth = vec![0.0; 150];
        est[49] = 100.0;
        est[100] = 100.0;
        est[50..100].fill(1.0);
        assert_abs_diff_eq!(
            mse(&est, &truth, ScoreWindow::MiddleThird).unwrap(),
            1.0
        );
    }

    #[test]
    fn single_noiseless_run_with_exact_init_is_accurate() {
        use crate::ekf::FftInit;
        use crate::signalgen::ModeSpec;
        use nalgebra::DVector;
        // Noiseless tone with the initial state handed over exactly: the
        // filter should track essentially perfectly.
        let w0 = 2.0 * PI * 1.5;
        let phi = 0.3;
        let scenario = |_noise: f64, seed: u64| {
            crate::signalgen::synthesize(
                &[ModeSpec::constant(1.0, 0.0, w0, phi)],
                150,
                30.0,
                None,
                0.0,
                seed,
            )
            .unwrap()
        };
        let bc = phi.cos();
        let bs = -phi.sin();
        let x0 = DVector::from_vec(vec![(bc + bs) / 2.0, (bc - bs) / 2.0, w0, 0.0]);
        let mut cfg = EvalConfig {
            noise_std: 0.0,
            ..EvalConfig::default()
        };
        cfg.pipeline.init_override = Some(FftInit {
            n_modes: 1,
            x0,
            p0: crate::ekf::default_p0(1),
            peak_freqs_rad_s: vec![w0],
        });
        let set = monte_carlo(scenario, &[Method::Ekf], 1, 0, &cfg).unwrap();
        let report = &set.reports[0];
        assert_eq!(report.n_failed, 0);
        for m in &report.mean_mse_scored {
            assert!(m.unwrap() < 1e-2, "scored MSE {m:?}");
        }
    }

    #[test]
    fn repeated_experiments_are_bit_identical() {
        let cfg = EvalConfig::default();
        let methods = [Method::Hht, Method::Ekf];
        let a = monte_carlo(case_a, &methods, 8, 42, &cfg).unwrap();
        let b = monte_carlo(case_a, &methods, 8, 42, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = EvalConfig::default();
        let methods = [Method::Hht, Method::Masking, Method::Ekf];
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| monte_carlo(case_b, &methods, 6, 7, &cfg).unwrap());
        let many = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| monte_carlo(case_b, &methods, 6, 7, &cfg).unwrap());
        assert_eq!(single, many);
    }

    #[test]
    fn failure_rate_is_exact_count_ratio() {
        let cfg = EvalConfig::default();
        let set = monte_carlo(case_a, &[Method::Hht], 10, 100, &cfg).unwrap();
        let report = &set.reports[0];
        let failed = set.runs.iter().filter(|r| r.any_failed()).count();
        assert_eq!(report.n_failed, failed);
        assert_abs_diff_eq!(report.failure_rate, failed as f64 / 10.0);
    }

    #[test]
    fn aggregate_matches_stored_per_run_scores() {
        let cfg = EvalConfig::default();
        let set = monte_carlo(case_a, &[Method::Ekf], 12, 3, &cfg).unwrap();
        let report = &set.reports[0];
        for mode in 0..2 {
            let values: Vec<f64> = set
                .runs
                .iter()
                .filter(|r| !r.any_failed())
                .filter_map(|r| r.modes[mode].mse_scored)
                .collect();
            if values.is_empty() {
                assert!(report.mean_mse_scored[mode].is_none());
            } else {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                assert_abs_diff_eq!(
                    report.mean_mse_scored[mode].unwrap(),
                    mean,
                    epsilon = 1e-12
                );
            }
        }
    }
}
