//! Deterministic, seedable generators for the synthetic benchmark signals:
//! multi-mode damped sinusoids with optional frequency ramps, a step
//! disturbance, and white Gaussian measurement noise, with per-sample
//! ground truth attached.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::TimeSeries;

/// Linear frequency ramp over the record: `ω[k] = start + (end − start)·k/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FreqRamp {
    /// Frequency at the first sample, rad/s.
    pub start_rad_s: f64,
    /// Frequency the ramp would reach at sample `n`, rad/s.
    pub end_rad_s: f64,
}

/// One oscillation mode of the synthesis model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Amplitude `A`, signal units.
    pub amplitude: f64,
    /// Damping factor `σ`, 1/s; negative values grow.
    pub damping_per_s: f64,
    /// Frequency `ω`, rad/s (> 0, below Nyquist).
    pub freq_rad_s: f64,
    /// Initial phase `φ`, radians.
    pub phase_rad: f64,
    /// Optional linear ramp; when set, it overrides `freq_rad_s` per sample.
    pub freq_ramp: Option<FreqRamp>,
}

impl ModeSpec {
    /// Constant-frequency mode.
    pub fn constant(amplitude: f64, damping_per_s: f64, freq_rad_s: f64, phase_rad: f64) -> Self {
        ModeSpec {
            amplitude,
            damping_per_s,
            freq_rad_s,
            phase_rad,
            freq_ramp: None,
        }
    }

    /// Frequency of the mode at sample `k` of an `n`-sample record, rad/s.
    pub fn freq_at(&self, k: usize, n: usize) -> f64 {
        match self.freq_ramp {
            Some(r) => r.start_rad_s + (r.end_rad_s - r.start_rad_s) * k as f64 / n as f64,
            None => self.freq_rad_s,
        }
    }

    /// Largest frequency the mode reaches over an `n`-sample record.
    fn max_freq(&self, n: usize) -> f64 {
        match self.freq_ramp {
            Some(r) => {
                let last = r.start_rad_s + (r.end_rad_s - r.start_rad_s) * (n as f64 - 1.0) / n as f64;
                r.start_rad_s.max(last)
            }
            None => self.freq_rad_s,
        }
    }
}

/// Per-sample truth attached to a generated series; this is what the
/// benchmark metrics score estimates against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Instantaneous frequency of each mode, rad/s, one sequence per mode.
    pub freq_rad_s: Vec<Vec<f64>>,
    /// Instantaneous damping of each mode, 1/s.
    pub damping_per_s: Vec<Vec<f64>>,
    /// Step disturbance, if present: (onset index, offset value). The step
    /// applies strictly after the onset index.
    pub step_jump: Option<(usize, f64)>,
}

impl GroundTruth {
    /// Number of modes carried.
    pub fn n_modes(&self) -> usize {
        self.freq_rad_s.len()
    }
}

/// Synthesizes `samples[k] = Σ_l A_l·exp(−σ_l·k/fs)·cos(ω_l[k]·k/fs + φ_l)
/// + step·1(k > onset) + ε[k]` with `ε ~ N(0, noise_std²)`.
///
/// The noise stream is drawn from ChaCha8 seeded with `seed`, so identical
/// arguments give bit-identical output on every platform. Note the ramped
/// phase is the literal product `ω[k]·k/fs`, not an integrated phase; the
/// ground truth reports `ω[k]` as the per-sample frequency.
pub fn synthesize(
    modes: &[ModeSpec],
    n: usize,
    fs: f64,
    step: Option<(usize, f64)>,
    noise_std: f64,
    seed: u64,
) -> Result<(TimeSeries, GroundTruth)> {
    if n < 2 {
        return Err(Error::TooShort { len: n, min: 2 });
    }
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::InvalidInput(format!("fs must be positive, got {fs}")));
    }
    if !noise_std.is_finite() || noise_std < 0.0 {
        return Err(Error::InvalidInput(format!(
            "noise_std must be finite and non-negative, got {noise_std}"
        )));
    }
    let nyquist = std::f64::consts::PI * fs;
    for m in modes {
        if ![m.amplitude, m.damping_per_s, m.freq_rad_s, m.phase_rad]
            .iter()
            .all(|v| v.is_finite())
        {
            return Err(Error::InvalidInput("non-finite mode parameter".into()));
        }
        if m.max_freq(n) >= nyquist {
            return Err(Error::AboveNyquist {
                freq_rad_s: m.max_freq(n),
                nyquist_rad_s: nyquist,
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(n);
    let mut truth_freq = vec![Vec::with_capacity(n); modes.len()];
    let mut truth_damp = vec![Vec::with_capacity(n); modes.len()];
    for k in 0..n {
        let t = k as f64 / fs;
        let mut y = 0.0;
        for (l, m) in modes.iter().enumerate() {
            let w = m.freq_at(k, n);
            y += m.amplitude * (-m.damping_per_s * t).exp() * (w * t + m.phase_rad).cos();
            truth_freq[l].push(w);
            truth_damp[l].push(m.damping_per_s);
        }
        if let Some((onset, value)) = step {
            if k > onset {
                y += value;
            }
        }
        if noise_std > 0.0 {
            let eps: f64 = StandardNormal.sample(&mut rng);
            y += noise_std * eps;
        }
        samples.push(y);
    }

    let series = TimeSeries::new(samples, fs)?;
    let truth = GroundTruth {
        freq_rad_s: truth_freq,
        damping_per_s: truth_damp,
        step_jump: step,
    };
    Ok((series, truth))
}

/// Two-mode benchmark: constant frequencies 2π and 3π rad/s (1.0 and
/// 1.5 Hz), dampings −0.1 and 0.01 1/s, phases 0 and π/3, fs = 30 Hz,
/// N = 150, with a +5 step for k > N/2.
pub fn case_a(noise_std: f64, seed: u64) -> (TimeSeries, GroundTruth) {
    use std::f64::consts::PI;
    let modes = [
        ModeSpec::constant(1.0, -0.1, 2.0 * PI, 0.0),
        ModeSpec::constant(1.0, 0.01, 3.0 * PI, PI / 3.0),
    ];
    synthesize(&modes, 150, 30.0, Some((75, 5.0)), noise_std, seed)
        .expect("fixed benchmark parameters are valid")
}

/// Single-mode time-variant benchmark: `ω[k] = 2π(1.5 + 0.5·k/N)` rad/s,
/// unit amplitude, no damping, fs = 30 Hz, N = 150, +5 step for k > N/2.
pub fn case_b(noise_std: f64, seed: u64) -> (TimeSeries, GroundTruth) {
    use std::f64::consts::PI;
    let modes = [ModeSpec {
        amplitude: 1.0,
        damping_per_s: 0.0,
        freq_rad_s: 2.0 * PI * 1.5,
        phase_rad: 0.0,
        freq_ramp: Some(FreqRamp {
            start_rad_s: 2.0 * PI * 1.5,
            end_rad_s: 2.0 * PI * 2.0,
        }),
    }];
    synthesize(&modes, 150, 30.0, Some((75, 5.0)), noise_std, seed)
        .expect("fixed benchmark parameters are valid")
}
