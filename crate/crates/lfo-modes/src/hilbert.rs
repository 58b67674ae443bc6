//! Analytic-signal construction and instantaneous attribute extraction,
//! plus the two decomposition-based frequency trackers they compose into:
//! plain Hilbert spectral analysis and its masking-signal variant.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::emd::{emd, masking_emd, EmdConfig, Imf};
use crate::error::{Error, Result};
use crate::spectrum::significant_peaks;
use crate::types::TimeSeries;

/// Per-sample instantaneous attributes of one analytic component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantaneousTrace {
    /// Instantaneous frequency, rad/s.
    pub freq_rad_s: Vec<f64>,
    /// Envelope magnitude, signal units (non-negative).
    pub amplitude: Vec<f64>,
    /// Instantaneous damping, 1/s (positive decays).
    pub damping_per_s: Vec<f64>,
    /// First and last sample indices considered trustworthy after
    /// end-effect trimming (inclusive).
    pub valid_range: (usize, usize),
}

impl InstantaneousTrace {
    /// Mean frequency over the trusted interior, rad/s.
    pub fn mean_interior_freq(&self) -> f64 {
        let (a, b) = self.valid_range;
        self.freq_rad_s[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
    }
}

/// Configuration for the decomposition-based trackers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhtConfig {
    /// Sifting parameters passed through to the decomposition.
    pub emd: EmdConfig,
    /// IMFs with mean interior frequency below this are tagged DC/trend, Hz.
    pub dc_cutoff_hz: f64,
    /// Fraction of samples trimmed from each end of every trace.
    pub trim_frac: f64,
    /// Masking frequency as a multiple of the reference tone frequency.
    pub mask_freq_ratio: f64,
    /// Masking amplitude as a multiple of the reference tone amplitude;
    /// zero disables masking entirely.
    pub mask_amp_ratio: f64,
    /// Reference tones for the mask are only sought at or above this
    /// frequency, so low-frequency trend content cannot hijack the mask.
    pub mask_min_freq_hz: f64,
    /// Spectral peak threshold as a multiple of the median magnitude.
    pub peak_threshold_factor: f64,
}

impl Default for HhtConfig {
    fn default() -> Self {
        HhtConfig {
            emd: EmdConfig::default(),
            dc_cutoff_hz: 0.1,
            trim_frac: 0.05,
            mask_freq_ratio: 1.6,
            mask_amp_ratio: 0.8,
            mask_min_freq_hz: 0.5,
            peak_threshold_factor: 4.0,
        }
    }
}

/// One analyzed component: the IMF, its instantaneous attributes, and the
/// DC/trend tag.
#[derive(Debug, Clone)]
pub struct AnalyzedMode {
    pub imf: Imf,
    pub trace: InstantaneousTrace,
    /// True when the mean interior frequency falls below the DC cutoff;
    /// such components are trend content, not oscillation modes.
    pub is_dc: bool,
}

/// Analytic signal via the frequency-domain construction: forward FFT,
/// zero the negative frequencies, double the positive ones (DC and Nyquist
/// untouched), inverse FFT. The real part reproduces the input.
pub fn analytic_signal(x: &[f64]) -> Result<Vec<Complex64>> {
    let n = x.len();
    if n < 4 {
        return Err(Error::TooShort { len: n, min: 4 });
    }
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    if n.is_multiple_of(2) {
        for c in buf[1..n / 2].iter_mut() {
            *c *= 2.0;
        }
        for c in buf[n / 2 + 1..].iter_mut() {
            *c = Complex64::new(0.0, 0.0);
        }
    } else {
        for c in buf[1..n.div_ceil(2)].iter_mut() {
            *c *= 2.0;
        }
        for c in buf[n.div_ceil(2)..].iter_mut() {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in buf.iter_mut() {
        *c *= scale;
    }
    Ok(buf)
}

/// Unwraps a phase sequence so consecutive differences stay within ±π.
fn unwrap_phase(phases: &mut [f64]) {
    use std::f64::consts::PI;
    let mut offset = 0.0;
    for i in 1..phases.len() {
        let raw = phases[i] + offset;
        let mut d = raw - phases[i - 1];
        while d > PI {
            offset -= 2.0 * PI;
            d -= 2.0 * PI;
        }
        while d < -PI {
            offset += 2.0 * PI;
            d += 2.0 * PI;
        }
        phases[i] = phases[i - 1] + d;
    }
}

/// Derivative by central differences on the interior and one-sided
/// differences at the ends, times `fs`.
fn gradient_times_fs(x: &[f64], fs: f64) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    out.push((x[1] - x[0]) * fs);
    for k in 1..n - 1 {
        out.push(0.5 * (x[k + 1] - x[k - 1]) * fs);
    }
    out.push((x[n - 1] - x[n - 2]) * fs);
    out
}

/// Instantaneous amplitude, frequency, and damping of an analytic signal:
/// the magnitude, the derivative of the unwrapped phase, and the negative
/// derivative of the log magnitude.
pub fn instantaneous(z: &[Complex64], fs: f64, trim_frac: f64) -> Result<InstantaneousTrace> {
    let n = z.len();
    if n < 4 {
        return Err(Error::TooShort { len: n, min: 4 });
    }
    let amplitude: Vec<f64> = z.iter().map(|c| c.norm()).collect();
    if let Some(k) = amplitude.iter().position(|&a| a == 0.0) {
        return Err(Error::ZeroMagnitude(k));
    }
    let mut phase: Vec<f64> = z.iter().map(|c| c.arg()).collect();
    unwrap_phase(&mut phase);
    let freq_rad_s = gradient_times_fs(&phase, fs);
    let log_amp: Vec<f64> = amplitude.iter().map(|a| a.ln()).collect();
    let damping_per_s: Vec<f64> = gradient_times_fs(&log_amp, fs)
        .into_iter()
        .map(|d| -d)
        .collect();
    let margin = ((n as f64 * trim_frac) as usize).min(n / 2 - 1);
    Ok(InstantaneousTrace {
        freq_rad_s,
        amplitude,
        damping_per_s,
        valid_range: (margin, n - 1 - margin),
    })
}

fn analyze_imfs(imfs: Vec<Imf>, fs: f64, cfg: &HhtConfig) -> Result<Vec<AnalyzedMode>> {
    let dc_cutoff_rad_s = 2.0 * std::f64::consts::PI * cfg.dc_cutoff_hz;
    imfs.into_iter()
        .map(|imf| {
            let z = analytic_signal(&imf.samples)?;
            let trace = instantaneous(&z, fs, cfg.trim_frac)?;
            let is_dc = trace.mean_interior_freq() < dc_cutoff_rad_s;
            Ok(AnalyzedMode { imf, trace, is_dc })
        })
        .collect()
}

/// Hilbert spectral analysis: decompose, then extract instantaneous
/// attributes per IMF, tagging sub-cutoff components as DC/trend.
pub fn hht(x: &TimeSeries, cfg: &HhtConfig) -> Result<Vec<AnalyzedMode>> {
    let dec = emd(x, &cfg.emd);
    analyze_imfs(dec.imfs, x.sample_rate_hz, cfg)
}

/// Chooses the masking tone for a signal: the highest-frequency
/// significant spectral peak at or above the configured floor (falling
/// back to any significant peak). Returns (mask frequency, mask
/// amplitude) after applying the configured ratios.
pub fn select_mask(x: &TimeSeries, cfg: &HhtConfig) -> Option<(f64, f64)> {
    let peaks = significant_peaks(&x.samples, x.sample_rate_hz, cfg.peak_threshold_factor);
    if peaks.is_empty() {
        return None;
    }
    let floor = 2.0 * std::f64::consts::PI * cfg.mask_min_freq_hz;
    let reference = peaks
        .iter()
        .rev()
        .find(|p| p.freq_rad_s >= floor)
        .or_else(|| peaks.last())?;
    Some((
        cfg.mask_freq_ratio * reference.freq_rad_s,
        cfg.mask_amp_ratio * reference.amplitude,
    ))
}

/// Masking-enhanced tracker: the first IMF comes from the masking
/// decomposition, the remaining IMFs from a plain decomposition of the
/// remainder. Degrades to plain `hht` when masking is disabled or no
/// reference tone is found.
pub fn masking_hht(x: &TimeSeries, cfg: &HhtConfig) -> Result<Vec<AnalyzedMode>> {
    let mask = if cfg.mask_amp_ratio > 0.0 {
        select_mask(x, cfg)
    } else {
        None
    };
    let Some((mask_freq, mask_amp)) = mask else {
        return hht(x, cfg);
    };
    let first = match masking_emd(x, mask_freq, mask_amp, &cfg.emd) {
        Ok(samples) => samples,
        Err(Error::ResidueReached) => return hht(x, cfg),
        Err(e) => return Err(e),
    };
    let remainder: Vec<f64> = x
        .samples
        .iter()
        .zip(&first)
        .map(|(v, f)| v - f)
        .collect();
    let rest = emd(&x.with_samples(remainder), &cfg.emd);
    let mut imfs = vec![Imf {
        samples: first,
        index: 1,
        converged: true,
        satisfies_imf_property: true,
    }];
    for mut imf in rest.imfs {
        imf.index = imfs.len() + 1;
        imfs.push(imf);
    }
    analyze_imfs(imfs, x.sample_rate_hz, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn analytic_signal_of_cosine_is_a_phasor() {
        let fs = 100.0;
        let n = 1000;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * PI * 5.0 * k as f64 / fs).cos())
            .collect();
        let z = analytic_signal(&x).unwrap();
        for zk in &z[n / 10..9 * n / 10] {
            assert!((zk.norm() - 1.0).abs() < 0.01, "|z| = {}", zk.norm());
        }
    }

    #[test]
    fn analytic_signal_of_constant_is_real() {
        let z = analytic_signal(&[3.0; 64]).unwrap();
        for c in z {
            assert_abs_diff_eq!(c.re, 3.0, epsilon = 1e-9);
            assert_abs_diff_eq!(c.im, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn analytic_signal_preserves_real_part() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let x: Vec<f64> = (0..257).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let z = analytic_signal(&x).unwrap();
        for (c, v) in z.iter().zip(&x) {
            assert_abs_diff_eq!(c.re, *v, epsilon = 1e-9);
        }
    }

    #[test]
    fn analytic_signal_is_linear() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (1.7, -0.4);
        let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let zc = analytic_signal(&combo).unwrap();
        let zx = analytic_signal(&x).unwrap();
        let zy = analytic_signal(&y).unwrap();
        for k in 0..200 {
            let expect = a * zx[k] + b * zy[k];
            assert!((zc[k] - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn analytic_signal_rejects_short_input() {
        assert!(matches!(
            analytic_signal(&[1.0, 2.0, 3.0]),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn instantaneous_frequency_of_exact_phasor() {
        let fs = 30.0;
        let w0 = 2.0 * PI;
        let z: Vec<Complex64> = (0..300)
            .map(|k| Complex64::from_polar(1.0, w0 * k as f64 / fs))
            .collect();
        let trace = instantaneous(&z, fs, 0.05).unwrap();
        let (a, b) = trace.valid_range;
        for k in a..=b {
            assert_abs_diff_eq!(trace.freq_rad_s[k], w0, epsilon = 1e-6);
        }
    }

    #[test]
    fn instantaneous_damping_of_decaying_phasor() {
        let fs = 30.0;
        let (w0, s0) = (2.0 * PI, 0.1);
        let z: Vec<Complex64> = (0..300)
            .map(|k| {
                let t = k as f64 / fs;
                Complex64::from_polar((-s0 * t).exp(), w0 * t)
            })
            .collect();
        let trace = instantaneous(&z, fs, 0.05).unwrap();
        let (a, b) = trace.valid_range;
        for k in a..=b {
            assert_abs_diff_eq!(trace.damping_per_s[k], s0, epsilon = 1e-6);
        }
    }

    #[test]
    fn instantaneous_of_constant_is_zero() {
        let z = vec![Complex64::new(2.0, 0.0); 64];
        let trace = instantaneous(&z, 30.0, 0.05).unwrap();
        for k in 0..64 {
            assert_abs_diff_eq!(trace.freq_rad_s[k], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(trace.damping_per_s[k], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn instantaneous_rejects_zero_magnitude() {
        let mut z = vec![Complex64::new(1.0, 0.0); 16];
        z[5] = Complex64::new(0.0, 0.0);
        assert!(matches!(
            instantaneous(&z, 30.0, 0.05),
            Err(Error::ZeroMagnitude(5))
        ));
    }

    #[test]
    fn hht_recovers_a_single_tone() {
        let fs = 30.0;
        let n = 450;
        let x: Vec<f64> = (0..n)
            .map(|k| (2.0 * PI * 1.5 * k as f64 / fs).cos())
            .collect();
        let ts = TimeSeries::new(x, fs).unwrap();
        let modes = hht(&ts, &HhtConfig::default()).unwrap();
        let non_dc: Vec<_> = modes.iter().filter(|m| !m.is_dc).collect();
        assert_eq!(non_dc.len(), 1, "expected exactly one non-DC component");
        let mean = non_dc[0].trace.mean_interior_freq();
        let target = 2.0 * PI * 1.5;
        assert!((mean - target).abs() / target < 0.02, "mean {mean}");
    }

    #[test]
    fn hht_of_ramp_has_no_oscillatory_modes() {
        let x: Vec<f64> = (0..64).map(|k| k as f64).collect();
        let ts = TimeSeries::new(x, 30.0).unwrap();
        let modes = hht(&ts, &HhtConfig::default()).unwrap();
        assert!(modes.iter().all(|m| m.is_dc) || modes.is_empty());
    }

    #[test]
    fn masking_disabled_equals_plain_hht() {
        let (ts, _) = crate::signalgen::case_a(0.1, 5);
        let cfg = HhtConfig {
            mask_amp_ratio: 0.0,
            ..HhtConfig::default()
        };
        let plain = hht(&ts, &cfg).unwrap();
        let masked = masking_hht(&ts, &cfg).unwrap();
        assert_eq!(plain.len(), masked.len());
        for (p, m) in plain.iter().zip(&masked) {
            assert_eq!(p.imf.samples, m.imf.samples);
        }
    }

    #[test]
    fn masking_does_not_harm_well_separated_tones() {
        // Frequency ratio > 4: both trackers must still recover both tone
        // frequencies in their two dominant components. (The masked sift
        // extracts the fast tone only partially, so low-energy leftovers may
        // appear; the dominant structure is what must survive.)
        let fs = 100.0;
        let n = 800;
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 / fs;
                (2.0 * PI * 1.0 * t).cos() + (2.0 * PI * 5.0 * t).cos()
            })
            .collect();
        let ts = TimeSeries::new(x, fs).unwrap();
        let cfg = HhtConfig::default();
        for modes in [hht(&ts, &cfg).unwrap(), masking_hht(&ts, &cfg).unwrap()] {
            let mut osc: Vec<_> = modes.into_iter().filter(|m| !m.is_dc).collect();
            osc.sort_by(|a, b| {
                let rms = |m: &AnalyzedMode| {
                    m.imf.samples.iter().map(|v| v * v).sum::<f64>()
                };
                rms(b).partial_cmp(&rms(a)).unwrap()
            });
            assert!(osc.len() >= 2);
            let freqs: Vec<f64> =
                osc[..2].iter().map(|m| m.trace.mean_interior_freq()).collect();
            for target in [2.0 * PI * 5.0, 2.0 * PI * 1.0] {
                assert!(
                    freqs.iter().any(|f| (f - target).abs() / target < 0.05),
                    "no dominant mode near {target}: {freqs:?}"
                );
            }
        }
    }

    #[test]
    fn pure_tone_recovery_across_the_band() {
        // Interior instantaneous frequency error ≤ 1% for noiseless tones
        // between 5% and 40% of the sample rate.
        let fs = 100.0;
        let n = 1000;
        for freq_hz in [5.0, 10.0, 20.0, 30.0, 40.0] {
            let x: Vec<f64> = (0..n)
                .map(|k| (2.0 * PI * freq_hz * k as f64 / fs).cos())
                .collect();
            let z = analytic_signal(&x).unwrap();
            let trace = instantaneous(&z, fs, 0.05).unwrap();
            let (a, b) = trace.valid_range;
            let w0 = 2.0 * PI * freq_hz;
            for k in a..=b {
                assert!(
                    (trace.freq_rad_s[k] - w0).abs() / w0 <= 0.01,
                    "tone {freq_hz} Hz: freq {} at sample {k}",
                    trace.freq_rad_s[k]
                );
            }
        }
    }

    #[test]
    fn damping_recovery_within_tolerance() {
        // The discrete Hilbert transform sees the record as circular, and a
        // damped envelope is discontinuous across the wrap. The resulting
        // ripple decays like 1/(samples from the edge), so a well-oversampled
        // record is evaluated on its central third where the bound holds.
        let fs = 4000.0;
        let n = 16000;
        for sigma in [-0.2, -0.05, 0.05, 0.2] {
            let x: Vec<f64> = (0..n)
                .map(|k| {
                    let t = k as f64 / fs;
                    (-sigma * t).exp() * (2.0 * PI * 10.0 * t).cos()
                })
                .collect();
            let z = analytic_signal(&x).unwrap();
            let trace = instantaneous(&z, fs, 0.05).unwrap();
            for k in n / 3..2 * n / 3 {
                assert!(
                    (trace.damping_per_s[k] - sigma).abs() <= 0.01,
                    "σ={sigma}: damping {} at sample {k}",
                    trace.damping_per_s[k]
                );
            }
        }
    }
}
