//! Windowed magnitude-spectrum peak detection shared by the masking-signal
//! selector and the filter initializer: Hann taper, median-based noise
//! floor, and log-parabolic sub-bin frequency refinement.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// One significant spectral peak of a real signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak {
    /// FFT bin index of the local maximum.
    pub bin: usize,
    /// Peak frequency in rad/s, refined by log-parabolic interpolation of
    /// the three bins around the maximum.
    pub freq_rad_s: f64,
    /// Amplitude estimate of the underlying tone (window gain corrected).
    pub amplitude: f64,
    /// Phase of the peak bin, radians.
    pub phase_rad: f64,
    /// Raw magnitude of the peak bin (for ranking).
    pub magnitude: f64,
}

/// Symmetric Hann window, `w[k] = 0.5·(1 − cos(2πk/(n−1)))`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|k| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * k as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Forward FFT of a real signal; returns the full complex spectrum.
pub fn fft_forward(x: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Detects local maxima of the Hann-windowed, mean-removed magnitude
/// spectrum that rise above `threshold_factor` times the median magnitude
/// (DC and Nyquist bins excluded). Peaks are returned in ascending bin
/// order.
pub fn significant_peaks(x: &[f64], fs: f64, threshold_factor: f64) -> Vec<SpectralPeak> {
    let n = x.len();
    if n < 8 {
        return Vec::new();
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let window = hann(n);
    let window_sum: f64 = window.iter().sum();
    let tapered: Vec<f64> = x
        .iter()
        .zip(&window)
        .map(|(v, w)| (v - mean) * w)
        .collect();
    let spectrum = fft_forward(&tapered);
    let half = n / 2 + 1;
    let mag: Vec<f64> = spectrum[..half].iter().map(|c| c.norm()).collect();

    let mut sorted = mag.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if half % 2 == 1 {
        sorted[half / 2]
    } else {
        0.5 * (sorted[half / 2 - 1] + sorted[half / 2])
    };
    let threshold = threshold_factor * median;

    let mut peaks = Vec::new();
    for i in 1..half.saturating_sub(1) {
        if mag[i] > mag[i - 1] && mag[i] >= mag[i + 1] && mag[i] > threshold {
            // Log-parabolic refinement; degenerate neighborhoods fall back
            // to the bin center.
            let delta = if mag[i - 1] > 0.0 && mag[i + 1] > 0.0 {
                let la = mag[i - 1].ln();
                let lb = mag[i].ln();
                let lc = mag[i + 1].ln();
                let den = la - 2.0 * lb + lc;
                if den.abs() > 1e-12 {
                    (0.5 * (la - lc) / den).clamp(-0.5, 0.5)
                } else {
                    0.0
                }
            } else {
                0.0
            };
            peaks.push(SpectralPeak {
                bin: i,
                freq_rad_s: 2.0 * std::f64::consts::PI * (i as f64 + delta) * fs / n as f64,
                amplitude: 2.0 * mag[i] / window_sum,
                phase_rad: spectrum[i].arg(),
                magnitude: mag[i],
            });
        }
    }
    peaks
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn hann_matches_reference_values() {
        // Frozen oracle: numpy.hanning(8).
        let w = hann(8);
        let expected = [
            0.0,
            0.1882550990706332,
            0.6112604669781572,
            0.9504844339512095,
            0.9504844339512095,
            0.6112604669781572,
            0.1882550990706332,
            0.0,
        ];
        for (a, b) in w.iter().zip(expected) {
            assert_abs_diff_eq!(a, &b, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_tone_peak_location_amp_and_phase() {
        let fs = 30.0;
        let n = 512;
        let amp = 2.5;
        let phase = 0.8;
        // Bin-centred tone (bin 32 of 512 at 30 Hz): amplitude recovery is
        // only leakage-free on a bin centre; off-bin scalloping loses ~10%.
        let freq = 2.0 * PI * 1.875;
        let x: Vec<f64> = (0..n)
            .map(|k| amp * (freq * k as f64 / fs + phase).cos())
            .collect();
        let peaks = significant_peaks(&x, fs, 4.0);
        assert_eq!(peaks.len(), 1);
        let p = peaks[0];
        assert!((p.freq_rad_s - freq).abs() < 2.0 * PI * fs / n as f64);
        assert!((p.amplitude - amp).abs() / amp < 0.05, "amp {}", p.amplitude);
        // Phase of the positive-frequency line of A·cos(ωt+φ) is φ (up to
        // window leakage).
        assert!((p.phase_rad - phase).abs() < 0.1, "phase {}", p.phase_rad);
    }

    #[test]
    fn two_separated_tones_give_two_peaks() {
        let fs = 30.0;
        let n = 512;
        let x: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 / fs;
                (2.0 * PI * t).cos() + (3.0 * PI * t).cos()
            })
            .collect();
        let peaks = significant_peaks(&x, fs, 4.0);
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].freq_rad_s - 2.0 * PI).abs() < 0.1);
        assert!((peaks[1].freq_rad_s - 3.0 * PI).abs() < 0.1);
    }

    #[test]
    fn white_noise_rarely_triggers() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut triggers = 0;
        for seed in 0..100 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..150)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    0.1 * v
                })
                .collect();
            if !significant_peaks(&x, 30.0, 4.0).is_empty() {
                triggers += 1;
            }
        }
        // The 4× median threshold keeps the false-trigger rate low on pure
        // noise records of benchmark length.
        assert!(triggers <= 20, "false triggers on {triggers}/100 noise draws");
    }
}
