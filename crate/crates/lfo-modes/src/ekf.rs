//! The oscillation-mode state-space model and its extended Kalman filter:
//! per-mode rotating-phasor states with random-walk frequency and damping,
//! the analytic Jacobian, FFT-triggered initialization, and the end-to-end
//! decomposition → detrending → filtering pipeline.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::emd::{emd, EmdConfig};
use crate::error::{Error, Result};
use crate::hilbert::{analytic_signal, instantaneous};
use crate::spectrum::significant_peaks;
use crate::types::TimeSeries;

/// Stacked filter state: per mode `[x^c, x^s, x^ω, x^σ]` (in-phase and
/// quadrature signal components, frequency in rad/s, damping in 1/s),
/// with its covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfState {
    pub x: DVector<f64>,
    pub p: DMatrix<f64>,
}

/// Filter configuration. Defaults follow the benchmark settings:
/// `Q = 1e-9·I`, `R = 1e-3`, Joseph-form covariance updates, and Huber
/// deweighting of large innovations at 2 standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct EkfConfig {
    /// Number of tracked modes, L ≥ 1.
    pub n_modes: usize,
    /// Process covariance, 4L×4L.
    pub q: DMatrix<f64>,
    /// Scalar measurement variance, > 0.
    pub r: f64,
    /// Initial state, length 4L.
    pub x0: DVector<f64>,
    /// Initial covariance, 4L×4L.
    pub p0: DMatrix<f64>,
    /// Sampling rate, Hz.
    pub fs: f64,
    /// Joseph-form covariance update (numerically safer); the textbook
    /// `P − KHP` form is used when false.
    pub robust_cov: bool,
    /// Huber threshold in innovation standard deviations; innovations
    /// beyond it get a proportionally reduced gain. `None` disables the
    /// deweighting, giving the plain EKF recursion.
    pub huber_k: Option<f64>,
}

impl EkfConfig {
    /// Configuration with the benchmark defaults for a given
    /// initialization.
    pub fn new(n_modes: usize, fs: f64, x0: DVector<f64>, p0: DMatrix<f64>) -> Self {
        let dim = 4 * n_modes;
        EkfConfig {
            n_modes,
            q: DMatrix::identity(dim, dim) * 1e-9,
            r: 1e-3,
            x0,
            p0,
            fs,
            robust_cov: true,
            huber_k: Some(2.0),
        }
    }

    fn validate(&self) -> Result<()> {
        let dim = 4 * self.n_modes;
        if self.n_modes == 0 {
            return Err(Error::InvalidInput("n_modes must be ≥ 1".into()));
        }
        if self.x0.len() != dim || self.p0.nrows() != dim || self.p0.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "state dimension mismatch: expected {dim}"
            )));
        }
        if self.q.nrows() != dim || self.q.ncols() != dim {
            return Err(Error::InvalidInput(format!(
                "Q must be {dim}×{dim}"
            )));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidInput(format!("R must be > 0, got {}", self.r)));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::InvalidInput(format!("fs must be > 0, got {}", self.fs)));
        }
        Ok(())
    }
}

/// Filter output: post-update state trajectories per mode, plus the
/// innovation sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTrace {
    /// `x̂^ω_l[k|k]`, rad/s, one sequence per mode.
    pub freq_rad_s: Vec<Vec<f64>>,
    /// `x̂^σ_l[k|k]`, 1/s.
    pub damping_per_s: Vec<Vec<f64>>,
    /// Mode-signal reconstruction `x̂^c + x̂^s`.
    pub recon: Vec<Vec<f64>>,
    /// `√((x^c)² + (x^s)²)`: an envelope proxy that equals the true
    /// envelope only at phase alignment — reported as such, not as truth.
    pub amplitude_proxy: Vec<Vec<f64>>,
    /// Pre-update innovations `y[k] − H·x̂[k|k−1]`.
    pub innovations: Vec<f64>,
}

impl ModeTrace {
    pub fn n_modes(&self) -> usize {
        self.freq_rad_s.len()
    }

    pub fn len(&self) -> usize {
        self.innovations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.innovations.is_empty()
    }
}

/// One prediction step of the state model. Per mode, the phasor
/// `(x^c, x^s)` rotates by `ω/fs` radians and decays by `exp(−σ/fs)`;
/// frequency and damping are random walks (identity here, noise in Q).
pub fn transition(x: &DVector<f64>, fs: f64) -> DVector<f64> {
    let mut out = x.clone();
    for l in 0..x.len() / 4 {
        let b = 4 * l;
        let (c, s, w, sg) = (x[b], x[b + 1], x[b + 2], x[b + 3]);
        let d = (-sg / fs).exp();
        let (sin_a, cos_a) = (w / fs).sin_cos();
        out[b] = d * (cos_a * c - sin_a * s);
        out[b + 1] = d * (sin_a * c + cos_a * s);
    }
    out
}

/// Analytic Jacobian of `transition` at `x`: block diagonal with one 4×4
/// block per mode; the ω and σ rows are identity rows.
pub fn jacobian(x: &DVector<f64>, fs: f64) -> DMatrix<f64> {
    let dim = x.len();
    let mut f = DMatrix::identity(dim, dim);
    for l in 0..dim / 4 {
        let b = 4 * l;
        let (c, s, w, sg) = (x[b], x[b + 1], x[b + 2], x[b + 3]);
        let d = (-sg / fs).exp();
        let (sin_a, cos_a) = (w / fs).sin_cos();
        let c_next = d * (cos_a * c - sin_a * s);
        let s_next = d * (sin_a * c + cos_a * s);
        f[(b, b)] = d * cos_a;
        f[(b, b + 1)] = -d * sin_a;
        f[(b, b + 2)] = d * (-sin_a * c - cos_a * s) / fs;
        f[(b, b + 3)] = -c_next / fs;
        f[(b + 1, b)] = d * sin_a;
        f[(b + 1, b + 1)] = d * cos_a;
        f[(b + 1, b + 2)] = d * (cos_a * c - sin_a * s) / fs;
        f[(b + 1, b + 3)] = -s_next / fs;
    }
    f
}

/// The measurement row `H = [1, 1, 0, 0, 1, 1, 0, 0, …]`: the measurement
/// is the sum of every mode's `x^c + x^s`.
pub fn observation_row(n_modes: usize) -> DVector<f64> {
    let mut h = DVector::zeros(4 * n_modes);
    for l in 0..n_modes {
        h[4 * l] = 1.0;
        h[4 * l + 1] = 1.0;
    }
    h
}

/// Runs the EKF recursion over the measurements: scalar innovation
/// variance, gain, measurement update, then predict through the state
/// model. Covariance is re-symmetrized every step; non-finite state or
/// covariance aborts with the failing sample index.
pub fn filter(y: &TimeSeries, cfg: &EkfConfig) -> Result<ModeTrace> {
    cfg.validate()?;
    let n = y.len();
    let l_modes = cfg.n_modes;
    let dim = 4 * l_modes;
    let h = observation_row(l_modes);
    let identity = DMatrix::<f64>::identity(dim, dim);

    let mut x = cfg.x0.clone();
    let mut p = cfg.p0.clone();
    let mut trace = ModeTrace {
        freq_rad_s: vec![Vec::with_capacity(n); l_modes],
        damping_per_s: vec![Vec::with_capacity(n); l_modes],
        recon: vec![Vec::with_capacity(n); l_modes],
        amplitude_proxy: vec![Vec::with_capacity(n); l_modes],
        innovations: Vec::with_capacity(n),
    };

    for k in 0..n {
        // Measurement update.
        let ph = &p * &h;
        let s = cfg.r + ph.dot(&h);
        let innovation = y.samples[k] - h.dot(&x);
        trace.innovations.push(innovation);
        let weight = match cfg.huber_k {
            Some(t) => {
                let bound = t * s.sqrt();
                if innovation.abs() > bound {
                    bound / innovation.abs()
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let gain = ph * (weight / s);
        x += &gain * innovation;
        if cfg.robust_cov {
            let ikh = &identity - &gain * h.transpose();
            p = &ikh * p * ikh.transpose() + &gain * gain.transpose() * cfg.r;
        } else {
            let hp = h.transpose() * &p;
            p -= &gain * hp;
        }
        p = (&p + p.transpose()) * 0.5;

        // Record the post-update state.
        for l in 0..l_modes {
            let b = 4 * l;
            trace.freq_rad_s[l].push(x[b + 2]);
            trace.damping_per_s[l].push(x[b + 3]);
            trace.recon[l].push(x[b] + x[b + 1]);
            trace.amplitude_proxy[l].push((x[b] * x[b] + x[b + 1] * x[b + 1]).sqrt());
        }

        // Predict.
        let f = jacobian(&x, cfg.fs);
        x = transition(&x, cfg.fs);
        p = &f * p * f.transpose() + &cfg.q;

        if x.iter().any(|v| !v.is_finite()) || p.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { sample: k });
        }
    }
    Ok(trace)
}

/// Initialization produced by the spectrum trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct FftInit {
    pub n_modes: usize,
    pub x0: DVector<f64>,
    pub p0: DMatrix<f64>,
    /// Peak frequencies used, ascending, rad/s (for reporting).
    pub peak_freqs_rad_s: Vec<f64>,
}

/// Default initial covariance block per mode: unit variance on the signal
/// components, (2π·0.05)² on frequency and 0.05² on damping. The frequency
/// prior is deliberately tight around the spectral estimate — with short
/// records and closely spaced modes, a loose prior lets neighboring modes
/// collapse onto one frequency.
pub fn default_p0(n_modes: usize) -> DMatrix<f64> {
    let block = [
        1.0,
        1.0,
        (2.0 * std::f64::consts::PI * 0.05).powi(2),
        0.05 * 0.05,
    ];
    let dim = 4 * n_modes;
    let mut p0 = DMatrix::zeros(dim, dim);
    for l in 0..n_modes {
        for (i, v) in block.iter().enumerate() {
            p0[(4 * l + i, 4 * l + i)] = *v;
        }
    }
    p0
}

/// FFT trigger and initializer: detects up to `l_max` significant spectral
/// peaks separated by at least `min_sep_hz`, and turns each into a mode
/// block `[Â·cos(φ̂), −Â·sin(φ̂), ω̂, 0]`. Errors with "no oscillation
/// detected" when no peak clears the threshold.
pub fn initialize_from_fft(
    y: &TimeSeries,
    l_max: usize,
    min_sep_hz: f64,
    threshold_factor: f64,
) -> Result<FftInit> {
    if y.len() < 16 {
        return Err(Error::TooShort { len: y.len(), min: 16 });
    }
    let fs = y.sample_rate_hz;
    let mut peaks = significant_peaks(&y.samples, fs, threshold_factor);
    if peaks.is_empty() {
        return Err(Error::NoOscillation);
    }
    // Strongest first, then enforce the minimum separation.
    peaks.sort_by(|a, b| b.magnitude.partial_cmp(&a.magnitude).unwrap());
    let min_sep_rad_s = 2.0 * std::f64::consts::PI * min_sep_hz;
    let mut selected: Vec<&crate::spectrum::SpectralPeak> = Vec::new();
    for p in &peaks {
        if selected
            .iter()
            .all(|q| (p.freq_rad_s - q.freq_rad_s).abs() >= min_sep_rad_s)
        {
            selected.push(p);
        }
        if selected.len() == l_max {
            break;
        }
    }
    selected.sort_by(|a, b| a.freq_rad_s.partial_cmp(&b.freq_rad_s).unwrap());

    let n_modes = selected.len();
    let mut x0 = DVector::zeros(4 * n_modes);
    let mut peak_freqs = Vec::with_capacity(n_modes);
    for (l, p) in selected.iter().enumerate() {
        let b = 4 * l;
        x0[b] = p.amplitude * p.phase_rad.cos();
        x0[b + 1] = -p.amplitude * p.phase_rad.sin();
        x0[b + 2] = p.freq_rad_s;
        x0[b + 3] = 0.0;
        peak_freqs.push(p.freq_rad_s);
    }
    Ok(FftInit {
        n_modes,
        x0,
        p0: default_p0(n_modes),
        peak_freqs_rad_s: peak_freqs,
    })
}

/// Configuration of the end-to-end pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Sifting parameters for the decomposition stage.
    pub emd: EmdConfig,
    /// DC/trend cutoff for the IMF sum, Hz.
    pub dc_cutoff_hz: f64,
    /// End-trim fraction used when classifying IMFs.
    pub trim_frac: f64,
    /// Maximum number of modes the trigger may initialize. One slot above
    /// the expected mode count is useful: a spare mode absorbs leftover
    /// transient energy instead of corrupting the real ones.
    pub l_max: usize,
    /// Minimum spectral peak separation, Hz.
    pub min_sep_hz: f64,
    /// Peak threshold as a multiple of the median spectral magnitude.
    pub peak_threshold_factor: f64,
    /// Process noise scale; `Q = q_scale · diag(q_weights)` per mode.
    pub q_scale: f64,
    /// Relative process-noise weights for `(x^c, x^s, x^ω, x^σ)`.
    pub q_weights: [f64; 4],
    /// Measurement variance.
    pub r: f64,
    /// Joseph-form covariance update.
    pub robust_cov: bool,
    /// Huber innovation deweighting threshold (standard deviations).
    pub huber_k: Option<f64>,
    /// Explicit initialization bypassing the FFT trigger.
    pub init_override: Option<FftInit>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            emd: EmdConfig::default(),
            dc_cutoff_hz: 0.1,
            trim_frac: 0.05,
            l_max: 3,
            min_sep_hz: 0.3,
            peak_threshold_factor: 4.0,
            q_scale: 1e-9,
            q_weights: [1.0, 1.0, 1.0, 1.0],
            r: 1e-3,
            robust_cov: true,
            huber_k: Some(2.0),
            init_override: None,
        }
    }
}

impl PipelineConfig {
    /// Builds the per-run filter configuration for a given initialization.
    pub fn ekf_config(&self, init: &FftInit, fs: f64) -> EkfConfig {
        let dim = 4 * init.n_modes;
        let mut q = DMatrix::zeros(dim, dim);
        for l in 0..init.n_modes {
            for i in 0..4 {
                q[(4 * l + i, 4 * l + i)] = self.q_scale * self.q_weights[i];
            }
        }
        EkfConfig {
            n_modes: init.n_modes,
            q,
            r: self.r,
            x0: init.x0.clone(),
            p0: init.p0.clone(),
            fs,
            robust_cov: self.robust_cov,
            huber_k: self.huber_k,
        }
    }
}

/// Full pipeline result.
#[derive(Debug, Clone)]
pub struct HhtEkfResult {
    /// Filter output over the detrended signal.
    pub trace: ModeTrace,
    /// The initialization that seeded the filter.
    pub init: FftInit,
    /// The filter input: sum of all non-DC IMFs.
    pub detrended: Vec<f64>,
    /// Discarded trend: residue plus DC-tagged IMFs.
    pub trend: Vec<f64>,
}

/// End-to-end tracker: decompose, drop the DC/trend content, trigger the
/// initializer on the IMF sum, then filter it. Errors carry the name of
/// the failing stage.
pub fn run_hht_ekf(y: &TimeSeries, cfg: &PipelineConfig) -> Result<HhtEkfResult> {
    let fs = y.sample_rate_hz;
    let dec = emd(y, &cfg.emd);

    // Split IMFs into oscillatory content and DC/trend.
    let dc_cutoff_rad_s = 2.0 * std::f64::consts::PI * cfg.dc_cutoff_hz;
    let mut detrended = vec![0.0; y.len()];
    let mut trend = dec.residue.clone();
    let mut kept_any = false;
    for imf in &dec.imfs {
        let z = analytic_signal(&imf.samples).map_err(|e| e.at_stage("dc-separation"))?;
        let tr =
            instantaneous(&z, fs, cfg.trim_frac).map_err(|e| e.at_stage("dc-separation"))?;
        if tr.mean_interior_freq() >= dc_cutoff_rad_s {
            for (d, v) in detrended.iter_mut().zip(&imf.samples) {
                *d += v;
            }
            kept_any = true;
        } else {
            for (t, v) in trend.iter_mut().zip(&imf.samples) {
                *t += v;
            }
        }
    }
    if !kept_any {
        return Err(Error::NoOscillation.at_stage("dc-separation"));
    }

    let input = y.with_samples(detrended.clone());
    let init = match &cfg.init_override {
        Some(init) => init.clone(),
        None => initialize_from_fft(&input, cfg.l_max, cfg.min_sep_hz, cfg.peak_threshold_factor)
            .map_err(|e| e.at_stage("fft-init"))?,
    };
    let ekf_cfg = cfg.ekf_config(&init, fs);
    let trace = filter(&input, &ekf_cfg).map_err(|e| e.at_stage("filter"))?;
    Ok(HhtEkfResult {
        trace,
        init,
        detrended,
        trend,
    })
}
