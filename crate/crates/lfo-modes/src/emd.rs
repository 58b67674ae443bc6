//! Empirical mode decomposition: extrema detection, natural-spline
//! envelopes, sifting with the standard-deviation stopping rule, mirror
//! extension at the record ends, and the masking-signal enhancement for
//! closely spaced tones.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::NaturalCubicSpline;
use crate::types::TimeSeries;

/// Tuning knobs for the sifting loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdConfig {
    /// Stopping threshold on SD = Σ(h_prev − h)² / Σ h_prev² between
    /// consecutive sift iterates.
    pub sd_threshold: f64,
    /// Hard cap on sift iterations per IMF.
    pub max_sift_iters: usize,
    /// Hard cap on the number of IMFs extracted.
    pub max_imfs: usize,
    /// Extraction stops once the residue RMS falls below this fraction of
    /// the input RMS; without it, numerically negligible wiggles left over
    /// from sifting get promoted to spurious IMFs.
    pub energy_tol: f64,
}

impl Default for EmdConfig {
    fn default() -> Self {
        EmdConfig {
            sd_threshold: 0.2,
            max_sift_iters: 64,
            max_imfs: 16,
            energy_tol: 0.01,
        }
    }
}

/// One intrinsic mode function from a decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imf {
    /// Component samples, same length as the source signal.
    pub samples: Vec<f64>,
    /// Ordinal position, 1 = highest frequency (first extracted).
    pub index: usize,
    /// Whether sifting hit the SD threshold before the iteration cap.
    pub converged: bool,
    /// Whether |#extrema − #zero crossings| ≤ 1 held at acceptance.
    pub satisfies_imf_property: bool,
}

/// Result of a full decomposition: ordered IMFs plus the final residue.
/// The components reconstruct the input exactly up to rounding, since each
/// IMF is literally subtracted from the running residue.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub imfs: Vec<Imf>,
    pub residue: Vec<f64>,
}

impl Decomposition {
    /// Σ IMFs + residue, for reconstruction checks and trend reporting.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut out = self.residue.clone();
        for imf in &self.imfs {
            for (o, v) in out.iter_mut().zip(&imf.samples) {
                *o += v;
            }
        }
        out
    }
}

/// Finds interior extrema. A maximum strictly exceeds both flanks; a flat
/// run that is higher (lower) than both flanks counts once, at its
/// midpoint, so spline knots are never duplicated.
pub fn find_extrema(x: &[f64]) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = x.len();
    if n < 3 {
        return Err(Error::TooShort { len: n, min: 3 });
    }
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if x[i] > x[i - 1] {
            // Walk to the end of a possible plateau at this height.
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] < x[i] {
                maxima.push((i + j) / 2);
            }
            i = j + 1;
        } else if x[i] < x[i - 1] {
            let mut j = i;
            while j + 1 < n && x[j + 1] == x[i] {
                j += 1;
            }
            if j + 1 < n && x[j + 1] > x[i] {
                minima.push((i + j) / 2);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    Ok((maxima, minima))
}

/// Even-symmetric mirror extension: prepends the reversal of
/// `x[1..=n_ext]` and appends the reversal of `x[len−n_ext−1..len−1]`.
pub fn mirror_extend(x: &[f64], n_ext: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n_ext > n.saturating_sub(1) {
        return Err(Error::InvalidInput(format!(
            "mirror extension {n_ext} exceeds signal length {n} minus one"
        )));
    }
    let mut out = Vec::with_capacity(n + 2 * n_ext);
    out.extend(x[1..=n_ext].iter().rev());
    out.extend_from_slice(x);
    out.extend(x[n - n_ext - 1..n - 1].iter().rev());
    Ok(out)
}

/// Natural cubic spline through `(i, x[i])` for the given knot indices,
/// evaluated at every sample index of `x`.
pub fn envelope(x: &[f64], knots: &[usize]) -> Result<Vec<f64>> {
    if knots.len() < 2 {
        return Err(Error::TooFewKnots(knots.len()));
    }
    let xs: Vec<f64> = knots.iter().map(|&i| i as f64).collect();
    let ys: Vec<f64> = knots.iter().map(|&i| x[i]).collect();
    let spline = NaturalCubicSpline::fit(&xs, &ys)?;
    Ok(spline.sample_indices(x.len()))
}

/// Mirror-extension length: long enough to anchor the end splines (about
/// two periods of the dominant oscillation, with the period estimated as
/// twice the mean extrema spacing) but never more than a quarter record.
fn extension_len(x: &[f64]) -> usize {
    let n = x.len();
    let cap = (n / 4).min(n.saturating_sub(1));
    let Ok((maxima, minima)) = find_extrema(x) else {
        return cap;
    };
    let mut ext: Vec<usize> = maxima.iter().chain(&minima).copied().collect();
    ext.sort_unstable();
    if ext.len() < 2 {
        return cap;
    }
    let spacing = (ext[ext.len() - 1] - ext[0]) as f64 / (ext.len() - 1) as f64;
    ((4.0 * spacing) as usize).clamp(2, cap.max(2)).min(cap)
}

/// Mean of the upper and lower spline envelopes of `x`, computed on the
/// mirror-extended signal and cropped back to the core; `None` when either
/// envelope has too few extrema to fit.
fn mean_envelope(x: &[f64], n_ext: usize) -> Option<Vec<f64>> {
    let extended = mirror_extend(x, n_ext).ok()?;
    let (maxima, minima) = find_extrema(&extended).ok()?;
    if maxima.len() < 2 || minima.len() < 2 {
        return None;
    }
    let upper = envelope(&extended, &maxima).ok()?;
    let lower = envelope(&extended, &minima).ok()?;
    let n = x.len();
    Some(
        (0..n)
            .map(|k| 0.5 * (upper[k + n_ext] + lower[k + n_ext]))
            .collect(),
    )
}

/// Counts strict sign changes, skipping exact zeros.
fn zero_crossings(x: &[f64]) -> usize {
    let mut count = 0;
    let mut last_sign = 0i8;
    for &v in x {
        let s = if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        };
        if s != 0 {
            if last_sign != 0 && s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
    }
    count
}

/// Outcome of sifting one candidate IMF out of a signal.
#[derive(Debug, Clone)]
pub struct SiftOutcome {
    pub samples: Vec<f64>,
    pub converged: bool,
    pub satisfies_imf_property: bool,
}

/// Repeatedly subtracts the mean envelope until the SD criterion drops
/// below the threshold or the iteration cap is hit.
pub fn sift(x: &[f64], cfg: &EmdConfig) -> Result<SiftOutcome> {
    let (maxima, minima) = find_extrema(x)?;
    if maxima.len() < 2 || minima.len() < 2 {
        return Err(Error::ResidueReached);
    }
    let n_ext = extension_len(x);
    let mut h = x.to_vec();
    let mut converged = false;
    for _ in 0..cfg.max_sift_iters {
        let Some(mean) = mean_envelope(&h, n_ext) else {
            // Envelopes collapsed mid-sift; the current iterate is the best
            // available candidate.
            break;
        };
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..h.len() {
            num += mean[k] * mean[k];
            den += h[k] * h[k];
            h[k] -= mean[k];
        }
        let sd = num / den.max(1e-300);
        if sd < cfg.sd_threshold {
            converged = true;
            break;
        }
    }
    let satisfies = match find_extrema(&h) {
        Ok((mx, mn)) => {
            let n_ext_pts = mx.len() + mn.len();
            let n_zc = zero_crossings(&h);
            n_ext_pts.abs_diff(n_zc) <= 1
        }
        Err(_) => false,
    };
    Ok(SiftOutcome {
        samples: h,
        converged,
        satisfies_imf_property: satisfies,
    })
}

/// Full decomposition: extracts IMFs until the residue has too few extrema
/// or the IMF cap is reached. Degenerate inputs (monotone, constant) give
/// zero IMFs with residue equal to the input.
fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn emd(x: &TimeSeries, cfg: &EmdConfig) -> Decomposition {
    let mut residue = x.samples.clone();
    let mut imfs = Vec::new();
    let input_rms = rms(&x.samples);
    while imfs.len() < cfg.max_imfs {
        if rms(&residue) < cfg.energy_tol * input_rms {
            break;
        }
        let outcome = match sift(&residue, cfg) {
            Ok(o) => o,
            Err(_) => break,
        };
        for (r, h) in residue.iter_mut().zip(&outcome.samples) {
            *r -= h;
        }
        imfs.push(Imf {
            samples: outcome.samples,
            index: imfs.len() + 1,
            converged: outcome.converged,
            satisfies_imf_property: outcome.satisfies_imf_property,
        });
    }
    Decomposition { imfs, residue }
}

/// Masking-signal first IMF: decomposes `x + m` and `x − m` with
/// `m[k] = mask_amp·sin(mask_freq·k/fs)` and averages the two first IMFs,
/// cancelling the mask up to sifting nonlinearity. A zero amplitude
/// degrades gracefully to the plain first IMF.
pub fn masking_emd(
    x: &TimeSeries,
    mask_freq_rad_s: f64,
    mask_amp: f64,
    cfg: &EmdConfig,
) -> Result<Vec<f64>> {
    let nyquist = std::f64::consts::PI * x.sample_rate_hz;
    if !(mask_freq_rad_s.is_finite() && mask_freq_rad_s < nyquist) {
        return Err(Error::AboveNyquist {
            freq_rad_s: mask_freq_rad_s,
            nyquist_rad_s: nyquist,
        });
    }
    if !(mask_amp.is_finite() && mask_amp >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "mask amplitude must be non-negative, got {mask_amp}"
        )));
    }
    let fs = x.sample_rate_hz;
    let first_imf = |samples: Vec<f64>| -> Result<Vec<f64>> {
        let ts = x.with_samples(samples);
        let one = EmdConfig { max_imfs: 1, ..*cfg };
        let dec = emd(&ts, &one);
        dec.imfs
            .into_iter()
            .next()
            .map(|imf| imf.samples)
            .ok_or(Error::ResidueReached)
    };
    let mask: Vec<f64> = (0..x.len())
        .map(|k| mask_amp * (mask_freq_rad_s * k as f64 / fs).sin())
        .collect();
    let plus: Vec<f64> = x.samples.iter().zip(&mask).map(|(v, m)| v + m).collect();
    let minus: Vec<f64> = x.samples.iter().zip(&mask).map(|(v, m)| v - m).collect();
    let a = first_imf(plus)?;
    let b = first_imf(minus)?;
    Ok(a.iter().zip(&b).map(|(u, v)| 0.5 * (u + v)).collect())
}
