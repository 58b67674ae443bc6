//! Core value types passed between the pipeline stages.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled real-valued signal.
///
/// This is the universal currency between modules: generators produce it,
/// decomposition and filtering consume it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    /// Sample values, in signal units.
    pub samples: Vec<f64>,
    /// Sampling rate in Hz (> 0, finite).
    pub sample_rate_hz: f64,
    /// Sample offset of the first element (0 for freshly generated data).
    pub start_index: i64,
}

impl TimeSeries {
    /// Builds a series after validating the invariants: non-empty samples,
    /// positive finite rate, all values finite.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("samples must be non-empty".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample_rate_hz must be positive and finite, got {sample_rate_hz}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "sample {i} is not finite"
            )));
        }
        Ok(TimeSeries {
            samples,
            sample_rate_hz,
            start_index: 0,
        })
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// True when the series holds no samples (never true for validated series).
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of sample `k` in seconds, accounting for the start offset.
    pub fn time_at(&self, k: usize) -> f64 {
        (self.start_index + k as i64) as f64 / self.sample_rate_hz
    }

    /// A copy with the same rate and offset but different samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Self {
        TimeSeries {
            samples,
            sample_rate_hz: self.sample_rate_hz,
            start_index: self.start_index,
        }
    }
}
