//! Error type shared by every stage of the analysis pipeline.

use thiserror::Error;

/// Errors produced by signal generation, decomposition, spectral analysis,
/// filtering, and scoring.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation before any computation started.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The input is shorter than the operation's minimum length.
    #[error("input too short: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    /// A requested mode frequency is at or above the Nyquist limit.
    #[error("frequency {freq_rad_s} rad/s is at or above Nyquist ({nyquist_rad_s} rad/s)")]
    AboveNyquist { freq_rad_s: f64, nyquist_rad_s: f64 },

    /// Sifting was asked to continue on a signal with too few extrema.
    #[error("residue reached: fewer than two maxima or two minima remain")]
    ResidueReached,

    /// A spline envelope was requested with fewer than two knots.
    #[error("envelope needs at least 2 knots, got {0}")]
    TooFewKnots(usize),

    /// The spectrum trigger found no peak above the detection threshold.
    #[error("no oscillation detected: no spectral peak above threshold")]
    NoOscillation,

    /// The analytic signal magnitude vanished where a phase was needed.
    #[error("zero magnitude at sample {0}: instantaneous phase undefined")]
    ZeroMagnitude(usize),

    /// The filter state or covariance became non-finite.
    #[error("filter diverged at sample {sample}: non-finite state or covariance")]
    Divergence { sample: usize },

    /// Two sequences that must align have different lengths.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// A pipeline stage failed; the stage name locates the failure.
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Wraps the error with the name of the pipeline stage it came from.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
