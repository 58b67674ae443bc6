//! Detection and tracking of low-frequency oscillation modes in sampled
//! measurements.
//!
//! The crate implements a decomposition-plus-filtering pipeline for
//! ringdown-style signals such as power-system measurements after a
//! disturbance:
//!
//! 1. [`emd`] — empirical mode decomposition with mirror-extension end
//!    handling and an optional masking signal for closely spaced tones;
//! 2. [`hilbert`] — analytic-signal construction and instantaneous
//!    frequency/amplitude/damping extraction (the classic HHT trackers);
//! 3. [`ekf`] — a per-mode rotating-phasor state model with random-walk
//!    frequency and damping, tracked by an extended Kalman filter seeded
//!    from an FFT trigger;
//! 4. [`signalgen`] and [`eval`] — seedable benchmark generators and a
//!    deterministic Monte Carlo harness comparing the trackers.
//!
//! All analysis operations are pure functions over immutable values and
//! are safe to run concurrently on independent inputs.

pub mod ekf;
pub mod emd;
pub mod error;
pub mod eval;
pub mod hilbert;
pub mod signalgen;
pub mod spectrum;
pub mod spline;
pub mod types;

pub use error::{Error, Result};
pub use types::TimeSeries;
