//! Matrix profile computation, index-based attacks that localize long
//! sensitive patterns from a shared profile, and the PatternHide defense
//! that produces a privacy-aware matrix profile (PMP).
//!
//! The numeric core ([`series`], [`profile`], [`defense`]) is generic over the
//! floating point type through [`Scalar`]. The experiment harness in
//! [`synth`] and the file formats in [`io`] work in `f64`; the aliases at the
//! bottom of this file name the `f64` instantiations used there.
//!
//! All indices are 0-based. A matrix profile of subsequence length `l` over a
//! series of length `n` has `n - l + 1` entries.

pub mod attack;
pub mod defense;
pub mod error;
pub mod io;
pub mod profile;
pub mod scalar;
pub mod series;
pub mod synth;

pub use attack::{run_attack, AttackConfig, AttackResult, ScoreVariant};
pub use defense::{fake_cycle_link, pattern_hide, DefenseConfig, DefenseOutcome, ThresholdDraw};
pub use error::{Error, Result};
pub use profile::{compute_masked_mp, compute_mp, mp_oracle, MaskSet};
pub use scalar::Scalar;
pub use series::{RollingStats, SubsequenceRef};

/// Time series of `f64` samples.
pub type TimeSeries = series::TimeSeries<f64>;
/// Matrix profile with `f64` distances.
pub type MatrixProfile = profile::MatrixProfile<f64>;
/// Rolling window statistics in `f64`.
pub type Stats = series::RollingStats<f64>;

/// Single-precision time series.
pub type TimeSeriesF32 = series::TimeSeries<f32>;
/// Single-precision matrix profile.
pub type MatrixProfileF32 = profile::MatrixProfile<f32>;
