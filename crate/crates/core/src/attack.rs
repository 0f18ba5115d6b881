//! Index-based attacks that localize a long repeated pattern from a shared
//! matrix profile alone.
//!
//! Every window of `attack_length` profile positions gets a significance
//! score; the best window is the first instance. The second instance is the
//! centroid of the most populated histogram bucket of the nearest-neighbor
//! indices inside that window.
//!
//! The attacks read only the profile's distances and indices, never the
//! underlying series.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::MatrixProfile;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreVariant {
    /// Longest run of near-consecutive indices in the window.
    Location,
    /// Negative entropy of the bucketed indices in the window.
    Entropy,
    /// Negated sum of distances in the window.
    DistSum,
}

impl ScoreVariant {
    pub const PROPOSED: [ScoreVariant; 2] = [ScoreVariant::Location, ScoreVariant::Entropy];

    pub fn name(self) -> &'static str {
        match self {
            ScoreVariant::Location => "location",
            ScoreVariant::Entropy => "entropy",
            ScoreVariant::DistSum => "distsum",
        }
    }
}

impl fmt::Display for ScoreVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "location" => Ok(ScoreVariant::Location),
            "entropy" => Ok(ScoreVariant::Entropy),
            "distsum" => Ok(ScoreVariant::DistSum),
            other => Err(Error::Config(format!("unknown score variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub attack_length: usize,
    pub variant: ScoreVariant,
    pub bin_width: usize,
    /// Successive indices closer than this count as consecutive.
    pub tolerance: usize,
}

impl AttackConfig {
    /// Bucket width and run tolerance both default to the attack length.
    pub fn new(attack_length: usize, variant: ScoreVariant) -> Self {
        Self {
            attack_length,
            variant,
            bin_width: attack_length,
            tolerance: attack_length,
        }
    }

    pub fn with_bin_width(mut self, bin_width: usize) -> Self {
        self.bin_width = bin_width;
        self
    }

    pub fn with_tolerance(mut self, tolerance: usize) -> Self {
        self.tolerance = tolerance;
        self
    }

    fn validate(&self, window: usize, profile_len: usize) -> Result<()> {
        if self.bin_width == 0 || self.tolerance == 0 {
            return Err(Error::Config("bin width and tolerance must be positive".into()));
        }
        if self.attack_length <= window {
            return Err(Error::Config(format!(
                "attack length {} must exceed the profile's subsequence length {window}",
                self.attack_length
            )));
        }
        if self.attack_length > profile_len {
            return Err(Error::Config(format!(
                "attack length {} exceeds profile length {profile_len}",
                self.attack_length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackResult {
    pub idx1: usize,
    pub idx2: usize,
    pub variant: ScoreVariant,
    pub score_max: f64,
    /// Score of every window start, higher is more pattern-like.
    pub score_trace: Vec<f64>,
}

/// Length of the longest run of positions in `window` whose successive
/// indices differ by less than `tolerance`.
pub fn location_score(window: &[usize], tolerance: usize) -> usize {
    if window.is_empty() {
        return 0;
    }
    let (mut best, mut run) = (1, 1);
    for pair in window.windows(2) {
        if pair[0].abs_diff(pair[1]) < tolerance {
            run += 1;
            best = best.max(run);
        } else {
            run = 1;
        }
    }
    best
}

/// `-H` of the indices bucketed by `floor(v / bin_width)`, natural log.
/// Zero when every index shares a bucket.
pub fn entropy_score(window: &[usize], bin_width: usize) -> f64 {
    let mut buckets: Vec<usize> = window.iter().map(|v| v / bin_width.max(1)).collect();
    buckets.sort_unstable();
    neg_entropy_of_sorted(&buckets)
}

fn neg_entropy_of_sorted(buckets: &[usize]) -> f64 {
    let n = buckets.len() as f64;
    let mut h = 0.0;
    for run in buckets.chunk_by(|a, b| a == b) {
        let p = run.len() as f64 / n;
        h -= p * p.ln();
    }
    -h
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalFrequency {
    pub centroid: usize,
    /// Bucket number to count.
    pub histogram: BTreeMap<usize, usize>,
}

/// Histogram of `pool` in buckets of `bin_width`; the centroid is the mean of
/// the raw values in the most populated bucket (lowest bucket on ties),
/// rounded half away from zero.
pub fn interval_frequency(pool: &[usize], bin_width: usize) -> Result<IntervalFrequency> {
    if pool.is_empty() {
        return Err(Error::Config("empty index pool".into()));
    }
    let width = bin_width.max(1);
    let mut histogram = BTreeMap::new();
    for &v in pool {
        *histogram.entry(v / width).or_insert(0usize) += 1;
    }
    let mut top = (usize::MAX, 0);
    for (&bucket, &count) in &histogram {
        if count > top.1 {
            top = (bucket, count);
        }
    }
    let sum: u128 = pool
        .iter()
        .filter(|&&v| v / width == top.0)
        .map(|&v| v as u128)
        .sum();
    let centroid = (sum as f64 / top.1 as f64).round() as usize;
    Ok(IntervalFrequency {
        centroid,
        histogram,
    })
}

/// Scores every window start of the profile for the configured variant.
pub fn score_windows<T: Scalar>(mp: &MatrixProfile<T>, cfg: &AttackConfig) -> Vec<f64> {
    let len = cfg.attack_length;
    let mpi = mp.mpi();
    match cfg.variant {
        ScoreVariant::Location => {
            // Runs over step flags: a window of `len` positions holds `len - 1` steps.
            let steps: Vec<bool> = mpi.windows(2).map(|p| p[0].abs_diff(p[1]) < cfg.tolerance).collect();
            (0..=mpi.len() - len)
                .map(|s| {
                    let mut best = 0;
                    let mut run = 0;
                    for &close in &steps[s..s + len - 1] {
                        run = if close { run + 1 } else { 0 };
                        best = best.max(run);
                    }
                    (best + 1) as f64
                })
                .collect()
        }
        ScoreVariant::Entropy => {
            let buckets: Vec<usize> = mpi.iter().map(|v| v / cfg.bin_width).collect();
            let mut scratch = Vec::with_capacity(len);
            (0..=mpi.len() - len)
                .map(|s| {
                    scratch.clear();
                    scratch.extend_from_slice(&buckets[s..s + len]);
                    scratch.sort_unstable();
                    neg_entropy_of_sorted(&scratch)
                })
                .collect()
        }
        ScoreVariant::DistSum => mp
            .mpd()
            .windows(len)
            .map(|w| -w.iter().map(|d| d.to_f64_lossy()).sum::<f64>())
            .collect(),
    }
}

pub fn run_attack<T: Scalar>(mp: &MatrixProfile<T>, cfg: &AttackConfig) -> Result<AttackResult> {
    cfg.validate(mp.window(), mp.len())?;
    let trace = score_windows(mp, cfg);
    let mut idx1 = 0;
    for (s, &score) in trace.iter().enumerate() {
        if score > trace[idx1] {
            idx1 = s;
        }
    }
    let pool = &mp.mpi()[idx1..idx1 + cfg.attack_length];
    let freq = interval_frequency(pool, cfg.bin_width)?;
    // The second window must fit the profile like the first.
    let idx2 = freq.centroid.min(mp.len() - cfg.attack_length);
    Ok(AttackResult {
        idx1,
        idx2,
        variant: cfg.variant,
        score_max: trace[idx1],
        score_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn location_examples() {
        assert_eq!(location_score(&[100, 101, 102, 103], 4), 4);
        assert_eq!(location_score(&[5, 900, 12, 700], 2), 1);
        assert_eq!(location_score(&[], 2), 0);
        assert_eq!(location_score(&[1, 2, 50, 51, 52, 53, 9], 5), 4);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy_score(&[3, 4, 5, 99], 100), 0.0);
        let k4 = entropy_score(&[0, 100, 200, 300], 100);
        assert!((k4 + 4f64.ln()).abs() < 1e-12);
        let mixed = entropy_score(&[10, 11, 10, 500], 100);
        let h = -(0.75f64 * 0.75f64.ln()) - 0.25 * 0.25f64.ln();
        assert!((mixed + h).abs() < 1e-12);
        assert!((mixed + 0.5623).abs() < 1e-4);
    }

    #[test]
    fn interval_frequency_examples() {
        let f = interval_frequency(&[700, 701, 702, 50], 100).unwrap();
        assert_eq!(f.centroid, 701);
        assert_eq!(f.histogram[&7], 3);
        assert_eq!(interval_frequency(&[42; 9], 10).unwrap().centroid, 42);
        // Tie between buckets 0 and 5: the lower bucket wins.
        assert_eq!(interval_frequency(&[1, 2, 500, 503], 100).unwrap().centroid, 2);
        // 1.5 rounds away from zero.
        assert_eq!(interval_frequency(&[1, 2], 100).unwrap().centroid, 2);
        assert!(interval_frequency(&[], 10).is_err());
    }

    fn profile(mpi: Vec<usize>, window: usize) -> MatrixProfile<f64> {
        let n = mpi.len() + window - 1;
        let mpd = vec![1.0; mpi.len()];
        MatrixProfile::from_parts(mpd, mpi, window, n).unwrap()
    }

    #[test]
    fn finds_planted_run() {
        // Positions 40..60 point consecutively at 200..220; elsewhere indices jump.
        let mut mpi: Vec<usize> = (0..300).map(|i| (i * 7919) % 290).collect();
        for k in 0..20 {
            mpi[40 + k] = 200 + k;
        }
        let mp = profile(mpi, 4);
        let cfg = AttackConfig::new(20, ScoreVariant::Location).with_tolerance(3);
        let r = run_attack(&mp, &cfg).unwrap();
        assert_eq!(r.idx1, 40);
        assert_eq!(r.score_max, 20.0);
        assert_eq!(r.score_trace.len(), 300 - 20 + 1);
        assert!((200..=220).contains(&r.idx2), "{}", r.idx2);

        let r = run_attack(&mp, &AttackConfig::new(20, ScoreVariant::Entropy)).unwrap();
        assert_eq!(r.idx1, 40);
        assert_eq!(r.score_max, 0.0);
    }

    #[test]
    fn distsum_prefers_low_distances() {
        let mpi: Vec<usize> = (0..50).map(|i| (i + 25) % 50).collect();
        let mut mpd = vec![3.0; 50];
        for d in &mut mpd[30..40] {
            *d = 0.5;
        }
        let mp = MatrixProfile::from_parts(mpd, mpi, 3, 52).unwrap();
        let r = run_attack(&mp, &AttackConfig::new(10, ScoreVariant::DistSum)).unwrap();
        assert_eq!(r.idx1, 30);
        assert_eq!(r.score_max, -5.0);
    }

    #[test]
    fn config_errors() {
        let mp = profile((0..30).rev().collect(), 8);
        assert!(run_attack(&mp, &AttackConfig::new(8, ScoreVariant::Location)).is_err());
        assert!(run_attack(&mp, &AttackConfig::new(31, ScoreVariant::Location)).is_err());
        assert!(run_attack(&mp, &AttackConfig::new(10, ScoreVariant::Entropy).with_bin_width(0)).is_err());
    }

    #[test]
    fn idx2_is_clamped_into_range() {
        let mut mpi = vec![0usize; 40];
        for (i, v) in mpi.iter_mut().enumerate() {
            *v = 39 - (i % 3);
        }
        let mp = profile(mpi, 2);
        let r = run_attack(&mp, &AttackConfig::new(10, ScoreVariant::Entropy)).unwrap();
        assert!(r.idx2 <= 30);
    }

    #[test]
    fn variant_parsing() {
        for v in [ScoreVariant::Location, ScoreVariant::Entropy, ScoreVariant::DistSum] {
            assert_eq!(v.name().parse::<ScoreVariant>().unwrap(), v);
        }
        assert!("nope".parse::<ScoreVariant>().is_err());
    }
}
