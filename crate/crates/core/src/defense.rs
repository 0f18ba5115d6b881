//! PatternHide: turns a matrix profile into a privacy-aware matrix profile
//! (PMP) by breaking long runs of consecutive nearest-neighbor indices.
//!
//! A consecutive index block (CIB) is a maximal run of positions whose
//! successive indices differ by less than the attack length. Every CIB longer
//! than `perm_length`, together with the CIBs starting within one attack
//! length of it, forms a sensitive segment. Inside each segment a mask of
//! forbidden neighbors grows whenever the current run exceeds a random
//! threshold, and the remainder of the segment is replaced with the masked
//! profile. Finally, symmetric index pairs get equal (minimum) distances.
//!
//! By default the threshold is redrawn after each replacement and segments
//! are processed one per seed CIB, in seed order, even where they overlap.
//! [`ThresholdDraw::EveryPosition`] and [`DefenseConfig::merge_segments`]
//! select the stricter variants; on long random-walk backgrounds those
//! exhaust the mask and fail with [`Error::InfeasibleMask`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{exclusion_radius, masked_row_argmin, MatrixProfile};
use crate::scalar::Scalar;
use crate::series::{rolling_stats, RowProfiler, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cib {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
}

impl Cib {
    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensitiveSegment {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub contributing_cibs: Vec<Cib>,
}

impl SensitiveSegment {
    pub fn contains(&self, i: usize) -> bool {
        (self.start..=self.end).contains(&i)
    }
}

/// When the random run-length threshold is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdDraw {
    /// Once per segment and again after every replacement.
    #[default]
    AfterTrigger,
    /// Before every position.
    EveryPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefenseConfig {
    pub attack_length: usize,
    pub perm_length: usize,
    pub seed: u64,
    pub threshold_draw: ThresholdDraw,
    /// Merge overlapping segments before processing.
    pub merge_segments: bool,
}

impl DefenseConfig {
    /// `perm_length` defaults to a quarter of the utility length.
    pub fn new(utility_length: usize, attack_length: usize, seed: u64) -> Self {
        Self {
            attack_length,
            perm_length: (utility_length / 4).max(1),
            seed,
            threshold_draw: ThresholdDraw::AfterTrigger,
            merge_segments: false,
        }
    }

    pub fn with_perm_length(mut self, perm_length: usize) -> Self {
        self.perm_length = perm_length;
        self
    }

    pub fn with_threshold_draw(mut self, draw: ThresholdDraw) -> Self {
        self.threshold_draw = draw;
        self
    }

    pub fn with_merged_segments(mut self, merge: bool) -> Self {
        self.merge_segments = merge;
        self
    }

    fn validate(&self, window: usize) -> Result<()> {
        if self.perm_length == 0 {
            return Err(Error::Config("perm length must be at least 1".into()));
        }
        if self.attack_length <= window {
            return Err(Error::Config(format!(
                "attack length {} must exceed the utility length {window}",
                self.attack_length
            )));
        }
        Ok(())
    }
}

#[inline]
fn consecutive(a: usize, b: usize, attack_length: usize) -> bool {
    a.abs_diff(b) < attack_length
}

/// Maximal partition of `[0, mpi.len())` into consecutive index blocks.
pub fn get_cibs(mpi: &[usize], attack_length: usize) -> Vec<Cib> {
    let mut cibs = Vec::new();
    if mpi.is_empty() {
        return cibs;
    }
    let mut start = 0;
    for i in 1..mpi.len() {
        if !consecutive(mpi[i - 1], mpi[i], attack_length) {
            cibs.push(Cib { start, end: i - 1 });
            start = i;
        }
    }
    cibs.push(Cib {
        start,
        end: mpi.len() - 1,
    });
    cibs
}

/// Length of the consecutive run ending at `idx`, counting `idx` itself.
pub fn consecutive_idx_count(mpi: &[usize], idx: usize, attack_length: usize) -> usize {
    let mut k = idx;
    while k > 0 && consecutive(mpi[k - 1], mpi[k], attack_length) {
        k -= 1;
    }
    idx - k + 1
}

/// One sensitive segment per CIB longer than `perm_length`, spanning that
/// seed and its neighbors (CIBs whose start lies within `attack_length` of
/// the seed's start). Ordered by seed; segments may overlap.
pub fn sensitive_segments(cibs: &[Cib], perm_length: usize, attack_length: usize) -> Vec<SensitiveSegment> {
    cibs.iter()
        .filter(|c| c.len() > perm_length)
        .map(|seed| {
            let members: Vec<Cib> = cibs
                .iter()
                .filter(|c| c.start.abs_diff(seed.start) < attack_length)
                .copied()
                .collect();
            SensitiveSegment {
                start: members.iter().map(|c| c.start).min().unwrap_or(seed.start),
                end: members.iter().map(|c| c.end).max().unwrap_or(seed.end),
                contributing_cibs: members,
            }
        })
        .collect()
}

/// Merges overlapping segments (which arrive sorted by start).
pub fn merge_segments(segments: Vec<SensitiveSegment>) -> Vec<SensitiveSegment> {
    let mut merged: Vec<SensitiveSegment> = Vec::with_capacity(segments.len());
    for seg in segments {
        match merged.last_mut() {
            Some(last) if seg.start <= last.end => {
                last.end = last.end.max(seg.end);
                for c in seg.contributing_cibs {
                    if !last.contributing_cibs.contains(&c) {
                        last.contributing_cibs.push(c);
                    }
                }
            }
            _ => merged.push(seg),
        }
    }
    merged
}

#[derive(Debug, Clone)]
pub struct DefenseOutcome<T> {
    pub pmp: MatrixProfile<T>,
    pub segments: Vec<SensitiveSegment>,
    /// Number of mask insertions (replacement triggers) across all segments.
    pub triggers: usize,
    pub config: DefenseConfig,
}

/// Runs PatternHide on `mp`, which must have been computed from `series`.
///
/// A trigger at `idx` replaces every entry in `[idx, segment.end]` with the
/// masked profile under the current mask. Entries past the cursor are only
/// observed once the cursor reaches them and the mask only changes at
/// triggers, so each entry is computed when reached, under the mask of the
/// latest trigger. This yields the same output as recomputing the whole
/// tail at every trigger.
pub fn pattern_hide<T: Scalar>(
    series: &TimeSeries<T>,
    mp: &MatrixProfile<T>,
    cfg: &DefenseConfig,
) -> Result<DefenseOutcome<T>> {
    let window = mp.window();
    cfg.validate(window)?;
    if series.len() != mp.source_len() {
        return Err(Error::Config(format!(
            "profile was computed from a series of length {}, got {}",
            mp.source_len(),
            series.len()
        )));
    }
    let stats = rolling_stats(series, window)?;
    let count = mp.len();
    let radius = exclusion_radius(window);
    let mut segments = sensitive_segments(&get_cibs(mp.mpi(), cfg.attack_length), cfg.perm_length, cfg.attack_length);
    if cfg.merge_segments {
        segments = merge_segments(segments);
    }
    let every_position = cfg.threshold_draw == ThresholdDraw::EveryPosition;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = mp.clone();
    let mut rows = RowProfiler::new(series, &stats);
    let mut triggers = 0;
    {
        let (mpd, mpi) = out.parts_mut();
        for seg in &segments {
            let fail = |e: Error| Error::SegmentFailed {
                start: seg.start,
                end: seg.end,
                source: Box::new(e),
            };
            let mut banned = vec![false; count];
            let mut replaced = false;
            let mut threshold = rng.gen_range(0..=cfg.perm_length);
            for idx in seg.start..=seg.end {
                if replaced {
                    rows.seek(idx);
                    let (d, j) = masked_row_argmin(&rows, &banned, radius).map_err(fail)?;
                    mpd[idx] = d;
                    mpi[idx] = j;
                }
                if every_position && idx > seg.start {
                    threshold = rng.gen_range(0..=cfg.perm_length);
                }
                if consecutive_idx_count(mpi, idx, cfg.attack_length) > threshold {
                    let nn = mpi[idx];
                    let lo = nn.saturating_sub(window - 1);
                    let hi = (nn + window - 1).min(count - 1);
                    banned[lo..=hi].iter_mut().for_each(|b| *b = true);
                    replaced = true;
                    triggers += 1;
                    if !every_position {
                        threshold = rng.gen_range(0..=cfg.perm_length);
                    }
                    rows.seek(idx);
                    let (d, j) = masked_row_argmin(&rows, &banned, radius).map_err(fail)?;
                    mpd[idx] = d;
                    mpi[idx] = j;
                }
            }
        }
    }
    Ok(DefenseOutcome {
        pmp: fake_cycle_link(&out),
        segments,
        triggers,
        config: *cfg,
    })
}

/// Gives both members of every symmetric pair (`mpi[i] == j`, `mpi[j] == i`)
/// the smaller of their two distances.
pub fn fake_cycle_link<T: Scalar>(mp: &MatrixProfile<T>) -> MatrixProfile<T> {
    let mut out = mp.clone();
    let (mpd, mpi) = out.parts_mut();
    for i in 0..mpi.len() {
        let j = mpi[i];
        if j > i && mpi[j] == i && mpd[i] != mpd[j] {
            let m = mpd[i].min(mpd[j]);
            mpd[i] = m;
            mpd[j] = m;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::compute_mp;

    #[test]
    fn cib_examples() {
        assert_eq!(
            get_cibs(&[5, 6, 7, 100, 101], 10),
            vec![Cib { start: 0, end: 2 }, Cib { start: 3, end: 4 }]
        );
        assert_eq!(get_cibs(&[1, 2, 3, 4], 2), vec![Cib { start: 0, end: 3 }]);
        let alt = get_cibs(&[0, 500, 0, 500], 100);
        assert_eq!(alt.len(), 4);
        assert!(alt.iter().all(|c| c.len() == 1));
        assert!(get_cibs(&[], 3).is_empty());
    }

    #[test]
    fn count_examples() {
        let mpi = [10, 11, 12, 900];
        assert_eq!(consecutive_idx_count(&mpi, 2, 50), 3);
        assert_eq!(consecutive_idx_count(&mpi, 3, 50), 1);
        assert_eq!(consecutive_idx_count(&mpi, 0, 50), 1);
        let mut rewritten = mpi;
        rewritten[1] = 5000;
        assert_eq!(consecutive_idx_count(&rewritten, 2, 50), 1);
    }

    #[test]
    fn segments_merge_neighbors() {
        let cibs = [
            Cib { start: 0, end: 4 },
            Cib { start: 5, end: 5 },
            Cib { start: 6, end: 30 },
            Cib { start: 31, end: 40 },
            Cib { start: 41, end: 200 },
        ];
        let segs = sensitive_segments(&cibs, 10, 8);
        assert_eq!(segs.len(), 2);
        assert_eq!((segs[0].start, segs[0].end), (0, 30));
        assert_eq!(segs[0].contributing_cibs.len(), 3);
        assert_eq!((segs[1].start, segs[1].end), (41, 200));
        assert_eq!(merge_segments(segs.clone()), segs);
        // A wider neighborhood makes the two seeds overlap.
        let wide = sensitive_segments(&cibs, 10, 40);
        assert_eq!(wide.len(), 2);
        assert_eq!((wide[0].start, wide[0].end), (0, 200));
        assert_eq!((wide[1].start, wide[1].end), (5, 200));
        let merged = merge_segments(wide);
        assert_eq!(merged.len(), 1);
        assert_eq!((merged[0].start, merged[0].end), (0, 200));
        assert_eq!(merged[0].contributing_cibs.len(), 5);
        assert!(sensitive_segments(&cibs, 500, 8).is_empty());
    }

    fn mp_from(mpd: Vec<f64>, mpi: Vec<usize>) -> MatrixProfile<f64> {
        let n = mpd.len() + 3;
        MatrixProfile::from_parts(mpd, mpi, 4, n).unwrap()
    }

    #[test]
    fn cycle_link_examples() {
        let mp = mp_from(vec![1.5, 9.0, 9.0, 2.0], vec![3, 3, 0, 0]);
        let out = fake_cycle_link(&mp);
        assert_eq!(out.mpd(), &[1.5, 9.0, 9.0, 1.5]);

        let chain = mp_from(vec![1.0, 2.0, 3.0, 4.0], vec![2, 3, 3, 0]);
        assert_eq!(fake_cycle_link(&chain), chain);
    }

    fn walk(n: usize, seed: u64) -> TimeSeries<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        TimeSeries::new(
            (0..n)
                .map(|_| {
                    x += rng.gen_range(-1.0..1.0);
                    x
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn no_sensitive_segments_is_identity() {
        let s = walk(300, 4);
        let mp = compute_mp(&s, 16).unwrap();
        let cfg = DefenseConfig::new(16, 40, 1).with_perm_length(10_000);
        let out = pattern_hide(&s, &mp, &cfg).unwrap();
        assert!(out.segments.is_empty());
        assert_eq!(out.pmp, fake_cycle_link(&mp));
    }

    #[test]
    fn deterministic_and_breaks_runs() {
        let s = walk(2000, 8);
        let mp = compute_mp(&s, 16).unwrap();
        let cfg = DefenseConfig::new(16, 40, 99);
        let a = pattern_hide(&s, &mp, &cfg).unwrap();
        let b = pattern_hide(&s, &mp, &cfg).unwrap();
        assert_eq!(a.pmp, b.pmp);
        assert!(!a.segments.is_empty());
        assert!(a.triggers > 0);
        let before = get_cibs(mp.mpi(), 40).iter().map(Cib::len).max().unwrap();
        let after = get_cibs(a.pmp.mpi(), 40).iter().map(Cib::len).max().unwrap();
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn rejects_bad_config() {
        let s = walk(200, 1);
        let mp = compute_mp(&s, 16).unwrap();
        assert!(pattern_hide(&s, &mp, &DefenseConfig::new(16, 16, 0)).is_err());
        assert!(pattern_hide(&s, &mp, &DefenseConfig::new(16, 40, 0).with_perm_length(0)).is_err());
        let other = walk(201, 1);
        assert!(pattern_hide(&other, &mp, &DefenseConfig::new(16, 40, 0)).is_err());
    }
}
