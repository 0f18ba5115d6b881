//! Matrix profile (nearest-neighbor distance and index per subsequence) with
//! trivial-match exclusion, and the masked variant that additionally forbids a
//! set of candidate positions.
//!
//! Candidates `j` for query `i` must satisfy `|i - j| > floor(l / 2)`. Among
//! equally distant candidates the smallest index wins.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::{self, rolling_stats, RollingStats, RowProfiler, TimeSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixProfile<T> {
    mpd: Vec<T>,
    mpi: Vec<usize>,
    window: usize,
    source_len: usize,
}

impl<T: Scalar> MatrixProfile<T> {
    /// Assembles a profile from its parts, checking lengths and index ranges.
    pub fn from_parts(mpd: Vec<T>, mpi: Vec<usize>, window: usize, source_len: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::ZeroWindow);
        }
        if window > source_len {
            return Err(Error::WindowTooLong {
                window,
                len: source_len,
            });
        }
        let count = source_len - window + 1;
        if mpd.len() != count || mpi.len() != count {
            return Err(Error::Config(format!(
                "profile has {} distances and {} indices, expected {count}",
                mpd.len(),
                mpi.len()
            )));
        }
        if let Some(p) = mpi.iter().position(|&j| j >= count) {
            return Err(Error::Config(format!(
                "index {} at position {p} is outside [0, {}]",
                mpi[p],
                count - 1
            )));
        }
        if let Some(p) = mpd.iter().position(|d| !d.is_finite() || *d < T::zero()) {
            return Err(Error::Config(format!("invalid distance at position {p}")));
        }
        Ok(Self {
            mpd,
            mpi,
            window,
            source_len,
        })
    }

    pub fn mpd(&self) -> &[T] {
        &self.mpd
    }

    pub fn mpi(&self) -> &[usize] {
        &self.mpi
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn source_len(&self) -> usize {
        self.source_len
    }

    pub fn len(&self) -> usize {
        self.mpd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mpd.is_empty()
    }

    pub fn exclusion_radius(&self) -> usize {
        exclusion_radius(self.window)
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [T], &mut [usize]) {
        (&mut self.mpd, &mut self.mpi)
    }

    /// Position of the smallest distance (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, d) in self.mpd.iter().enumerate() {
            if *d < self.mpd[best] {
                best = i;
            }
        }
        best
    }
}

pub fn exclusion_radius(window: usize) -> usize {
    window / 2
}

#[inline]
pub(crate) fn is_trivial_match(i: usize, j: usize, radius: usize) -> bool {
    i.abs_diff(j) <= radius
}

/// Disjoint, sorted, non-adjacent inclusive intervals of forbidden candidate
/// (subsequence start) positions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaskSet {
    intervals: Vec<(usize, usize)>,
}

impl MaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intervals(&self) -> &[(usize, usize)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Adds `[lo, hi]`, merging with overlapping or adjacent intervals.
    pub fn insert(&mut self, lo: usize, hi: usize) {
        let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
        let first = self.intervals.partition_point(|&(_, h)| h.saturating_add(1) < lo);
        let mut last = first;
        while last < self.intervals.len() && self.intervals[last].0 <= hi.saturating_add(1) {
            lo = lo.min(self.intervals[last].0);
            hi = hi.max(self.intervals[last].1);
            last += 1;
        }
        self.intervals.splice(first..last, [(lo, hi)]);
    }

    /// Masks every subsequence of length `window` overlapping the raw sample
    /// range `[a, b]`, i.e. starts `[a - window + 1, b]` clipped to `[0, count - 1]`.
    pub fn insert_raw(&mut self, a: usize, b: usize, window: usize, count: usize) {
        if count == 0 || a >= count + window - 1 {
            return;
        }
        let lo = a.saturating_sub(window - 1);
        let hi = b.min(count - 1);
        if lo <= hi {
            self.insert(lo, hi);
        }
    }

    pub fn contains(&self, j: usize) -> bool {
        let k = self.intervals.partition_point(|&(_, h)| h < j);
        k < self.intervals.len() && self.intervals[k].0 <= j
    }

    /// Per-position lookup table over `count` positions.
    pub fn to_banned(&self, count: usize) -> Result<Vec<bool>> {
        let mut banned = vec![false; count];
        for &(lo, hi) in &self.intervals {
            if hi >= count {
                return Err(Error::MaskOutOfRange {
                    lo,
                    hi,
                    last: count.saturating_sub(1),
                });
            }
            banned[lo..=hi].iter_mut().for_each(|b| *b = true);
        }
        Ok(banned)
    }
}

fn check_lengths<T: Scalar>(series: &TimeSeries<T>, window: usize) -> Result<()> {
    if window == 0 {
        return Err(Error::ZeroWindow);
    }
    if series.len() < 2 * window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window,
        });
    }
    Ok(())
}

pub fn compute_mp<T: Scalar>(series: &TimeSeries<T>, window: usize) -> Result<MatrixProfile<T>> {
    compute_masked_mp(series, window, &MaskSet::new())
}

pub fn compute_masked_mp<T: Scalar>(
    series: &TimeSeries<T>,
    window: usize,
    mask: &MaskSet,
) -> Result<MatrixProfile<T>> {
    check_lengths(series, window)?;
    let stats = rolling_stats(series, window)?;
    compute_masked_mp_with_stats(series, &stats, mask)
}

/// Masked matrix profile reusing precomputed rolling statistics.
///
/// Runs a diagonal sweep over the upper triangle of the distance matrix; each
/// diagonal carries its centered dot product forward in O(1) per cell. The
/// reported distance of each selected pair is then evaluated directly. Work
/// is split into a fixed number of diagonal chunks, so the result does not
/// depend on the number of worker threads.
pub fn compute_masked_mp_with_stats<T: Scalar>(
    series: &TimeSeries<T>,
    stats: &RollingStats<T>,
    mask: &MaskSet,
) -> Result<MatrixProfile<T>> {
    let window = stats.window();
    check_lengths(series, window)?;
    if stats.len() != series.subsequence_count(window) {
        return Err(Error::Config("statistics do not match the series".into()));
    }
    let count = stats.len();
    let banned = mask.to_banned(count)?;
    let values = series.values();
    let (df, dg) = series::update_terms(values, stats);
    let first_diag = exclusion_radius(window) + 1;

    let chunks = diagonal_chunks(first_diag, count, 64);
    let best = chunks
        .into_par_iter()
        .map(|(k0, k1)| {
            let mut best = vec![Best::<T>::none(); count];
            for k in k0..k1 {
                sweep_diagonal(values, stats, &df, &dg, &banned, k, &mut best);
            }
            best
        })
        .reduce(
            || vec![Best::<T>::none(); count],
            |mut acc, other| {
                for (a, b) in acc.iter_mut().zip(other) {
                    a.offer(b.corr, b.idx);
                }
                acc
            },
        );

    let mut mpd = Vec::with_capacity(count);
    let mut mpi = Vec::with_capacity(count);
    for (position, b) in best.into_iter().enumerate() {
        if b.idx == usize::MAX {
            return Err(Error::InfeasibleMask { position });
        }
        mpd.push(series::pair_distance(values, stats, position, b.idx));
        mpi.push(b.idx);
    }
    Ok(MatrixProfile {
        mpd,
        mpi,
        window,
        source_len: series.len(),
    })
}

#[derive(Clone, Copy)]
struct Best<T> {
    corr: T,
    idx: usize,
}

impl<T: Scalar> Best<T> {
    fn none() -> Self {
        Self {
            corr: T::neg_infinity(),
            idx: usize::MAX,
        }
    }

    /// Higher correlation (smaller distance) wins, then the smaller index.
    #[inline]
    fn offer(&mut self, corr: T, idx: usize) {
        if corr > self.corr || (corr == self.corr && idx < self.idx) {
            self.corr = corr;
            self.idx = idx;
        }
    }
}

fn sweep_diagonal<T: Scalar>(
    values: &[T],
    stats: &RollingStats<T>,
    df: &[T],
    dg: &[T],
    banned: &[bool],
    k: usize,
    best: &mut [Best<T>],
) {
    let count = stats.len();
    let mut cov = series::centered_dot(values, stats, 0, k);
    for i in 0..count - k {
        let j = i + k;
        if i > 0 {
            cov = cov + df[i] * dg[j] + df[j] * dg[i];
        }
        let corr = stats.correlation(cov, i, j);
        if !banned[j] {
            best[i].offer(corr, j);
        }
        if !banned[i] {
            best[j].offer(corr, i);
        }
    }
}

/// Splits diagonals `[first, count)` into about `parts` ranges of similar cell counts.
fn diagonal_chunks(first: usize, count: usize, parts: usize) -> Vec<(usize, usize)> {
    if first >= count {
        return Vec::new();
    }
    let total: usize = (first..count).map(|k| count - k).sum();
    let target = total.div_ceil(parts).max(1);
    let mut chunks = Vec::new();
    let (mut start, mut acc) = (first, 0);
    for k in first..count {
        acc += count - k;
        if acc >= target {
            chunks.push((start, k + 1));
            start = k + 1;
            acc = 0;
        }
    }
    if start < count {
        chunks.push((start, count));
    }
    chunks
}

/// Nearest admissible neighbor of the row currently held by `rows`.
pub(crate) fn masked_row_argmin<T: Scalar>(
    rows: &RowProfiler<'_, T>,
    banned: &[bool],
    radius: usize,
) -> Result<(T, usize)> {
    let i = rows.row().expect("row selected");
    let mut best = Best::<T>::none();
    for (j, &masked) in banned.iter().enumerate() {
        if masked || is_trivial_match(i, j, radius) {
            continue;
        }
        best.offer(rows.correlation(j), j);
    }
    if best.idx == usize::MAX {
        return Err(Error::InfeasibleMask { position: i });
    }
    Ok((rows.exact_distance(best.idx), best.idx))
}

/// Reference matrix profile: the plain double loop over all admissible pairs,
/// z-normalizing each window from scratch (two-pass mean and population std).
pub fn mp_oracle<T: Scalar>(series: &TimeSeries<T>, window: usize, mask: &MaskSet) -> Result<MatrixProfile<T>> {
    check_lengths(series, window)?;
    let count = series.subsequence_count(window);
    let banned = mask.to_banned(count)?;
    let radius = exclusion_radius(window);
    let z: Vec<Vec<T>> = series.values().windows(window).map(znormalize).collect();

    let mut mpd = Vec::with_capacity(count);
    let mut mpi = Vec::with_capacity(count);
    for i in 0..count {
        let mut best: Option<(T, usize)> = None;
        for j in 0..count {
            if banned[j] || is_trivial_match(i, j, radius) {
                continue;
            }
            let d = z[i]
                .iter()
                .zip(&z[j])
                .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b))
                .sqrt();
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        let (d, j) = best.ok_or(Error::InfeasibleMask { position: i })?;
        mpd.push(d);
        mpi.push(j);
    }
    Ok(MatrixProfile {
        mpd,
        mpi,
        window,
        source_len: series.len(),
    })
}

fn znormalize<T: Scalar>(w: &[T]) -> Vec<T> {
    let l = T::from_count(w.len());
    let mean = w.iter().fold(T::zero(), |a, &x| a + x) / l;
    let var = w.iter().fold(T::zero(), |a, &x| a + (x - mean) * (x - mean)) / l;
    let std = var.sqrt();
    // Rounding in the mean leaves a tiny residual spread on constant windows.
    if std <= T::epsilon() * T::from_count(16) * mean.abs() {
        return vec![T::zero(); w.len()];
    }
    w.iter().map(|&x| (x - mean) / std).collect()
}
