//! Time series container, rolling window statistics and z-normalized distances.
//!
//! Standard deviations use the population convention (divide by the window
//! length), so every non-degenerate z-normalized window has squared norm `l`
//! and distances are bounded by `2 * sqrt(l)`.
//!
//! A window whose standard deviation is zero is *degenerate*. Its z-normalized
//! vector is taken to be all zeros: two degenerate windows are at distance 0,
//! a degenerate and a regular window are at distance `sqrt(l)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    values: Vec<T>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of subsequences of length `window`.
    pub fn subsequence_count(&self, window: usize) -> usize {
        (self.len() + 1).saturating_sub(window)
    }

    pub fn subsequence(&self, sub: SubsequenceRef) -> Result<&[T]> {
        sub.validate(self.len())?;
        Ok(&self.values[sub.start..sub.start + sub.len])
    }
}

/// A contiguous window `values[start .. start + len]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SubsequenceRef {
    pub start: usize,
    pub len: usize,
}

impl SubsequenceRef {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    fn validate(&self, series_len: usize) -> Result<()> {
        if self.len == 0 {
            return Err(Error::ZeroWindow);
        }
        if self.start + self.len > series_len {
            return Err(Error::BadSubsequence {
                start: self.start,
                window: self.len,
                len: series_len,
            });
        }
        Ok(())
    }
}

/// Mean and population standard deviation of every window of one length.
#[derive(Debug, Clone, PartialEq)]
pub struct RollingStats<T> {
    window: usize,
    means: Vec<T>,
    stds: Vec<T>,
    /// `1 / (std * sqrt(window))`, zero for degenerate windows.
    inv_norms: Vec<T>,
}

impl<T: Scalar> RollingStats<T> {
    pub fn window(&self) -> usize {
        self.window
    }

    pub fn means(&self) -> &[T] {
        &self.means
    }

    pub fn stds(&self) -> &[T] {
        &self.stds
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.stds[i] == T::zero()
    }

    /// True when at least one window is constant.
    pub fn has_degenerate(&self) -> bool {
        self.stds.iter().any(|s| *s == T::zero())
    }

    /// Pearson correlation implied by a centered dot product, with the
    /// degenerate-window convention folded in (one degenerate side: 1/2, both: 1).
    #[inline]
    pub(crate) fn correlation(&self, cov: T, i: usize, j: usize) -> T {
        let (a, b) = (self.inv_norms[i], self.inv_norms[j]);
        if a == T::zero() || b == T::zero() {
            return if a == b {
                T::one()
            } else {
                T::from_f64(0.5).unwrap()
            };
        }
        let c = cov * a * b;
        c.min(T::one()).max(-T::one())
    }

    /// z-normalized Euclidean distance implied by a correlation.
    #[inline]
    pub(crate) fn distance_from_correlation(&self, corr: T) -> T {
        let two_l = T::from_count(2 * self.window);
        (two_l * (T::one() - corr)).max(T::zero()).sqrt()
    }

    fn check_window(&self, sub: SubsequenceRef) -> Result<()> {
        if sub.len != self.window {
            return Err(Error::Config(format!(
                "subsequence length {} does not match statistics window {}",
                sub.len, self.window
            )));
        }
        if sub.start >= self.len() {
            return Err(Error::BadSubsequence {
                start: sub.start,
                window: sub.len,
                len: self.len() + self.window - 1,
            });
        }
        Ok(())
    }
}

/// Rolling means and population standard deviations in O(n) from cumulative
/// sums of the (globally centered) values and their squares.
pub fn rolling_stats<T: Scalar>(series: &TimeSeries<T>, window: usize) -> Result<RollingStats<T>> {
    let n = series.len();
    if window == 0 {
        return Err(Error::ZeroWindow);
    }
    if window > n {
        return Err(Error::WindowTooLong { window, len: n });
    }
    let values = series.values();
    let center = values.iter().fold(T::zero(), |acc, &v| acc + v) / T::from_count(n);

    let mut sum = Vec::with_capacity(n + 1);
    let mut sum_sq = Vec::with_capacity(n + 1);
    sum.push(T::zero());
    sum_sq.push(T::zero());
    let (mut s, mut s2) = (T::zero(), T::zero());
    for &v in values {
        let c = v - center;
        s = s + c;
        s2 = s2 + c * c;
        sum.push(s);
        sum_sq.push(s2);
    }

    let count = n - window + 1;
    let l = T::from_count(window);
    let sqrt_l = l.sqrt();
    // Cumulative-sum differences carry an absolute error proportional to the
    // magnitudes of the two partial sums involved.
    let slack = T::epsilon() * T::from_count(8);
    let mut means = Vec::with_capacity(count);
    let mut stds = Vec::with_capacity(count);
    let mut inv_norms = Vec::with_capacity(count);
    for i in 0..count {
        let m = (sum[i + window] - sum[i]) / l;
        let sq = (sum_sq[i + window] - sum_sq[i]) / l;
        let var = sq - m * m;
        let noise_floor = slack * (sum_sq[i + window] + sum_sq[i]) / l;
        let std = if var <= noise_floor { T::zero() } else { var.sqrt() };
        means.push(m + center);
        stds.push(std);
        inv_norms.push(if std == T::zero() {
            T::zero()
        } else {
            T::one() / (std * sqrt_l)
        });
    }
    Ok(RollingStats {
        window,
        means,
        stds,
        inv_norms,
    })
}

/// z-normalized Euclidean distance between two equal-length windows,
/// evaluated directly from the definition.
pub fn znorm_distance<T: Scalar>(
    a: SubsequenceRef,
    b: SubsequenceRef,
    series: &TimeSeries<T>,
    stats: &RollingStats<T>,
) -> Result<T> {
    stats.check_window(a)?;
    stats.check_window(b)?;
    let xa = series.subsequence(a)?;
    let xb = series.subsequence(b)?;
    Ok(znorm_distance_unchecked(xa, xb, stats, a.start, b.start))
}

pub(crate) fn znorm_distance_unchecked<T: Scalar>(
    xa: &[T],
    xb: &[T],
    stats: &RollingStats<T>,
    ia: usize,
    ib: usize,
) -> T {
    let (ma, mb) = (stats.means[ia], stats.means[ib]);
    let (sa, sb) = (stats.stds[ia], stats.stds[ib]);
    let z = |x: T, m: T, s: T| if s == T::zero() { T::zero() } else { (x - m) / s };
    xa.iter()
        .zip(xb)
        .fold(T::zero(), |acc, (&x, &y)| {
            let d = z(x, ma, sa) - z(y, mb, sb);
            acc + d * d
        })
        .sqrt()
}

/// Direct z-normalized distance between windows `i` and `j`.
#[inline]
pub(crate) fn pair_distance<T: Scalar>(values: &[T], stats: &RollingStats<T>, i: usize, j: usize) -> T {
    let w = stats.window;
    znorm_distance_unchecked(&values[i..i + w], &values[j..j + w], stats, i, j)
}

/// Centered dot product `sum_m (t[i+m] - mu_i) * (t[j+m] - mu_j)`.
pub(crate) fn centered_dot<T: Scalar>(values: &[T], stats: &RollingStats<T>, i: usize, j: usize) -> T {
    let w = stats.window;
    let (mi, mj) = (stats.means[i], stats.means[j]);
    values[i..i + w]
        .iter()
        .zip(&values[j..j + w])
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - mi) * (y - mj))
}

/// Distances from one query window to every window of the series (no
/// exclusion zone applied).
pub fn distance_profile<T: Scalar>(
    query: SubsequenceRef,
    series: &TimeSeries<T>,
    stats: &RollingStats<T>,
) -> Result<Vec<T>> {
    stats.check_window(query)?;
    let mut rows = RowProfiler::new(series, stats);
    rows.seek(query.start);
    Ok((0..stats.len()).map(|j| rows.distance(j)).collect())
}

/// O(n * l) reference implementation of [`distance_profile`]: z-normalize
/// every window and take the Euclidean distance.
pub fn distance_profile_direct<T: Scalar>(
    query: SubsequenceRef,
    series: &TimeSeries<T>,
    stats: &RollingStats<T>,
) -> Result<Vec<T>> {
    stats.check_window(query)?;
    let w = stats.window;
    let values = series.values();
    let q = &values[query.start..query.start + w];
    Ok((0..stats.len())
        .map(|j| znorm_distance_unchecked(q, &values[j..j + w], stats, query.start, j))
        .collect())
}

/// Streams rows of the centered cross-product matrix.
///
/// Moving from row `i - 1` to row `i` costs O(n) through the update
/// `cov(i, j) = cov(i-1, j-1) + df[i] * dg[j] + df[j] * dg[i]`; jumping to an
/// arbitrary row costs O(n * l).
pub struct RowProfiler<'a, T> {
    values: &'a [T],
    stats: &'a RollingStats<T>,
    df: Vec<T>,
    dg: Vec<T>,
    row: Option<usize>,
    cov: Vec<T>,
}

impl<'a, T: Scalar> RowProfiler<'a, T> {
    pub fn new(series: &'a TimeSeries<T>, stats: &'a RollingStats<T>) -> Self {
        let values = series.values();
        let (df, dg) = update_terms(values, stats);
        Self {
            values,
            stats,
            df,
            dg,
            row: None,
            cov: vec![T::zero(); stats.len()],
        }
    }

    pub fn row(&self) -> Option<usize> {
        self.row
    }

    pub fn seek(&mut self, i: usize) {
        match self.row {
            Some(r) if r == i => {}
            Some(r) if r + 1 == i => self.advance(),
            _ => {
                for j in 0..self.cov.len() {
                    self.cov[j] = centered_dot(self.values, self.stats, i, j);
                }
                self.row = Some(i);
            }
        }
    }

    fn advance(&mut self) {
        let i = self.row.map_or(0, |r| r + 1);
        let (dfi, dgi) = (self.df[i], self.dg[i]);
        for j in (1..self.cov.len()).rev() {
            self.cov[j] = self.cov[j - 1] + dfi * self.dg[j] + self.df[j] * dgi;
        }
        self.cov[0] = centered_dot(self.values, self.stats, i, 0);
        self.row = Some(i);
    }

    #[inline]
    pub fn correlation(&self, j: usize) -> T {
        let i = self.row.expect("row selected");
        self.stats.correlation(self.cov[j], i, j)
    }

    #[inline]
    pub fn distance(&self, j: usize) -> T {
        self.stats.distance_from_correlation(self.correlation(j))
    }

    /// Distance to window `j` evaluated directly in O(l).
    pub fn exact_distance(&self, j: usize) -> T {
        pair_distance(self.values, self.stats, self.row.expect("row selected"), j)
    }
}

/// Increment terms for the diagonal covariance recurrence; entry 0 is unused.
pub(crate) fn update_terms<T: Scalar>(values: &[T], stats: &RollingStats<T>) -> (Vec<T>, Vec<T>) {
    let count = stats.len();
    let w = stats.window;
    let half = T::from_f64(0.5).unwrap();
    let mut df = vec![T::zero(); count];
    let mut dg = vec![T::zero(); count];
    for i in 1..count {
        let (enter, leave) = (values[i + w - 1], values[i - 1]);
        df[i] = (enter - leave) * half;
        dg[i] = (enter - stats.means[i]) + (leave - stats.means[i - 1]);
    }
    (df, dg)
}
