//! Interval overlap scoring for planted-motif detection.

use serde::{Deserialize, Serialize};

/// Closed integer interval `[start, end]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
}

impl Interval {
    pub fn new(start: usize, end: usize) -> Self {
        assert!(start <= end, "interval [{start}, {end}] is reversed");
        Self { start, end }
    }

    /// Interval of `len` positions starting at `start`.
    pub fn with_len(start: usize, len: usize) -> Self {
        Self::new(start, start + len.max(1) - 1)
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `|a ∩ b| / |a ∪ b|` over integer positions.
pub fn jaccard(a: Interval, b: Interval) -> f64 {
    let lo = a.start.max(b.start);
    let hi = a.end.min(b.end);
    let inter = if lo <= hi { hi - lo + 1 } else { 0 };
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

pub const DETECTION_THRESHOLD: f64 = 0.25;

/// True when the two predictions can be matched to two distinct ground-truth
/// instances with Jaccard at least `threshold` each.
pub fn pair_detected(pred: [Interval; 2], truth: &[Interval], threshold: f64) -> bool {
    truth.iter().enumerate().any(|(a, ta)| {
        jaccard(pred[0], *ta) >= threshold
            && truth
                .iter()
                .enumerate()
                .any(|(b, tb)| a != b && jaccard(pred[1], *tb) >= threshold)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jaccard_examples() {
        let a = Interval::new(0, 99);
        assert_eq!(jaccard(a, a), 1.0);
        assert_eq!(jaccard(a, Interval::new(100, 199)), 0.0);
        assert!((jaccard(a, Interval::new(50, 149)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(jaccard(Interval::new(5, 5), Interval::new(5, 5)), 1.0);
    }

    #[test]
    fn detection_rules() {
        let gt = [Interval::new(0, 99), Interval::new(500, 599)];
        assert!(pair_detected(gt, &gt, DETECTION_THRESHOLD));
        assert!(pair_detected([gt[1], gt[0]], &gt, DETECTION_THRESHOLD));
        assert!(!pair_detected([gt[0], Interval::new(2000, 2099)], &gt, DETECTION_THRESHOLD));
        // Both predictions on the same instance do not count.
        assert!(!pair_detected([gt[0], gt[0]], &gt, DETECTION_THRESHOLD));
        // Jaccard exactly 0.25: [0,99] vs [60,159] shares 40 of 160.
        let edge = [Interval::new(60, 159), Interval::new(560, 659)];
        assert_eq!(jaccard(edge[0], gt[0]), 0.25);
        assert!(pair_detected(edge, &gt, DETECTION_THRESHOLD));
        let three = [gt[0], gt[1], Interval::new(900, 999)];
        assert!(pair_detected([three[2], three[0]], &three, DETECTION_THRESHOLD));
    }
}
