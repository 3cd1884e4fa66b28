use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Ordered observation times within a window `[lo, hi]`, with consecutive
/// gaps of at least `min_gap`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    times: Vec<f64>,
    window: (f64, f64),
    min_gap: f64,
}

/// Slack allowed when checking gaps and window bounds, so designs produced by
/// arithmetic on the constraint boundary are not rejected by rounding.
const SLACK: f64 = 1e-9;

impl Design {
    pub fn new(times: Vec<f64>, window: (f64, f64), min_gap: f64) -> Result<Self> {
        let (lo, hi) = window;
        if times.is_empty() {
            return Err(Error::InvalidDesign("a design needs at least one time".into()));
        }
        if !(lo.is_finite() && hi >= lo) || lo < 0.0 {
            return Err(Error::InvalidDesign(format!("bad window [{lo}, {hi}]")));
        }
        if !(min_gap >= 0.0) {
            return Err(Error::InvalidDesign(format!("negative minimum gap {min_gap}")));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidDesign("non-finite time".into()));
        }
        if times[0] < lo - SLACK || times[times.len() - 1] > hi + SLACK {
            return Err(Error::InvalidDesign(format!(
                "times must lie in [{lo}, {hi}]"
            )));
        }
        for w in times.windows(2) {
            let gap = w[1] - w[0];
            if !(gap > 0.0) {
                return Err(Error::InvalidDesign(format!(
                    "times must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
            if gap < min_gap - SLACK {
                return Err(Error::InvalidDesign(format!(
                    "gap {gap} between {} and {} is below the minimum {min_gap}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self {
            times,
            window,
            min_gap,
        })
    }

    /// A design whose window is `[0, last time]` with no spacing constraint.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        let hi = times.last().copied().unwrap_or(0.0);
        Self::new(times, (0.0, hi.max(0.0)), 0.0)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// Smallest gap between consecutive times (infinite for one point).
    pub fn smallest_gap(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Copy with coordinate `k` replaced, validated against the same window
    /// and spacing.
    pub fn with_time(&self, k: usize, t: f64) -> Result<Self> {
        let mut times = self.times.clone();
        times[k] = t;
        Self::new(times, self.window, self.min_gap)
    }

    /// The first `k` times, keeping window and spacing.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        Self::new(self.times[..k].to_vec(), self.window, self.min_gap)
    }
}

/// Observed counts at each design time: an `L × observed-species` matrix
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    design: Design,
    width: usize,
    counts: Vec<i64>,
}

impl Trajectory {
    pub fn new(design: Design, width: usize, counts: Vec<i64>) -> Result<Self> {
        if counts.len() != design.len() * width {
            return Err(Error::DimensionMismatch {
                expected: design.len() * width,
                got: counts.len(),
            });
        }
        Ok(Self {
            design,
            width,
            counts,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn times(&self) -> &[f64] {
        self.design.times()
    }

    pub fn len(&self) -> usize {
        self.design.len()
    }

    pub fn is_empty(&self) -> bool {
        self.design.is_empty()
    }

    /// Number of observed species.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Observed counts at the `k`-th design time.
    pub fn row(&self, k: usize) -> &[i64] {
        &self.counts[k * self.width..(k + 1) * self.width]
    }

    /// The series of observed species `s` across design times.
    pub fn species(&self, s: usize) -> impl Iterator<Item = i64> + '_ {
        self.counts.iter().skip(s).step_by(self.width).copied()
    }

    pub fn counts(&self) -> &[i64] {
        &self.counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_unordered_or_crowded_times() {
        assert!(Design::new(vec![1.0, 1.0], (0.0, 2.0), 0.0).is_err());
        assert!(Design::new(vec![1.0, 0.5], (0.0, 2.0), 0.0).is_err());
        assert!(Design::new(vec![1.0, 1.2], (0.0, 2.0), 0.25).is_err());
        assert!(Design::new(vec![1.0, 3.0], (0.0, 2.0), 0.0).is_err());
        assert!(Design::new(vec![1.0, 1.25], (0.0, 2.0), 0.25).is_ok());
        assert!(Design::new(vec![], (0.0, 2.0), 0.0).is_err());
    }

    #[test]
    fn trajectory_accessors() {
        let d = Design::from_times(vec![1.0, 2.0]).unwrap();
        let t = Trajectory::new(d, 2, vec![1, 10, 2, 20]).unwrap();
        assert_eq!(t.row(1), &[2, 20]);
        assert_eq!(t.species(1).collect::<Vec<_>>(), vec![10, 20]);
    }
}
