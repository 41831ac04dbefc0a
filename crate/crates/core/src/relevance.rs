//! Relevance functions mapping target values to importance in `[0, 1]`.
//!
//! The function is a piecewise cubic Hermite interpolant through a list of
//! control points, with Fritsch–Carlson slopes so every segment between two
//! control points is monotone and never overshoots the control values.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelevanceError {
    #[error("targets are degenerate (min = max = {0})")]
    DegenerateTargets(f64),
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("control point y values must be strictly increasing")]
    NotIncreasing,
    #[error("relevance {0} is outside [0, 1]")]
    OutOfRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub y: f64,
    pub phi: f64,
    pub slope: f64,
}

/// Relevance at the target minimum, mean and maximum.
pub const EXTREMES_MIN_RELEVANCE: f64 = 1.0;
pub const EXTREMES_MEAN_RELEVANCE: f64 = 0.025;
pub const EXTREMES_MAX_RELEVANCE: f64 = 0.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceFunction {
    points: Vec<ControlPoint>,
}

impl RelevanceFunction {
    /// Three control points: `(min, 1)`, `(mean, 0.025)`, `(max, 0)`.
    ///
    /// Low targets are the relevant ones.
    pub fn extremes(targets: &[f64]) -> Result<Self, RelevanceError> {
        if targets.len() < 2 {
            return Err(RelevanceError::TooFew {
                needed: 2,
                got: targets.len(),
            });
        }
        if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
            return Err(RelevanceError::NonFinite(bad));
        }
        let min = targets.iter().copied().fold(f64::INFINITY, f64::min);
        let max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min == max {
            return Err(RelevanceError::DegenerateTargets(min));
        }
        let mean = targets.iter().sum::<f64>() / targets.len() as f64;
        Self::from_points(&[
            (min, EXTREMES_MIN_RELEVANCE),
            (mean, EXTREMES_MEAN_RELEVANCE),
            (max, EXTREMES_MAX_RELEVANCE),
        ])
    }

    /// Interpolates user-supplied `(y, phi)` pairs.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self, RelevanceError> {
        if points.len() < 2 {
            return Err(RelevanceError::TooFew {
                needed: 2,
                got: points.len(),
            });
        }
        for &(y, phi) in points {
            if !y.is_finite() {
                return Err(RelevanceError::NonFinite(y));
            }
            if !(0.0..=1.0).contains(&phi) {
                return Err(RelevanceError::OutOfRange(phi));
            }
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(RelevanceError::NotIncreasing);
        }
        let ys: Vec<f64> = points.iter().map(|p| p.0).collect();
        let phis: Vec<f64> = points.iter().map(|p| p.1).collect();
        let slopes = monotone_slopes(&ys, &phis);
        Ok(Self {
            points: ys
                .into_iter()
                .zip(phis)
                .zip(slopes)
                .map(|((y, phi), slope)| ControlPoint { y, phi, slope })
                .collect(),
        })
    }

    pub fn control_points(&self) -> &[ControlPoint] {
        &self.points
    }

    /// Lower and upper control-point y values.
    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].y, self.points[self.points.len() - 1].y)
    }

    /// `φ(y)`, constant outside the control-point range. NaN maps to NaN.
    pub fn eval(&self, y: f64) -> f64 {
        let pts = &self.points;
        let last = pts.len() - 1;
        if y.is_nan() {
            return f64::NAN;
        }
        if y <= pts[0].y {
            return pts[0].phi;
        }
        if y >= pts[last].y {
            return pts[last].phi;
        }
        // First control point with y' > y; the segment is [k, k + 1].
        let k = pts.partition_point(|p| p.y <= y) - 1;
        let (a, b) = (pts[k], pts[k + 1]);
        if y == a.y {
            return a.phi;
        }
        let h = b.y - a.y;
        let t = (y - a.y) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let v = h00 * a.phi + h10 * h * a.slope + h01 * b.phi + h11 * h * b.slope;
        v.clamp(0.0, 1.0)
    }
}

/// Fritsch–Carlson (PCHIP) derivative estimates.
fn monotone_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 <= 0.0 {
            m[k] = 0.0;
        } else {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

/// One-sided three-point slope, limited to keep the end segment monotone.
fn edge_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_targets() -> Vec<f64> {
        vec![-10.0, -4.0, -3.5, -3.0, -2.8, -2.0, -1.0, 0.5, 1.0, 2.0]
    }

    #[test]
    fn extremes_control_values() {
        let t = sample_targets();
        let f = RelevanceFunction::extremes(&t).unwrap();
        let mean = t.iter().sum::<f64>() / t.len() as f64;
        assert_eq!(f.eval(-10.0), 1.0);
        assert_eq!(f.eval(mean), 0.025);
        assert_eq!(f.eval(2.0), 0.0);
    }

    #[test]
    fn clamps_outside_range() {
        let f = RelevanceFunction::extremes(&sample_targets()).unwrap();
        assert_eq!(f.eval(-1e6), 1.0);
        assert_eq!(f.eval(1e6), 0.0);
    }

    #[test]
    fn monotone_on_dense_grid() {
        let t = sample_targets();
        let f = RelevanceFunction::extremes(&t).unwrap();
        let (lo, hi) = f.domain();
        let grid: Vec<f64> = (0..10_000)
            .map(|i| f.eval(lo + (hi - lo) * i as f64 / 9_999.0))
            .collect();
        assert!(grid.windows(2).all(|w| w[1] <= w[0]));
        assert!(grid.iter().all(|v| (0.0..=1.0).contains(v)));

        let mean = t.iter().sum::<f64>() / t.len() as f64;
        let mid = f.eval((lo + mean) / 2.0);
        assert!(mid > 0.025 && mid < 1.0);
    }

    #[test]
    fn degenerate_targets() {
        assert_eq!(
            RelevanceFunction::extremes(&[1.0, 1.0, 1.0]),
            Err(RelevanceError::DegenerateTargets(1.0))
        );
        assert!(matches!(
            RelevanceFunction::extremes(&[1.0]),
            Err(RelevanceError::TooFew { .. })
        ));
    }

    #[test]
    fn custom_points_validated() {
        assert_eq!(
            RelevanceFunction::from_points(&[(0.0, 0.5), (0.0, 1.0)]),
            Err(RelevanceError::NotIncreasing)
        );
        assert_eq!(
            RelevanceFunction::from_points(&[(0.0, 0.5), (1.0, 1.5)]),
            Err(RelevanceError::OutOfRange(1.5))
        );
    }

    #[test]
    fn non_monotone_points_have_flat_extremum() {
        let f = RelevanceFunction::from_points(&[(0.0, 1.0), (1.0, 0.0), (2.0, 1.0)]).unwrap();
        assert_eq!(f.control_points()[1].slope, 0.0);
        for i in 0..=200 {
            let v = f.eval(i as f64 / 100.0);
            assert!((0.0..=1.0).contains(&v));
        }
        assert_eq!(f.eval(1.0), 0.0);
    }

    #[test]
    fn two_points_are_linear() {
        let f = RelevanceFunction::from_points(&[(0.0, 0.0), (2.0, 1.0)]).unwrap();
        assert!((f.eval(0.5) - 0.25).abs() < 1e-15);
    }
}
