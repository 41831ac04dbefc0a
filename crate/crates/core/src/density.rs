//! Gaussian kernel density estimation of the target distribution and the
//! relevance-over-density sampling weight.

use crate::relevance::RelevanceFunction;
use serde::{Deserialize, Serialize};

/// Smallest bandwidth ever used.
pub const MIN_BANDWIDTH: f64 = 1e-6;
/// Default `eps` in `φ(y) / (p(y) + eps)`.
pub const DEFAULT_EPS: f64 = 1e-6;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DensityError {
    #[error("kernel density needs at least 2 targets, got {0}")]
    InsufficientData(usize),
    #[error("non-finite target {0}")]
    NonFinite(f64),
    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    targets: Vec<f64>,
    bandwidth: f64,
}

impl DensityEstimate {
    /// Fixed-bandwidth estimate over `targets` (any non-zero count).
    pub fn with_bandwidth(targets: &[f64], bandwidth: f64) -> Result<Self, DensityError> {
        if targets.is_empty() {
            return Err(DensityError::InsufficientData(0));
        }
        if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
            return Err(DensityError::NonFinite(bad));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(DensityError::InvalidBandwidth(bandwidth));
        }
        Ok(Self {
            targets: targets.to_vec(),
            bandwidth,
        })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `p(y) = 1/(N h) Σ K((y - y_i) / h)` with the standard normal kernel.
    pub fn eval(&self, y: f64) -> f64 {
        let h = self.bandwidth;
        let sum: f64 = self
            .targets
            .iter()
            .map(|&t| {
                let u = (y - t) / h;
                (-0.5 * u * u).exp()
            })
            .sum();
        sum * INV_SQRT_2PI / (self.targets.len() as f64 * h)
    }
}

/// Fits a KDE with Silverman's rule, `h = 0.9 min(σ, IQR/1.34) N^{-1/5}`.
///
/// If the IQR is zero the standard deviation alone is used. When all targets
/// are equal the bandwidth falls back to [`MIN_BANDWIDTH`] with a warning.
pub fn kde_fit(targets: &[f64]) -> Result<DensityEstimate, DensityError> {
    if targets.len() < 2 {
        return Err(DensityError::InsufficientData(targets.len()));
    }
    if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
        return Err(DensityError::NonFinite(bad));
    }
    let h = silverman_bandwidth(targets);
    DensityEstimate::with_bandwidth(targets, h)
}

pub fn silverman_bandwidth(targets: &[f64]) -> f64 {
    let n = targets.len() as f64;
    let mean = targets.iter().sum::<f64>() / n;
    let sd = (targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let spread = match (sd > 0.0, iqr > 0.0) {
        (true, true) => sd.min(iqr / 1.34),
        (true, false) => sd,
        _ => 0.0,
    };
    if spread == 0.0 {
        log::warn!(
            "all {} targets are equal; using bandwidth {MIN_BANDWIDTH}",
            targets.len()
        );
    }
    (0.9 * spread * n.powf(-0.2)).max(MIN_BANDWIDTH)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `w(y) = φ(y) / (p(y) + eps)`.
pub fn sampling_weight(relevance: &RelevanceFunction, density: &DensityEstimate, y: f64, eps: f64) -> f64 {
    let phi = relevance.eval(y);
    if phi == 0.0 {
        return 0.0;
    }
    phi / (density.eval(y) + eps)
}
