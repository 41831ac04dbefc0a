//! Regression metrics for imbalanced targets and graph-collection statistics.

use crate::graph::Graph;
use crate::relevance::RelevanceFunction;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SERA_GRID: usize = 1001;
pub const DEFAULT_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("{truth} true values but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("need at least {needed} values, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("true values have zero variance; R² is undefined")]
    DegenerateTargets,
    #[error("threshold grid needs at least 2 points, got {0}")]
    InvalidGrid(usize),
    #[error("empty graph collection")]
    EmptyCollection,
}

fn check_lengths(y_true: &[f64], y_pred: &[f64], needed: usize) -> Result<(), MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: y_true.len(),
            pred: y_pred.len(),
        });
    }
    if y_true.len() < needed {
        return Err(MetricsError::TooFew {
            needed,
            got: y_true.len(),
        });
    }
    Ok(())
}

/// `SER_t = Σ_{i: φ(y_i) ≥ t} (ŷ_i - y_i)^2` on `grid_size` evenly spaced
/// thresholds in `[0, 1]`.
pub fn ser_curve(
    y_true: &[f64],
    y_pred: &[f64],
    relevance: &RelevanceFunction,
    grid_size: usize,
) -> Result<Vec<(f64, f64)>, MetricsError> {
    check_lengths(y_true, y_pred, 1)?;
    if grid_size < 2 {
        return Err(MetricsError::InvalidGrid(grid_size));
    }
    let phi: Vec<f64> = y_true.iter().map(|&y| relevance.eval(y)).collect();
    let sq: Vec<f64> = y_true.iter().zip(y_pred).map(|(t, p)| (p - t) * (p - t)).collect();
    let steps = (grid_size - 1) as f64;
    Ok((0..grid_size)
        .map(|i| {
            let t = i as f64 / steps;
            let ser = phi.iter().zip(&sq).filter(|(p, _)| **p >= t).map(|(_, e)| e).sum();
            (t, ser)
        })
        .collect())
}

/// Area under [`ser_curve`] by the trapezoidal rule.
pub fn sera(
    y_true: &[f64],
    y_pred: &[f64],
    relevance: &RelevanceFunction,
    grid_size: usize,
) -> Result<f64, MetricsError> {
    let curve = ser_curve(y_true, y_pred, relevance, grid_size)?;
    Ok(curve
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum())
}

/// `(mae, rmse, r2)`.
pub fn standard_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<(f64, f64, f64), MetricsError> {
    check_lengths(y_true, y_pred, 2)?;
    let n = y_true.len() as f64;
    let mae = y_true.iter().zip(y_pred).map(|(t, p)| (p - t).abs()).sum::<f64>() / n;
    let ss_res: f64 = y_true.iter().zip(y_pred).map(|(t, p)| (p - t) * (p - t)).sum();
    let mean = y_true.iter().sum::<f64>() / n;
    let ss_tot: f64 = y_true.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(MetricsError::DegenerateTargets);
    }
    Ok((mae, (ss_res / n).sqrt(), 1.0 - ss_res / ss_tot))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinError {
    pub lo: f64,
    pub hi: f64,
    /// `None` when no true value falls in the bin.
    pub mse: Option<f64>,
    pub count: usize,
}

/// Mean squared error per equal-width bin of `[lo, hi]` over the true
/// values. Values outside the range go to the end bins; the upper edge
/// belongs to the last bin.
pub fn per_bin_errors(
    y_true: &[f64],
    y_pred: &[f64],
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<Vec<BinError>, MetricsError> {
    check_lengths(y_true, y_pred, 0)?;
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut sums = vec![0.0; bins];
    let mut counts = vec![0usize; bins];
    for (t, p) in y_true.iter().zip(y_pred) {
        let b = if width > 0.0 {
            (((t - lo) / width).floor().max(0.0) as usize).min(bins - 1)
        } else {
            0
        };
        sums[b] += (p - t) * (p - t);
        counts[b] += 1;
    }
    Ok((0..bins)
        .map(|b| BinError {
            lo: lo + width * b as f64,
            hi: if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 },
            mse: (counts[b] > 0).then(|| sums[b] / counts[b] as f64),
            count: counts[b],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub sera: f64,
    pub mae: f64,
    pub rmse: f64,
    pub r2: f64,
    pub bins: Vec<BinError>,
}

impl MetricReport {
    pub fn evaluate(
        y_true: &[f64],
        y_pred: &[f64],
        relevance: &RelevanceFunction,
        bin_range: (f64, f64),
        bins: usize,
    ) -> Result<Self, MetricsError> {
        let (mae, rmse, r2) = standard_metrics(y_true, y_pred)?;
        Ok(Self {
            sera: sera(y_true, y_pred, relevance, DEFAULT_SERA_GRID)?,
            mae,
            rmse,
            r2,
            bins: per_bin_errors(y_true, y_pred, bin_range.0, bin_range.1, bins)?,
        })
    }

    /// MSE of the lowest non-empty bin.
    pub fn lowest_bin_mse(&self) -> Option<f64> {
        self.bins.iter().find_map(|b| b.mse)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Population mean and standard deviation. Empty input gives zeros.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuralStats {
    pub graphs: usize,
    pub nodes: MeanStd,
    pub edges: MeanStd,
    /// Over graphs with at least 2 nodes.
    pub density: MeanStd,
}

pub fn structural_stats<'a>(graphs: impl IntoIterator<Item = &'a Graph>) -> Result<StructuralStats, MetricsError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut density = Vec::new();
    for g in graphs {
        nodes.push(g.node_count() as f64);
        edges.push(g.edge_count() as f64);
        density.extend(g.density());
    }
    if nodes.is_empty() {
        return Err(MetricsError::EmptyCollection);
    }
    Ok(StructuralStats {
        graphs: nodes.len(),
        nodes: MeanStd::of(&nodes),
        edges: MeanStd::of(&edges),
        density: MeanStd::of(&density),
    })
}
