//! Property regressor used to measure the effect of augmentation: boosted
//! trees over a fixed-length vector of topological and spectral features.

use crate::boost::{self, BoostError, BoostParams, Booster, LEARNING_RATE_GRID, MAX_DEPTH_GRID, N_ESTIMATORS_GRID};
use crate::graph::Graph;
use crate::metrics::{sera, MeanStd, MetricsError, DEFAULT_SERA_GRID};
use crate::relevance::RelevanceFunction;
use crate::spectral::{decompose_with_default_signal, SpectralError};
use serde::{Deserialize, Serialize};

/// Eigenvalues included in [`graph_features`] by default.
pub const DEFAULT_FEATURE_EIGENVALUES: usize = 16;
/// Length of the non-spectral prefix of a feature vector.
pub const TOPOLOGY_FEATURES: usize = 5;

/// `[n, m, density, mean degree, degree std, λ_0 .. λ_{k-1}]`, eigenvalues
/// of the normalized Laplacian ascending and zero-padded.
pub fn graph_features(g: &Graph, k: usize) -> Result<Vec<f64>, SpectralError> {
    let decomp = decompose_with_default_signal(g)?;
    Ok(features_with_eigenvalues(g, &decomp.eigenvalues, k))
}

/// [`graph_features`] with precomputed eigenvalues.
pub fn features_with_eigenvalues(g: &Graph, eigenvalues: &[f64], k: usize) -> Vec<f64> {
    let degrees: Vec<f64> = g.degrees().into_iter().map(|d| d as f64).collect();
    let deg = MeanStd::of(&degrees);
    let mut out = Vec::with_capacity(TOPOLOGY_FEATURES + k);
    out.extend([
        g.node_count() as f64,
        g.edge_count() as f64,
        g.density().unwrap_or(0.0),
        deg.mean,
        deg.std,
    ]);
    out.extend(eigenvalues.iter().take(k));
    out.resize(TOPOLOGY_FEATURES + k, 0.0);
    out
}

pub const DEFAULT_VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DownstreamConfig {
    /// Eigenvalues per feature vector.
    pub k: usize,
    /// Used as is when `search` is off; otherwise supplies the fields the
    /// grid does not cover.
    pub params: BoostParams,
    /// Choose estimators, learning rate and depth from the grid by SERA on
    /// a held-out part of the training split.
    pub search: bool,
    pub validation_fraction: f64,
}

impl Default for DownstreamConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_FEATURE_EIGENVALUES,
            params: BoostParams {
                max_depth: 5,
                ..Default::default()
            },
            search: true,
            validation_fraction: DEFAULT_VALIDATION_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DownstreamError {
    #[error("downstream training set is empty")]
    InsufficientData,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownstreamModel {
    pub k: usize,
    pub booster: Booster,
}

impl DownstreamModel {
    pub fn predict_features(&self, features: &[f64]) -> f64 {
        self.booster.predict(features)
    }

    pub fn predict(&self, g: &Graph) -> Result<f64, SpectralError> {
        Ok(self.predict_features(&graph_features(g, self.k)?))
    }
}

/// Fits on precomputed feature vectors with uniform weights.
pub fn fit_downstream_features(
    features: &[Vec<f64>],
    targets: &[f64],
    config: &DownstreamConfig,
    seed: u64,
) -> Result<DownstreamModel, DownstreamError> {
    if features.is_empty() {
        return Err(DownstreamError::InsufficientData);
    }
    let weights = vec![1.0; features.len()];
    Ok(DownstreamModel {
        k: config.k,
        booster: boost::fit(features, targets, &weights, &config.params, seed)?,
    })
}

pub fn fit_downstream(
    graphs: &[&Graph],
    targets: &[f64],
    config: &DownstreamConfig,
    seed: u64,
) -> Result<DownstreamModel, DownstreamError> {
    let features = graphs
        .iter()
        .map(|g| graph_features(g, config.k))
        .collect::<Result<Vec<_>, _>>()?;
    fit_downstream_features(&features, targets, config, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub params: BoostParams,
    pub validation_sera: f64,
}

/// Grid point with the lowest validation SERA (first in grid order on
/// ties). One ensemble with the largest estimator count is fitted per
/// learning rate and depth; smaller counts are scored on its prefixes.
pub fn select_params(
    train_x: &[Vec<f64>],
    train_y: &[f64],
    valid_x: &[Vec<f64>],
    valid_y: &[f64],
    relevance: &RelevanceFunction,
    base: &BoostParams,
    seed: u64,
) -> Result<Selection, DownstreamError> {
    if train_x.is_empty() {
        return Err(DownstreamError::InsufficientData);
    }
    let max_rounds = *N_ESTIMATORS_GRID.iter().max().expect("grid is non-empty");
    let weights = vec![1.0; train_x.len()];
    let mut best: Option<Selection> = None;
    for &learning_rate in &LEARNING_RATE_GRID {
        for &max_depth in &MAX_DEPTH_GRID {
            let params = BoostParams {
                n_estimators: max_rounds,
                learning_rate,
                max_depth,
                subsample: 1.0,
                ..base.clone()
            };
            let model = boost::fit(train_x, train_y, &weights, &params, seed)?;
            for &rounds in &N_ESTIMATORS_GRID {
                let pred: Vec<f64> = valid_x.iter().map(|x| model.predict_truncated(x, rounds)).collect();
                let score = sera(valid_y, &pred, relevance, DEFAULT_SERA_GRID)?;
                if best.as_ref().is_none_or(|b| score < b.validation_sera) {
                    best = Some(Selection {
                        params: BoostParams {
                            n_estimators: rounds,
                            ..params.clone()
                        },
                        validation_sera: score,
                    });
                }
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
