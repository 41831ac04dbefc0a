//! Fitting every augmentation component on one training pool.

use crate::boost::BoostParams;
use crate::density::{kde_fit, DensityError, DensityEstimate};
use crate::manifold::{CovRidge, ManifoldError, ManifoldModel};
use crate::reconstruct::{augment, AugmentError, AugmentOutcome, AugmentationConfig, SeedPool};
use crate::relevance::{RelevanceError, RelevanceFunction};
use crate::spectral_map::{effective_k, embed, fit_spectrum_regressor, SpectralEmbedding, SpectralMapError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("relevance: {0}")]
    Relevance(#[from] RelevanceError),
    #[error("density: {0}")]
    Density(#[from] DensityError),
    #[error("spectrum regressor: {0}")]
    SpectralMap(#[from] SpectralMapError),
    #[error("manifold: {0}")]
    Manifold(#[from] ManifoldError),
    #[error("augmentation: {0}")]
    Augment(#[from] AugmentError),
}

/// Everything needed to fit and run the augmenter.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SmhSettings {
    pub augmentation: AugmentationConfig,
    pub regressor: BoostParams,
    pub cov_ridge: CovRidge,
}

#[derive(Debug, Clone)]
pub struct FittedAugmenter {
    pub relevance: RelevanceFunction,
    pub density: DensityEstimate,
    pub manifold: ManifoldModel,
    /// Embedding length actually used (the requested `k` capped at the
    /// smallest training graph).
    pub k: usize,
}

impl FittedAugmenter {
    /// Fits relevance, density, regressor and manifold on `pool` only.
    pub fn fit(pool: &SeedPool, settings: &SmhSettings) -> Result<Self, PipelineError> {
        let cfg = &settings.augmentation;
        let targets = pool.targets();
        let relevance = RelevanceFunction::extremes(&targets)?;
        let density = kde_fit(&targets)?;
        let k = effective_k(cfg.k, pool.entries.iter().map(|e| e.graph.node_count()));
        if k < cfg.k {
            log::info!("embedding length capped at {k} (smallest training graph)");
        }
        let embeddings: Vec<SpectralEmbedding> = pool
            .entries
            .iter()
            .map(|e| embed(&e.decomposition, k, cfg.spectral_mode))
            .collect();
        let regressor =
            fit_spectrum_regressor(&targets, &embeddings, &relevance, &settings.regressor, cfg.master_seed)?;
        let manifold = ManifoldModel::new(regressor, targets, &embeddings, cfg.gamma, settings.cov_ridge)?;
        Ok(Self {
            relevance,
            density,
            manifold,
            k,
        })
    }

    pub fn augment(&self, pool: &SeedPool, config: &AugmentationConfig) -> Result<AugmentOutcome, PipelineError> {
        Ok(augment(pool, &self.manifold, &self.relevance, &self.density, config)?)
    }
}
