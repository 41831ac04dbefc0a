//! Fixed-length spectral embeddings and the target-to-spectrum regressor.
//!
//! The regressor is `k` independent boosted-tree ensembles, one per
//! embedding coordinate, each trained on `y -> s_j` with relevance weights.

use crate::boost::{self, BoostError, BoostParams, Booster};
use crate::relevance::RelevanceFunction;
use crate::spectral::SpectralDecomposition;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Default embedding length before capping at the smallest graph size.
pub const DEFAULT_K: usize = 32;
/// Leading tag of a serialized [`SpectrumRegressor`].
pub const MODEL_MAGIC: &str = "SMHM1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralMode {
    /// The `k` smallest normalized-Laplacian eigenvalues.
    #[default]
    Eigenvalues,
    /// The first `k` graph Fourier coefficients of the node signal.
    Gft,
}

impl fmt::Display for SpectralMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectralMode::Eigenvalues => "eigenvalues",
            SpectralMode::Gft => "gft",
        })
    }
}

impl FromStr for SpectralMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eigenvalues" => Ok(SpectralMode::Eigenvalues),
            "gft" | "gft_coefficients" => Ok(SpectralMode::Gft),
            other => Err(format!("unknown spectral mode {other:?} (expected eigenvalues or gft)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralEmbedding {
    pub coefficients: Vec<f64>,
    /// Number of entries taken from the graph before zero padding.
    pub true_dimension: usize,
    pub mode: SpectralMode,
}

impl SpectralEmbedding {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }
}

/// Truncates or zero-pads the decomposition's spectrum to length `k`.
///
/// # Panics
/// If `k == 0`.
pub fn embed(decomp: &SpectralDecomposition, k: usize, mode: SpectralMode) -> SpectralEmbedding {
    assert!(k >= 1, "embedding length must be at least 1");
    let source = match mode {
        SpectralMode::Eigenvalues => &decomp.eigenvalues,
        SpectralMode::Gft => &decomp.gft_coefficients,
    };
    let true_dimension = source.len().min(k);
    let mut coefficients = source[..true_dimension].to_vec();
    coefficients.resize(k, 0.0);
    SpectralEmbedding {
        coefficients,
        true_dimension,
        mode,
    }
}

/// `requested` capped at the smallest node count among `sizes`.
pub fn effective_k(requested: usize, sizes: impl IntoIterator<Item = usize>) -> usize {
    sizes.into_iter().fold(requested, usize::min).max(1)
}

/// Clamps to `[0, 2]` and sorts ascending.
pub fn project_eigenvalues(values: &mut [f64]) {
    for v in values.iter_mut() {
        *v = v.clamp(0.0, 2.0);
    }
    values.sort_by(f64::total_cmp);
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralMapError {
    #[error("need at least 2 training samples, got {0}")]
    InsufficientData(usize),
    #[error("{targets} targets but {embeddings} embeddings")]
    CountMismatch { targets: usize, embeddings: usize },
    #[error("embedding {index} has length {got}, expected {expected}")]
    InconsistentK { index: usize, expected: usize, got: usize },
    #[error("embedding {index} is in {got} mode, expected {expected}")]
    InconsistentMode {
        index: usize,
        expected: SpectralMode,
        got: SpectralMode,
    },
    #[error("non-finite target {0}")]
    NonFiniteTarget(f64),
    #[error(transparent)]
    Boost(#[from] BoostError),
    #[error("not a spectrum model: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    /// `(1/N) Σ φ_i ||s_i - f(y_i)||^2` after 0, 1, …, T boosting rounds.
    pub weighted_loss: Vec<f64>,
    /// `α/2 Σ v^2` over every leaf value `v` of every tree.
    pub regularization: f64,
    /// Last entry of `weighted_loss` plus `regularization`.
    pub final_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRegressor {
    magic: String,
    k: usize,
    mode: SpectralMode,
    params: BoostParams,
    seed: u64,
    ensembles: Vec<Booster>,
    summary: TrainingSummary,
}

impl SpectrumRegressor {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn mode(&self) -> SpectralMode {
        self.mode
    }

    pub fn params(&self) -> &BoostParams {
        &self.params
    }

    pub fn summary(&self) -> &TrainingSummary {
        &self.summary
    }

    /// Raw ensemble outputs, without the eigenvalue projection.
    pub fn predict_raw(&self, y: f64) -> Vec<f64> {
        self.ensembles.iter().map(|e| e.predict(&[y])).collect()
    }

    /// `μ(y)`. In eigenvalue mode the output is clamped to `[0, 2]` and
    /// sorted.
    pub fn predict_spectrum(&self, y: f64) -> SpectralEmbedding {
        let mut coefficients = self.predict_raw(y);
        if self.mode == SpectralMode::Eigenvalues {
            project_eigenvalues(&mut coefficients);
        }
        SpectralEmbedding {
            coefficients,
            true_dimension: self.k,
            mode: self.mode,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("regressor is always serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, SpectralMapError> {
        let model: Self = serde_json::from_str(s).map_err(|e| SpectralMapError::Format(e.to_string()))?;
        if model.magic != MODEL_MAGIC {
            return Err(SpectralMapError::Format(format!("bad magic {:?}", model.magic)));
        }
        if model.ensembles.len() != model.k {
            return Err(SpectralMapError::Format(format!(
                "{} ensembles for k = {}",
                model.ensembles.len(),
                model.k
            )));
        }
        Ok(model)
    }
}

/// Fits with weights `φ(y_i)`, rescaled to mean 1 over the positive ones.
pub fn fit_spectrum_regressor(
    targets: &[f64],
    embeddings: &[SpectralEmbedding],
    relevance: &RelevanceFunction,
    params: &BoostParams,
    seed: u64,
) -> Result<SpectrumRegressor, SpectralMapError> {
    if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
        return Err(SpectralMapError::NonFiniteTarget(bad));
    }
    let phi: Vec<f64> = targets.iter().map(|&y| relevance.eval(y)).collect();
    fit_spectrum_regressor_weighted(targets, embeddings, &phi, params, seed)
}

/// Fits with arbitrary non-negative per-sample weights. The reported loss
/// uses `weights` as given; the ensembles see them rescaled to mean 1 over
/// the positive entries.
pub fn fit_spectrum_regressor_weighted(
    targets: &[f64],
    embeddings: &[SpectralEmbedding],
    weights: &[f64],
    params: &BoostParams,
    seed: u64,
) -> Result<SpectrumRegressor, SpectralMapError> {
    let n = targets.len();
    if n < 2 {
        return Err(SpectralMapError::InsufficientData(n));
    }
    if embeddings.len() != n || weights.len() != n {
        return Err(SpectralMapError::CountMismatch {
            targets: n,
            embeddings: embeddings.len(),
        });
    }
    if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
        return Err(SpectralMapError::NonFiniteTarget(bad));
    }
    let k = embeddings[0].len();
    let mode = embeddings[0].mode;
    for (index, e) in embeddings.iter().enumerate() {
        if e.len() != k || k == 0 {
            return Err(SpectralMapError::InconsistentK {
                index,
                expected: k,
                got: e.len(),
            });
        }
        if e.mode != mode {
            return Err(SpectralMapError::InconsistentMode {
                index,
                expected: mode,
                got: e.mode,
            });
        }
    }

    let positive: Vec<f64> = weights.iter().copied().filter(|&w| w > 0.0).collect();
    let scale = if positive.is_empty() {
        1.0
    } else {
        positive.iter().sum::<f64>() / positive.len() as f64
    };
    let normalized: Vec<f64> = weights.iter().map(|w| w / scale).collect();
    let features: Vec<Vec<f64>> = targets.iter().map(|&y| vec![y]).collect();

    let ensembles = (0..k)
        .into_par_iter()
        .map(|j| {
            let column: Vec<f64> = embeddings.iter().map(|e| e.coefficients[j]).collect();
            boost::fit(&features, &column, &normalized, params, seed.wrapping_add(j as u64))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rounds = params.n_estimators + 1;
    let weighted_loss: Vec<f64> = (0..rounds)
        .map(|t| scale * ensembles.iter().map(|e| e.loss_history[t]).sum::<f64>() / n as f64)
        .collect();
    let regularization = 0.5 * params.l2 * ensembles.iter().map(Booster::leaf_square_sum).sum::<f64>();
    let final_loss = weighted_loss[rounds - 1] + regularization;

    Ok(SpectrumRegressor {
        magic: MODEL_MAGIC.to_string(),
        k,
        mode,
        params: params.clone(),
        seed,
        ensembles,
        summary: TrainingSummary {
            weighted_loss,
            regularization,
            final_loss,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::spectral::decompose_with_default_signal;

    fn emb(values: &[f64], mode: SpectralMode) -> SpectralEmbedding {
        SpectralEmbedding {
            coefficients: values.to_vec(),
            true_dimension: values.len(),
            mode,
        }
    }

    #[test]
    fn embed_examples() {
        let tri = decompose_with_default_signal(&Graph::unlabeled(3, [(0, 1), (1, 2), (0, 2)]).unwrap()).unwrap();
        let e = embed(&tri, 3, SpectralMode::Eigenvalues);
        let expected = [0.0, 1.5, 1.5];
        for (a, b) in e.coefficients.iter().zip(expected) {
            assert!((a - b).abs() < 1e-10);
        }
        assert_eq!(e.true_dimension, 3);

        let edge = decompose_with_default_signal(&Graph::unlabeled(2, [(0, 1)]).unwrap()).unwrap();
        let e = embed(&edge, 4, SpectralMode::Eigenvalues);
        assert_eq!(e.true_dimension, 2);
        assert!(e.coefficients[0].abs() < 1e-12);
        assert!((e.coefficients[1] - 2.0).abs() < 1e-12);
        assert_eq!(&e.coefficients[2..], &[0.0, 0.0]);

        let e = embed(&tri, 1, SpectralMode::Eigenvalues);
        assert!(e.coefficients[0].abs() < 1e-12);

        let g = embed(&tri, 2, SpectralMode::Gft);
        assert_eq!(g.coefficients, tri.gft_coefficients[..2].to_vec());
    }

    #[test]
    fn effective_k_caps_at_smallest_graph() {
        assert_eq!(effective_k(32, [5, 9, 3]), 3);
        assert_eq!(effective_k(4, [5, 9]), 4);
        assert_eq!(effective_k(32, []), 32);
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("gft".parse::<SpectralMode>(), Ok(SpectralMode::Gft));
        assert_eq!("eigenvalues".parse::<SpectralMode>(), Ok(SpectralMode::Eigenvalues));
        assert!("laplacian".parse::<SpectralMode>().is_err());
        assert_eq!(SpectralMode::Gft.to_string(), "gft");
    }

    #[test]
    fn constant_embeddings_predict_constant() {
        let targets: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 2.0).collect();
        let c = [0.0, 0.7, 1.3];
        let embs: Vec<_> = targets.iter().map(|_| emb(&c, SpectralMode::Eigenvalues)).collect();
        let rel = RelevanceFunction::extremes(&targets).unwrap();
        let r = fit_spectrum_regressor(&targets, &embs, &rel, &BoostParams::default(), 0).unwrap();
        for y in [-10.0, 0.0, 1.1, 50.0] {
            let p = r.predict_spectrum(y);
            for (a, b) in p.coefficients.iter().zip(c) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn identical_targets_give_same_prediction_everywhere() {
        let targets = [1.0; 6];
        let embs: Vec<_> = (0..6)
            .map(|i| emb(&[0.0, i as f64 * 0.2], SpectralMode::Eigenvalues))
            .collect();
        let r = fit_spectrum_regressor_weighted(&targets, &embs, &[1.0; 6], &BoostParams::default(), 0).unwrap();
        assert_eq!(r.predict_spectrum(-5.0), r.predict_spectrum(9.0));
    }

    #[test]
    fn two_clusters_beat_constant_predictor() {
        let mut targets = Vec::new();
        let mut embs = Vec::new();
        for i in 0..20 {
            let low = i < 10;
            targets.push(if low {
                -3.0 + i as f64 * 0.01
            } else {
                2.0 + i as f64 * 0.01
            });
            embs.push(emb(
                if low { &[0.0, 0.5] } else { &[0.0, 1.5] },
                SpectralMode::Eigenvalues,
            ));
        }
        let rel = RelevanceFunction::extremes(&targets).unwrap();
        let params = BoostParams {
            max_depth: 10,
            ..Default::default()
        };
        let r = fit_spectrum_regressor(&targets, &embs, &rel, &params, 0).unwrap();
        let loss = &r.summary().weighted_loss;
        assert_eq!(loss.len(), params.n_estimators + 1);
        assert!(loss.last().unwrap() < &loss[0]);
        assert!(loss.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let s = r.summary();
        assert!((s.final_loss - (loss[loss.len() - 1] + s.regularization)).abs() < 1e-15);
    }

    #[test]
    fn eigenvalue_predictions_are_projected() {
        let targets = [0.0, 1.0, 2.0, 3.0];
        let embs: Vec<_> = [[2.5, -1.0], [2.4, -0.5], [2.6, -0.7], [2.2, -0.1]]
            .iter()
            .map(|c| emb(c, SpectralMode::Eigenvalues))
            .collect();
        let r = fit_spectrum_regressor_weighted(&targets, &embs, &[1.0; 4], &BoostParams::default(), 0).unwrap();
        for y in [-1.0, 0.5, 2.5, 7.0] {
            let p = r.predict_spectrum(y).coefficients;
            assert!(p.windows(2).all(|w| w[0] <= w[1]));
            assert!(p.iter().all(|v| (0.0..=2.0).contains(v)));
        }
    }

    #[test]
    fn serialization_round_trip() {
        let targets = [0.0, 1.0, 2.0, 3.0, 4.0];
        let embs: Vec<_> = targets
            .iter()
            .map(|&y| emb(&[y * 0.1, y * 0.2], SpectralMode::Gft))
            .collect();
        let rel = RelevanceFunction::extremes(&targets).unwrap();
        let r = fit_spectrum_regressor(&targets, &embs, &rel, &BoostParams::default(), 7).unwrap();
        let json = r.to_json();
        assert!(json.starts_with("{\"magic\":\"SMHM1\""));
        let back = SpectrumRegressor::from_json(&json).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), json);
        let forged = json.replacen("SMHM1", "XXXX1", 1);
        assert!(matches!(
            SpectrumRegressor::from_json(&forged),
            Err(SpectralMapError::Format(_))
        ));
    }

    #[test]
    fn fit_errors() {
        let rel = RelevanceFunction::extremes(&[0.0, 1.0]).unwrap();
        let p = BoostParams::default();
        let one = [emb(&[0.0], SpectralMode::Eigenvalues)];
        assert_eq!(
            fit_spectrum_regressor(&[0.0], &one, &rel, &p, 0),
            Err(SpectralMapError::InsufficientData(1))
        );
        let two = [
            emb(&[0.0], SpectralMode::Eigenvalues),
            emb(&[0.0, 1.0], SpectralMode::Eigenvalues),
        ];
        assert!(matches!(
            fit_spectrum_regressor(&[0.0, 1.0], &two, &rel, &p, 0),
            Err(SpectralMapError::InconsistentK { index: 1, .. })
        ));
        let ok = [
            emb(&[0.0], SpectralMode::Eigenvalues),
            emb(&[0.0], SpectralMode::Eigenvalues),
        ];
        assert!(matches!(
            fit_spectrum_regressor(&[0.0, f64::NAN], &ok, &rel, &p, 0),
            Err(SpectralMapError::NonFiniteTarget(_))
        ));
    }
}
