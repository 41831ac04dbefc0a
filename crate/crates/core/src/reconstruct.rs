//! Turning sampled spectra back into graphs.
//!
//! Augmentation draws target values in proportion to `φ(y) / (p(y) + eps)`,
//! picks the training graph with the nearest target as a seed, samples an
//! embedding from the manifold at the drawn target and rebuilds an adjacency
//! matrix in the seed's eigenbasis.

use crate::dataset::Dataset;
use crate::density::{sampling_weight, DensityEstimate};
use crate::graph::{Graph, GraphError, Provenance};
use crate::manifold::{ManifoldError, ManifoldModel};
use crate::relevance::RelevanceFunction;
use crate::spectral::{decompose_with_default_signal, SpectralDecomposition, SpectralError};
use crate::spectral_map::{SpectralEmbedding, SpectralMode, DEFAULT_K};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Extra attempts after an empty reconstruction before a sample is dropped.
pub const DEFAULT_RETRY_BUDGET: usize = 10;
/// Entries of `I - L̃` this close to zero are treated as exactly zero.
pub const SNAP_TOLERANCE: f64 = 1e-10;
/// Default binarization cutoff on sigmoid edge scores.
pub const DEFAULT_CUTOFF: f64 = 0.55;
pub const DEFAULT_SAMPLING_FRACTION: f64 = 0.2;
pub const DEFAULT_GAMMA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetJitter {
    None,
    /// Gaussian noise with the KDE bandwidth as standard deviation.
    #[default]
    KdeBandwidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub sampling_fraction: f64,
    pub binarization_cutoff: f64,
    pub gamma: f64,
    pub eps: f64,
    pub k: usize,
    pub spectral_mode: SpectralMode,
    pub master_seed: u64,
    pub target_jitter: TargetJitter,
    pub retry_budget: usize,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            sampling_fraction: DEFAULT_SAMPLING_FRACTION,
            binarization_cutoff: DEFAULT_CUTOFF,
            gamma: DEFAULT_GAMMA,
            eps: crate::density::DEFAULT_EPS,
            k: DEFAULT_K,
            spectral_mode: SpectralMode::Eigenvalues,
            master_seed: 0,
            target_jitter: TargetJitter::KdeBandwidth,
            retry_budget: DEFAULT_RETRY_BUDGET,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.sampling_fraction > 0.0 && self.sampling_fraction <= 1.0) {
            return Err(format!("sampling_fraction {} not in (0, 1]", self.sampling_fraction));
        }
        if !(self.binarization_cutoff > 0.0 && self.binarization_cutoff < 1.0) {
            return Err(format!(
                "binarization_cutoff {} not in (0, 1)",
                self.binarization_cutoff
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(format!("gamma {} must be positive", self.gamma));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(format!("eps {} must be positive", self.eps));
        }
        if self.k == 0 {
            return Err("k must be at least 1".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("every training target has zero sampling weight")]
    AllZeroWeights,
    #[error("no edge survives the cutoff")]
    EmptyGraph,
    #[error("spectrum has length {got}, expected at most {expected} or a padded vector")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("seed pool is empty")]
    EmptyPool,
    #[error("invalid augmentation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A training graph with its cached decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGraph {
    /// Position in the dataset the pool was built from.
    pub index: usize,
    pub graph: Graph,
    pub target: f64,
    pub decomposition: SpectralDecomposition,
}

/// Graphs available as reconstruction seeds, in dataset order.
#[derive(Debug, Clone, Default)]
pub struct SeedPool {
    pub entries: Vec<Arc<PreparedGraph>>,
}

impl SeedPool {
    /// Decomposes every record of `dataset`.
    pub fn from_dataset(dataset: &Dataset) -> Result<Self, SpectralError> {
        let entries = dataset
            .records
            .par_iter()
            .enumerate()
            .map(|(index, r)| {
                Ok(Arc::new(PreparedGraph {
                    index,
                    graph: r.graph.clone(),
                    target: r.target,
                    decomposition: decompose_with_default_signal(&r.graph)?,
                }))
            })
            .collect::<Result<Vec<_>, SpectralError>>()?;
        Ok(Self { entries })
    }

    /// Entries at the given pool positions.
    pub fn subset(&self, positions: &[usize]) -> Self {
        Self {
            entries: positions.iter().map(|&p| Arc::clone(&self.entries[p])).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.target).collect()
    }

    pub fn min_node_count(&self) -> Option<usize> {
        self.entries.iter().map(|e| e.graph.node_count()).min()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSample {
    pub graph: Graph,
    pub target: f64,
    pub spectrum: SpectralEmbedding,
    /// [`PreparedGraph::index`] of the seed.
    pub seed_graph_index: usize,
}

/// Draws `count` targets with probability proportional to `weight(y_i)`,
/// with replacement, then optionally adds `N(0, jitter_sd^2)` noise.
pub fn sample_targets(
    weight: impl Fn(f64) -> f64,
    train_targets: &[f64],
    count: usize,
    jitter_sd: Option<f64>,
    seed: u64,
) -> Result<Vec<f64>, AugmentError> {
    let weights: Vec<f64> = train_targets.iter().map(|&y| weight(y)).collect();
    let dist = WeightedIndex::new(&weights).map_err(|_| AugmentError::AllZeroWeights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let noise = jitter_sd.and_then(|sd| Normal::new(0.0, sd).ok());
    Ok((0..count)
        .map(|_| {
            let y = train_targets[dist.sample(&mut rng)];
            match &noise {
                Some(n) => y + n.sample(&mut rng),
                None => y,
            }
        })
        .collect())
}

/// Pool position of the entry whose target is nearest `y` (lowest
/// position on ties).
pub fn select_seed_graph(pool: &SeedPool, y: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (pos, e) in pool.entries.iter().enumerate() {
        let d = (e.target - y).abs();
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((pos, d));
        }
    }
    best.map(|(pos, _)| pos)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Dense sigmoid edge scores before thresholding (diagonal left at zero).
pub fn edge_scores(basis: &SpectralDecomposition, spectrum: &SpectralEmbedding) -> Result<Vec<Vec<f64>>, AugmentError> {
    let n = basis.dimension();
    let raw = match spectrum.mode {
        SpectralMode::Eigenvalues => {
            let mut values: Vec<f64> = spectrum.coefficients.iter().take(n).copied().collect();
            values.extend_from_slice(&basis.eigenvalues[values.len()..]);
            let l = basis.synthesize(&values)?;
            (0..n)
                .map(|i| (0..n).map(|j| -l[(i, j)]).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        }
        SpectralMode::Gft => {
            let mut coeffs: Vec<f64> = spectrum.coefficients.iter().take(n).copied().collect();
            coeffs.resize(n, 0.0);
            let x = basis.eigenvectors.matvec(&coeffs);
            (0..n)
                .map(|i| (0..n).map(|j| x[i] * x[j]).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        }
    };
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(j, v)| {
                    if i == j {
                        0.0
                    } else if v.abs() <= SNAP_TOLERANCE {
                        0.5
                    } else {
                        sigmoid(v)
                    }
                })
                .collect()
        })
        .collect())
}

/// Rebuilds a graph in the seed's eigenbasis.
///
/// Eigenvalue mode forms `L̃ = U diag(λ̃) Uᵀ`, padding the spectrum with the
/// seed's own trailing eigenvalues, and scores pair `(i, j)` by
/// `σ((I - L̃)_ij)`. GFT mode forms `x̃ = U [s, 0]` and scores by
/// `σ(x̃_i x̃_j)`. An edge is kept when its score is strictly above `cutoff`
/// (scores within [`SNAP_TOLERANCE`] of 0.5 count as exactly 0.5).
/// Isolated nodes are dropped afterwards.
pub fn reconstruct_graph(
    basis: &SpectralDecomposition,
    spectrum: &SpectralEmbedding,
    cutoff: f64,
    labels: &[String],
) -> Result<Graph, AugmentError> {
    let n = basis.dimension();
    if labels.len() != n {
        return Err(AugmentError::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let scores = edge_scores(basis, spectrum)?;
    let mut edges = Vec::new();
    for (i, row) in scores.iter().enumerate() {
        for (j, &s) in row.iter().enumerate().skip(i + 1) {
            if s > cutoff {
                edges.push((i, j));
            }
        }
    }
    if edges.is_empty() {
        return Err(AugmentError::EmptyGraph);
    }
    let g = Graph::new(labels.to_vec(), edges)?;
    g.without_isolated_nodes().ok_or(AugmentError::EmptyGraph)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedSample {
    pub sample_index: usize,
    pub target: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentOutcome {
    pub requested: usize,
    pub samples: Vec<SyntheticSample>,
    pub skipped: Vec<SkippedSample>,
}

/// Generates `round(sampling_fraction × N)` synthetic graphs.
///
/// Targets come from one generator seeded with `master_seed`; sample `i`
/// then draws its spectra from a generator seeded with `master_seed + i`.
pub fn augment(
    pool: &SeedPool,
    model: &ManifoldModel,
    relevance: &RelevanceFunction,
    density: &DensityEstimate,
    config: &AugmentationConfig,
) -> Result<AugmentOutcome, AugmentError> {
    config.validate().map_err(AugmentError::InvalidConfig)?;
    if pool.is_empty() {
        return Err(AugmentError::EmptyPool);
    }
    let requested = (config.sampling_fraction * pool.len() as f64).round() as usize;
    if requested == 0 {
        return Ok(AugmentOutcome {
            requested,
            samples: Vec::new(),
            skipped: Vec::new(),
        });
    }
    let jitter = match config.target_jitter {
        TargetJitter::None => None,
        TargetJitter::KdeBandwidth => Some(density.bandwidth()),
    };
    let targets = sample_targets(
        |y| sampling_weight(relevance, density, y, config.eps),
        &pool.targets(),
        requested,
        jitter,
        config.master_seed,
    )?;

    let results: Vec<Result<SyntheticSample, SkippedSample>> = targets
        .par_iter()
        .enumerate()
        .map(|(i, &y)| generate_one(pool, model, config, i, y))
        .collect();
    let mut samples = Vec::new();
    let mut skipped = Vec::new();
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(s) => {
                log::warn!(
                    "synthetic sample {} (y = {}) skipped: {}",
                    s.sample_index,
                    s.target,
                    s.reason
                );
                skipped.push(s);
            }
        }
    }
    Ok(AugmentOutcome {
        requested,
        samples,
        skipped,
    })
}

fn generate_one(
    pool: &SeedPool,
    model: &ManifoldModel,
    config: &AugmentationConfig,
    sample_index: usize,
    y: f64,
) -> Result<SyntheticSample, SkippedSample> {
    let skip = |reason: String| SkippedSample {
        sample_index,
        target: y,
        reason,
    };
    let pos = select_seed_graph(pool, y).expect("pool is non-empty");
    let seed = &pool.entries[pos];
    let gaussian = model.conditional(y).map_err(|e: ManifoldError| skip(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.master_seed.wrapping_add(sample_index as u64));
    for _ in 0..=config.retry_budget {
        let spectrum = model.finish(gaussian.draw(&mut rng));
        match reconstruct_graph(
            &seed.decomposition,
            &spectrum,
            config.binarization_cutoff,
            seed.graph.labels(),
        ) {
            Ok(graph) => {
                return Ok(SyntheticSample {
                    graph: graph.with_provenance(Provenance::Synthetic {
                        seed_graph: Some(seed.index),
                    }),
                    target: y,
                    spectrum,
                    seed_graph_index: seed.index,
                })
            }
            Err(AugmentError::EmptyGraph) => continue,
            Err(e) => return Err(skip(e.to_string())),
        }
    }
    Err(skip(format!(
        "no edges survived after {} attempts",
        config.retry_budget + 1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_map::embed;

    fn decomp(n: usize, edges: &[(usize, usize)]) -> (Graph, SpectralDecomposition) {
        let g = Graph::unlabeled(n, edges.iter().copied()).unwrap();
        let d = decompose_with_default_signal(&g).unwrap();
        (g, d)
    }

    fn gft(values: Vec<f64>) -> SpectralEmbedding {
        SpectralEmbedding {
            true_dimension: values.len(),
            coefficients: values,
            mode: SpectralMode::Gft,
        }
    }

    #[test]
    fn zero_signal_scores_are_one_half() {
        let (g, d) = decomp(4, &[(0, 1), (1, 2), (2, 3)]);
        let s = gft(vec![0.0; 4]);
        let complete = reconstruct_graph(&d, &s, 0.3, g.labels()).unwrap();
        assert_eq!(complete.edge_count(), 6);
        assert_eq!(
            reconstruct_graph(&d, &s, 0.6, g.labels()),
            Err(AugmentError::EmptyGraph)
        );
    }

    #[test]
    fn own_spectrum_reproduces_seed() {
        let cases: [(usize, &[(usize, usize)]); 4] = [
            (3, &[(0, 1), (1, 2)]),
            (4, &[(0, 1), (1, 2), (2, 3), (3, 0)]),
            (5, &[(0, 1), (0, 2), (0, 3), (0, 4)]),
            (6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3)]),
        ];
        for (n, edges) in cases {
            let (g, d) = decomp(n, edges);
            for k in 1..=n {
                let s = embed(&d, k, SpectralMode::Eigenvalues);
                let r = reconstruct_graph(&d, &s, 0.5, g.labels()).unwrap();
                assert_eq!(r.edges(), g.edges(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn isolated_nodes_are_removed_and_labels_follow() {
        // Path 0-1-2 with labels; a signal concentrated on nodes 0 and 1.
        let g = Graph::new(vec!["N".into(), "C".into(), "O".into()], [(0, 1), (1, 2)]).unwrap();
        let d = decompose_with_default_signal(&g).unwrap();
        let x = [3.0, 3.0, -3.0];
        let coeffs = d.eigenvectors.transpose_matvec(&x);
        let r = reconstruct_graph(&d, &gft(coeffs), 0.9, g.labels()).unwrap();
        assert_eq!(r.node_count(), 2);
        assert_eq!(r.labels(), &["N".to_string(), "C".to_string()]);
        assert_eq!(r.edges(), &[(0, 1)]);
    }

    #[test]
    fn seed_selection_rules() {
        let mut entries = Vec::new();
        for (index, t) in [2.0, 0.0, 1.0, 4.0].into_iter().enumerate() {
            let (graph, decomposition) = decomp(2, &[(0, 1)]);
            entries.push(Arc::new(PreparedGraph {
                index,
                graph,
                target: t,
                decomposition,
            }));
        }
        let pool = SeedPool { entries };
        assert_eq!(select_seed_graph(&pool, 1.0), Some(2));
        assert_eq!(select_seed_graph(&pool, 3.0), Some(0));
        assert_eq!(select_seed_graph(&pool, -7.0), Some(1));
        assert_eq!(select_seed_graph(&SeedPool::default(), 0.0), None);
    }

    #[test]
    fn target_sampling_examples() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let all_one = sample_targets(|y| if y == 3.0 { 1.0 } else { 0.0 }, &t, 50, None, 1).unwrap();
        assert!(all_one.iter().all(|&y| y == 3.0));
        let never = sample_targets(|y| if y == 1.0 { 0.0 } else { 1.0 }, &t[..2], 200, None, 2).unwrap();
        assert!(never.iter().all(|&y| y == 2.0));
        assert_eq!(
            sample_targets(|_| 0.0, &t, 5, None, 0),
            Err(AugmentError::AllZeroWeights)
        );
        let a = sample_targets(|_| 1.0, &t, 20, Some(0.1), 9).unwrap();
        assert_eq!(a, sample_targets(|_| 1.0, &t, 20, Some(0.1), 9).unwrap());
        assert!(a.iter().all(|y| !t.contains(y)));
    }

    #[test]
    fn uniform_sampling_frequencies() {
        let t = [0.0, 1.0, 2.0, 3.0];
        let draws = sample_targets(|_| 1.0, &t, 100_000, None, 3).unwrap();
        for v in t {
            let freq = draws.iter().filter(|&&y| y == v).count() as f64 / 1e5;
            assert!((freq - 0.25).abs() < 0.02, "{v}: {freq}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(AugmentationConfig::default().validate().is_ok());
        let bad = AugmentationConfig {
            binarization_cutoff: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = AugmentationConfig {
            sampling_fraction: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
