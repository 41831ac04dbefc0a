//! K-fold comparison of a downstream regressor trained with and without
//! synthetic graphs.
//!
//! Every component of the augmenter is fitted on the training split of a
//! fold only. Test rows are never seen by relevance, density, manifold or
//! augmentation, and never receive synthetic data.

use crate::dataset::Dataset;
use crate::downstream::{
    features_with_eigenvalues, fit_downstream_features, select_params, DownstreamConfig, DownstreamError, Selection,
};
use crate::metrics::{structural_stats, MeanStd, MetricReport, MetricsError, StructuralStats, DEFAULT_BINS};
use crate::pipeline::{FittedAugmenter, PipelineError, SmhSettings};
use crate::reconstruct::{AugmentOutcome, SeedPool};
use crate::spectral::{decompose_with_default_signal, SpectralError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub folds: usize,
    pub bins: usize,
    pub smh: SmhSettings,
    pub downstream: DownstreamConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            folds: DEFAULT_FOLDS,
            bins: DEFAULT_BINS,
            smh: SmhSettings::default(),
            downstream: DownstreamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExperimentError {
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("{rows} rows cannot fill {folds} folds")]
    TooFewRows { rows: usize, folds: usize },
    #[error("seed pool has {pool} entries for {rows} dataset rows")]
    PoolMismatch { pool: usize, rows: usize },
    #[error("fold {fold}: {source}")]
    Fold { fold: usize, source: FoldError },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FoldError {
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("synthetic graph: {0}")]
    Spectral(#[from] SpectralError),
    #[error("downstream: {0}")]
    Downstream(#[from] DownstreamError),
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceShift {
    /// Fraction of training targets with `φ ≥ 0.5`.
    pub train: f64,
    /// Fraction of synthetic targets with `φ ≥ 0.5`.
    pub synthetic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    /// Dataset positions of the test rows.
    pub test_rows: Vec<usize>,
    pub train_size: usize,
    pub synthetic_requested: usize,
    pub synthetic_generated: usize,
    pub smh_train_size: usize,
    pub embedding_k: usize,
    /// Downstream hyperparameters picked on the inner validation split
    /// (absent when the search is off).
    pub baseline_selection: Option<Selection>,
    pub smh_selection: Option<Selection>,
    pub baseline: MetricReport,
    pub smh: MetricReport,
    pub seed_stats: Option<StructuralStats>,
    pub synthetic_stats: Option<StructuralStats>,
    pub relevance_shift: RelevanceShift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub sera: MeanStd,
    pub mae: MeanStd,
    pub rmse: MeanStd,
    pub r2: MeanStd,
    /// Over folds whose lowest non-empty bin exists.
    pub lowest_bin_mse: MeanStd,
}

impl AggregateMetrics {
    fn of(reports: &[&MetricReport]) -> Self {
        let pick = |f: fn(&MetricReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        let low: Vec<f64> = reports.iter().filter_map(|r| r.lowest_bin_mse()).collect();
        Self {
            sera: pick(|r| r.sera),
            mae: pick(|r| r.mae),
            rmse: pick(|r| r.rmse),
            r2: pick(|r| r.r2),
            lowest_bin_mse: MeanStd::of(&low),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub rows: usize,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    /// Equal-width bins span this range of the dataset targets.
    pub bin_range: (f64, f64),
    pub folds: Vec<FoldReport>,
    pub baseline: AggregateMetrics,
    pub smh: AggregateMetrics,
}

/// Shuffles `0..n` with `seed` and cuts it into `folds` contiguous chunks
/// whose sizes differ by at most one.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    order.shuffle(&mut rng);
    (0..folds)
        .map(|f| order[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect()
}

/// Runs the experiment. `pool` must be [`SeedPool::from_dataset`] of
/// `dataset` (it is passed in so decompositions can be shared).
pub fn run_experiment(
    dataset: &Dataset,
    pool: &SeedPool,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    let n = dataset.len();
    if config.folds < 2 {
        return Err(ExperimentError::TooFewFolds(config.folds));
    }
    if n < config.folds {
        return Err(ExperimentError::TooFewRows {
            rows: n,
            folds: config.folds,
        });
    }
    if pool.len() != n {
        return Err(ExperimentError::PoolMismatch {
            pool: pool.len(),
            rows: n,
        });
    }
    let master_seed = config.smh.augmentation.master_seed;
    let targets = dataset.targets();
    let lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let features: Vec<Vec<f64>> = pool
        .entries
        .iter()
        .map(|e| features_with_eigenvalues(&e.graph, &e.decomposition.eigenvalues, config.downstream.k))
        .collect();
    let partition = fold_partition(n, config.folds, master_seed);

    let folds = partition
        .par_iter()
        .enumerate()
        .map(|(fold, test_rows)| {
            run_fold(pool, &features, config, fold, test_rows, (lo, hi))
                .map_err(|source| ExperimentError::Fold { fold, source })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let baseline = AggregateMetrics::of(&folds.iter().map(|f| &f.baseline).collect::<Vec<_>>());
    let smh = AggregateMetrics::of(&folds.iter().map(|f| &f.smh).collect::<Vec<_>>());
    Ok(ExperimentReport {
        dataset: dataset.name.clone(),
        rows: n,
        master_seed,
        config: config.clone(),
        bin_range: (lo, hi),
        folds,
        baseline,
        smh,
    })
}

fn run_fold(
    pool: &SeedPool,
    features: &[Vec<f64>],
    config: &ExperimentConfig,
    fold: usize,
    test_rows: &[usize],
    bin_range: (f64, f64),
) -> Result<FoldReport, FoldError> {
    let seed = config.smh.augmentation.master_seed.wrapping_add(fold as u64);
    let test_set: HashSet<usize> = test_rows.iter().copied().collect();
    let train_rows: Vec<usize> = (0..pool.len()).filter(|i| !test_set.contains(i)).collect();
    let train_pool = pool.subset(&train_rows);

    let mut settings = config.smh.clone();
    settings.augmentation.master_seed = seed;
    let augmenter = FittedAugmenter::fit(&train_pool, &settings)?;
    let outcome = augmenter.augment(&train_pool, &settings.augmentation)?;

    // Leakage guard: fitting and seeding only ever touched training rows.
    let fitted_rows: HashSet<usize> = train_pool.entries.iter().map(|e| e.index).collect();
    assert!(
        fitted_rows.is_disjoint(&test_set),
        "fold {fold}: test rows used for fitting"
    );
    assert!(
        outcome.samples.iter().all(|s| !test_set.contains(&s.seed_graph_index)),
        "fold {fold}: synthetic sample seeded from a test row"
    );

    let train_x: Vec<Vec<f64>> = train_rows.iter().map(|&i| features[i].clone()).collect();
    let train_y: Vec<f64> = train_rows.iter().map(|&i| pool.entries[i].target).collect();
    let (mut smh_x, mut smh_y) = (train_x.clone(), train_y.clone());
    append_synthetic(&outcome, config.downstream.k, &mut smh_x, &mut smh_y)?;

    let (baseline_selection, smh_selection) = if config.downstream.search {
        let (b, s) = select_downstream(&train_pool, features, &settings, config, seed)?;
        (Some(b), Some(s))
    } else {
        (None, None)
    };
    let with_params = |sel: &Option<Selection>| DownstreamConfig {
        params: sel
            .as_ref()
            .map_or_else(|| config.downstream.params.clone(), |s| s.params.clone()),
        ..config.downstream.clone()
    };
    let baseline_model = fit_downstream_features(&train_x, &train_y, &with_params(&baseline_selection), seed)?;
    let smh_model = fit_downstream_features(&smh_x, &smh_y, &with_params(&smh_selection), seed)?;
    let test_y: Vec<f64> = test_rows.iter().map(|&i| pool.entries[i].target).collect();
    let predict = |m: &crate::downstream::DownstreamModel| -> Vec<f64> {
        test_rows.iter().map(|&i| m.predict_features(&features[i])).collect()
    };
    let rel = &augmenter.relevance;
    let baseline = MetricReport::evaluate(&test_y, &predict(&baseline_model), rel, bin_range, config.bins)?;
    let smh = MetricReport::evaluate(&test_y, &predict(&smh_model), rel, bin_range, config.bins)?;

    let seeds: Vec<_> = outcome
        .samples
        .iter()
        .map(|s| &pool.entries[s.seed_graph_index].graph)
        .collect();
    let high = |ys: &mut dyn Iterator<Item = f64>| {
        let (mut hit, mut total) = (0usize, 0usize);
        for y in ys {
            total += 1;
            hit += usize::from(rel.eval(y) >= 0.5);
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    };
    let relevance_shift = RelevanceShift {
        train: high(&mut train_y.iter().copied()),
        synthetic: high(&mut outcome.samples.iter().map(|s| s.target)),
    };

    Ok(FoldReport {
        fold,
        seed,
        test_rows: test_rows.to_vec(),
        train_size: train_rows.len(),
        synthetic_requested: outcome.requested,
        synthetic_generated: outcome.samples.len(),
        smh_train_size: smh_y.len(),
        embedding_k: augmenter.k,
        baseline_selection,
        smh_selection,
        baseline,
        smh,
        seed_stats: structural_stats(seeds.iter().copied()).ok(),
        synthetic_stats: structural_stats(outcome.samples.iter().map(|s| &s.graph)).ok(),
        relevance_shift,
    })
}

fn append_synthetic(
    outcome: &AugmentOutcome,
    k: usize,
    xs: &mut Vec<Vec<f64>>,
    ys: &mut Vec<f64>,
) -> Result<(), SpectralError> {
    for s in &outcome.samples {
        let decomp = decompose_with_default_signal(&s.graph)?;
        xs.push(features_with_eigenvalues(&s.graph, &decomp.eigenvalues, k));
        ys.push(s.target);
    }
    Ok(())
}

/// Splits the training pool into an inner training part and a validation
/// part, refits the augmenter on the inner part and picks downstream
/// hyperparameters for the baseline and the augmented model separately.
fn select_downstream(
    train_pool: &SeedPool,
    features: &[Vec<f64>],
    settings: &SmhSettings,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(Selection, Selection), FoldError> {
    let n = train_pool.len();
    let n_valid =
        ((n as f64 * config.downstream.validation_fraction).round() as usize).clamp(1, n.saturating_sub(2).max(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    order.shuffle(&mut rng);
    let (valid, inner) = order.split_at(n_valid);
    let inner_pool = train_pool.subset(inner);
    let augmenter = FittedAugmenter::fit(&inner_pool, settings)?;
    let outcome = augmenter.augment(&inner_pool, &settings.augmentation)?;

    let rows = |positions: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        positions
            .iter()
            .map(|&p| {
                let e = &train_pool.entries[p];
                (features[e.index].clone(), e.target)
            })
            .unzip()
    };
    let (inner_x, inner_y) = rows(inner);
    let (valid_x, valid_y) = rows(valid);
    let (mut aug_x, mut aug_y) = (inner_x.clone(), inner_y.clone());
    append_synthetic(&outcome, config.downstream.k, &mut aug_x, &mut aug_y)?;

    let rel = &augmenter.relevance;
    let base = &config.downstream.params;
    let baseline = select_params(&inner_x, &inner_y, &valid_x, &valid_y, rel, base, seed)?;
    let smh = select_params(&aug_x, &aug_y, &valid_x, &valid_y, rel, base, seed)?;
    Ok((baseline, smh))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_is_disjoint_cover() {
        let p = fold_partition(100, 5, 3);
        assert!(p.iter().all(|f| f.len() == 20));
        let mut all: Vec<usize> = p.concat();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        assert_eq!(p, fold_partition(100, 5, 3));
        assert_ne!(p, fold_partition(100, 5, 4));

        let uneven = fold_partition(7, 3, 0);
        let sizes: Vec<usize> = uneven.iter().map(Vec::len).collect();
        assert_eq!(sizes.iter().sum::<usize>(), 7);
        assert!(sizes.iter().all(|&s| s == 2 || s == 3));
    }
}
