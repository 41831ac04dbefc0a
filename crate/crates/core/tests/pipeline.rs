mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use smh::boost::BoostParams;
use smh::experiment::{run_experiment, ExperimentConfig};
use smh::pipeline::{FittedAugmenter, SmhSettings};
use smh::reconstruct::SeedPool;
use smh::relevance::RelevanceFunction;
use smh::spectral_map::{fit_spectrum_regressor, fit_spectrum_regressor_weighted, SpectralEmbedding, SpectralMode};

/// Targets with a sparse left tail. Below -2 the embedding follows a
/// different law than in the bulk.
fn two_law_data(seed: u64) -> (Vec<f64>, Vec<SpectralEmbedding>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let exp = Exp::new(1.0).unwrap();
    let targets: Vec<f64> = (0..300).map(|_| -rng.sample::<f64, _>(exp)).collect();
    let embeddings = targets
        .iter()
        .map(|&y| {
            let law = if y < -2.0 {
                [(4.0 * y).sin(), (3.0 * y).cos(), y * y / 10.0]
            } else {
                [y, -0.5 * y, 0.2]
            };
            SpectralEmbedding {
                coefficients: law
                    .iter()
                    .map(|v| v + 0.05 * rng.sample::<f64, _>(StandardNormal))
                    .collect(),
                true_dimension: 3,
                mode: SpectralMode::Gft,
            }
        })
        .collect();
    (targets, embeddings)
}

#[test]
fn relevance_weighting_lowers_tail_error() {
    let params = BoostParams {
        n_estimators: 20,
        ..Default::default()
    };
    let mut better = 0;
    for seed in 0..20 {
        let (targets, embeddings) = two_law_data(seed);
        let rel = RelevanceFunction::extremes(&targets).unwrap();
        let weighted = fit_spectrum_regressor(&targets, &embeddings, &rel, &params, seed).unwrap();
        let uniform =
            fit_spectrum_regressor_weighted(&targets, &embeddings, &vec![1.0; targets.len()], &params, seed).unwrap();
        let tail_error = |m: &smh::spectral_map::SpectrumRegressor| -> f64 {
            targets
                .iter()
                .zip(&embeddings)
                .filter(|(y, _)| **y < -2.0)
                .map(|(&y, e)| {
                    let p = m.predict_raw(y);
                    rel.eval(y) * p.iter().zip(&e.coefficients).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
                })
                .sum()
        };
        if tail_error(&weighted) < tail_error(&uniform) {
            better += 1;
        }
    }
    assert!(better >= 16, "weighted fit better on the tail for {better}/20 seeds");
}

#[test]
fn regressor_serialization_is_deterministic() {
    let (targets, embeddings) = two_law_data(3);
    let rel = RelevanceFunction::extremes(&targets).unwrap();
    let params = BoostParams {
        subsample: 0.7,
        ..Default::default()
    };
    let a = fit_spectrum_regressor(&targets, &embeddings, &rel, &params, 11).unwrap();
    let b = fit_spectrum_regressor(&targets, &embeddings, &rel, &params, 11).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = fit_spectrum_regressor(&targets, &embeddings, &rel, &params, 12).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn augmentation_is_a_pure_function_of_its_inputs() {
    let ds = common::load("FreeSolv.csv");
    let pool = SeedPool::from_dataset(&ds).unwrap();
    let mut settings = SmhSettings::default();
    settings.augmentation.master_seed = 5;
    let run = || {
        let fitted = FittedAugmenter::fit(&pool, &settings).unwrap();
        fitted.augment(&pool, &settings.augmentation).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.samples.len(), b.samples.len());
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert_eq!(x.graph, y.graph);
        assert_eq!(x.target.to_bits(), y.target.to_bits());
        assert_eq!(x.seed_graph_index, y.seed_graph_index);
    }
    for s in &a.samples {
        assert!(s.graph.first_isolated_node().is_none());
        assert!(s.graph.edges().iter().all(|&(i, j)| i < j));
        assert!(s.graph.node_count() <= pool.entries[s.seed_graph_index].graph.node_count());
    }
}

#[test]
fn every_fold_shifts_targets_toward_relevant_region() {
    let ds = common::load("FreeSolv.csv");
    let pool = SeedPool::from_dataset(&ds).unwrap();
    let mut cfg = ExperimentConfig::default();
    cfg.downstream.search = false;
    let report = run_experiment(&ds, &pool, &cfg).unwrap();
    assert_eq!(report.folds.len(), 5);
    let mut seen = vec![false; ds.len()];
    for f in &report.folds {
        assert!(
            f.relevance_shift.synthetic > f.relevance_shift.train,
            "fold {}: {:?}",
            f.fold,
            f.relevance_shift
        );
        assert_eq!(f.train_size + f.test_rows.len(), ds.len());
        assert_eq!(f.smh_train_size, f.train_size + f.synthetic_generated);
        for &r in &f.test_rows {
            assert!(!seen[r], "row {r} tested twice");
            seen[r] = true;
        }
        for m in [&f.baseline, &f.smh] {
            assert!(m.rmse >= m.mae && m.sera >= 0.0);
        }
    }
    assert!(seen.iter().all(|&s| s));
    assert_eq!(
        report.baseline.sera.mean,
        report.folds.iter().map(|f| f.baseline.sera).sum::<f64>() / 5.0
    );
}
