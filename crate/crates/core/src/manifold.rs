//! Conditional Gaussian over spectral embeddings, `s | y ~ N(μ(y), Σ(y))`.
//!
//! `μ(y)` is the spectrum regressor's prediction. `Σ(y)` is the
//! kernel-weighted scatter of the training embeddings around `μ(y)`, with
//! weights `w_i(y) ∝ exp(-γ (y - y_i)^2)`, plus a small ridge.

use crate::linalg::{cholesky, Matrix};
use crate::spectral_map::{project_eigenvalues, SpectralEmbedding, SpectralMode, SpectrumRegressor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Ridge escalations (each ×10) tried after the first failed factorization.
pub const RIDGE_ESCALATIONS: u32 = 4;
const AUTO_RIDGE_SCALE: f64 = 1e-6;
const AUTO_RIDGE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManifoldError {
    #[error("gamma must be positive and finite, got {0}")]
    InvalidGamma(f64),
    #[error("covariance ridge must be positive and finite, got {0}")]
    InvalidRidge(f64),
    #[error("manifold needs at least one training sample")]
    Empty,
    #[error("{targets} targets but {embeddings} embeddings")]
    LengthMismatch { targets: usize, embeddings: usize },
    #[error("embedding {index} has length {got}, regressor emits {expected}")]
    DimensionMismatch { index: usize, expected: usize, got: usize },
    #[error("non-finite training target {0}")]
    NonFiniteTarget(f64),
    #[error("covariance at y = {y} is not positive definite even with ridge {ridge}")]
    CholeskyFailure { y: f64, ridge: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum CovRidge {
    /// `max(1e-6 · trace(Σ_unridged) / k, 1e-9)`, recomputed for each `y`.
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    /// Lower-triangular factor of `covariance`.
    pub cholesky: Matrix,
    pub ridge: f64,
}

impl ConditionalGaussian {
    /// `mean + L z` with `z` standard normal.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let k = self.mean.len();
        let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let lz = self.cholesky.matvec(&z);
        self.mean.iter().zip(lz).map(|(m, d)| m + d).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldModel {
    regressor: SpectrumRegressor,
    targets: Vec<f64>,
    embeddings: Vec<Vec<f64>>,
    gamma: f64,
    ridge: CovRidge,
}

impl ManifoldModel {
    pub fn new(
        regressor: SpectrumRegressor,
        targets: Vec<f64>,
        embeddings: &[SpectralEmbedding],
        gamma: f64,
        ridge: CovRidge,
    ) -> Result<Self, ManifoldError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(ManifoldError::InvalidGamma(gamma));
        }
        if let CovRidge::Fixed(r) = ridge {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ManifoldError::InvalidRidge(r));
            }
        }
        if targets.is_empty() {
            return Err(ManifoldError::Empty);
        }
        if targets.len() != embeddings.len() {
            return Err(ManifoldError::LengthMismatch {
                targets: targets.len(),
                embeddings: embeddings.len(),
            });
        }
        if let Some(&bad) = targets.iter().find(|t| !t.is_finite()) {
            return Err(ManifoldError::NonFiniteTarget(bad));
        }
        let k = regressor.k();
        if let Some((index, e)) = embeddings.iter().enumerate().find(|(_, e)| e.len() != k) {
            return Err(ManifoldError::DimensionMismatch {
                index,
                expected: k,
                got: e.len(),
            });
        }
        Ok(Self {
            regressor,
            targets,
            embeddings: embeddings.iter().map(|e| e.coefficients.clone()).collect(),
            gamma,
            ridge,
        })
    }

    pub fn regressor(&self) -> &SpectrumRegressor {
        &self.regressor
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> usize {
        self.regressor.k()
    }

    pub fn mode(&self) -> SpectralMode {
        self.regressor.mode()
    }

    /// `w_i(y) = K(y, y_i) / Σ_j K(y, y_j)`. If every kernel underflows, the
    /// weight goes to the nearest target(s), split evenly between ties.
    pub fn kernel_weights(&self, y: f64) -> Vec<f64> {
        let kernel: Vec<f64> = self
            .targets
            .iter()
            .map(|&t| (-self.gamma * (y - t) * (y - t)).exp())
            .collect();
        let total: f64 = kernel.iter().sum();
        if total > 0.0 {
            return kernel.into_iter().map(|v| v / total).collect();
        }
        let best = self.targets.iter().map(|t| (y - t).abs()).fold(f64::INFINITY, f64::min);
        let nearest: Vec<bool> = self.targets.iter().map(|t| (y - t).abs() == best).collect();
        let count = nearest.iter().filter(|&&b| b).count() as f64;
        nearest.into_iter().map(|b| if b { 1.0 / count } else { 0.0 }).collect()
    }

    /// `μ(y)` from the regressor.
    pub fn mean(&self, y: f64) -> Vec<f64> {
        self.regressor.predict_spectrum(y).coefficients
    }

    /// `Σ_i w_i(y) (s_i - μ)(s_i - μ)^T` without the ridge.
    pub fn weighted_scatter(&self, y: f64, mean: &[f64]) -> Matrix {
        let k = mean.len();
        let weights = self.kernel_weights(y);
        let mut cov = Matrix::zeros(k, k);
        let mut diff = vec![0.0; k];
        for (w, s) in weights.iter().zip(&self.embeddings) {
            if *w == 0.0 {
                continue;
            }
            for (d, (a, m)) in diff.iter_mut().zip(s.iter().zip(mean)) {
                *d = a - m;
            }
            for a in 0..k {
                let wd = w * diff[a];
                for b in a..k {
                    cov[(a, b)] += wd * diff[b];
                }
            }
        }
        cov.symmetrize_from_upper();
        cov
    }

    fn base_ridge(&self, scatter: &Matrix) -> f64 {
        match self.ridge {
            CovRidge::Fixed(r) => r,
            CovRidge::Auto => (AUTO_RIDGE_SCALE * scatter.trace() / scatter.rows() as f64).max(AUTO_RIDGE_FLOOR),
        }
    }

    /// `Σ(y)` including the ridge.
    pub fn conditional_covariance(&self, y: f64) -> Matrix {
        let mean = self.mean(y);
        let scatter = self.weighted_scatter(y, &mean);
        let ridge = self.base_ridge(&scatter);
        add_ridge(&scatter, ridge)
    }

    /// Mean, covariance and Cholesky factor at `y`. A failed factorization
    /// is retried with the ridge multiplied by 10, up to
    /// [`RIDGE_ESCALATIONS`] times.
    pub fn conditional(&self, y: f64) -> Result<ConditionalGaussian, ManifoldError> {
        let mean = self.mean(y);
        let scatter = self.weighted_scatter(y, &mean);
        let mut ridge = self.base_ridge(&scatter);
        for attempt in 0..=RIDGE_ESCALATIONS {
            let covariance = add_ridge(&scatter, ridge);
            match cholesky(&covariance) {
                Ok(l) => {
                    return Ok(ConditionalGaussian {
                        mean,
                        covariance,
                        cholesky: l,
                        ridge,
                    })
                }
                Err(_) if attempt < RIDGE_ESCALATIONS => {
                    log::debug!("covariance at y = {y} not PD with ridge {ridge}; escalating");
                    ridge *= 10.0;
                }
                Err(_) => break,
            }
        }
        Err(ManifoldError::CholeskyFailure { y, ridge })
    }

    /// One draw from `N(μ(y), Σ(y))` using a generator seeded with `seed`.
    pub fn sample_spectrum(&self, y: f64, seed: u64) -> Result<SpectralEmbedding, ManifoldError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gaussian = self.conditional(y)?;
        Ok(self.finish(gaussian.draw(&mut rng)))
    }

    /// Applies the eigenvalue projection (when in that mode) to a raw draw.
    pub fn finish(&self, mut coefficients: Vec<f64>) -> SpectralEmbedding {
        if self.mode() == SpectralMode::Eigenvalues {
            project_eigenvalues(&mut coefficients);
        }
        SpectralEmbedding {
            true_dimension: coefficients.len(),
            coefficients,
            mode: self.mode(),
        }
    }
}

fn add_ridge(scatter: &Matrix, ridge: f64) -> Matrix {
    let mut m = scatter.clone();
    let k = m.rows();
    for i in 0..k {
        m[(i, i)] += ridge;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boost::BoostParams;
    use crate::spectral_map::fit_spectrum_regressor_weighted;

    fn emb(values: &[f64], mode: SpectralMode) -> SpectralEmbedding {
        SpectralEmbedding {
            coefficients: values.to_vec(),
            true_dimension: values.len(),
            mode,
        }
    }

    fn model(targets: &[f64], embs: &[SpectralEmbedding], gamma: f64, ridge: CovRidge) -> ManifoldModel {
        let reg = fit_spectrum_regressor_weighted(targets, embs, &vec![1.0; targets.len()], &BoostParams::default(), 0)
            .unwrap();
        ManifoldModel::new(reg, targets.to_vec(), embs, gamma, ridge).unwrap()
    }

    #[test]
    fn kernel_weight_examples() {
        let embs = vec![emb(&[0.1], SpectralMode::Gft), emb(&[0.2], SpectralMode::Gft)];
        let m = model(&[0.0, 1.0], &embs, 1.0, CovRidge::Auto);
        assert_eq!(m.kernel_weights(0.5), vec![0.5, 0.5]);
        let w = m.kernel_weights(0.0);
        let e = (-1.0f64).exp();
        assert!((w[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((w[1] - e / (1.0 + e)).abs() < 1e-15);

        let sharp = model(&[0.0, 1.0], &embs, 1e4, CovRidge::Auto);
        assert!(sharp.kernel_weights(1.0)[1] > 1.0 - 1e-12);
    }

    #[test]
    fn underflow_falls_back_to_nearest() {
        let embs: Vec<_> = (0..3).map(|i| emb(&[i as f64], SpectralMode::Gft)).collect();
        let m = model(&[0.0, 1.0, 2.0], &embs, 1.0, CovRidge::Auto);
        assert_eq!(m.kernel_weights(1e4), vec![0.0, 0.0, 1.0]);
        assert_eq!(m.kernel_weights(-1e4), vec![1.0, 0.0, 0.0]);
        let tie = model(&[0.0, 0.0, 2.0], &embs, 1.0, CovRidge::Auto);
        assert_eq!(tie.kernel_weights(-1e4), vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn identical_embeddings_give_ridge_covariance() {
        let c = [0.0, 0.4, 1.1];
        let embs: Vec<_> = (0..5).map(|_| emb(&c, SpectralMode::Eigenvalues)).collect();
        let m = model(&[0.0, 1.0, 2.0, 3.0, 4.0], &embs, 1.0, CovRidge::Fixed(1e-3));
        let cov = m.conditional_covariance(1.5);
        let expected = Matrix::identity(3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[(i, j)] - 1e-3 * expected[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_sample_covariance() {
        let embs = vec![
            emb(&[0.3, -0.2], SpectralMode::Gft),
            emb(&[0.5, 0.1], SpectralMode::Gft),
        ];
        let reg = fit_spectrum_regressor_weighted(&[0.0, 1.0], &embs, &[1.0, 1.0], &BoostParams::default(), 0).unwrap();
        let m = ManifoldModel::new(reg, vec![0.0], &embs[..1], 1.0, CovRidge::Fixed(0.01)).unwrap();
        let mu = m.mean(0.0);
        let d = [0.3 - mu[0], -0.2 - mu[1]];
        let cov = m.conditional_covariance(0.0);
        for i in 0..2 {
            for j in 0..2 {
                let ridge = if i == j { 0.01 } else { 0.0 };
                assert!((cov[(i, j)] - (d[i] * d[j] + ridge)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn auto_ridge_has_floor() {
        let embs: Vec<_> = (0..3).map(|_| emb(&[0.5, 0.5], SpectralMode::Gft)).collect();
        let m = model(&[0.0, 1.0, 2.0], &embs, 1.0, CovRidge::Auto);
        let g = m.conditional(1.0).unwrap();
        assert_eq!(g.ridge, 1e-9);
    }

    #[test]
    fn sampling_is_seeded_and_projected() {
        let embs: Vec<_> = (0..8)
            .map(|i| emb(&[0.0, 0.2 * i as f64, 0.25 * i as f64], SpectralMode::Eigenvalues))
            .collect();
        let targets: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let m = model(&targets, &embs, 0.5, CovRidge::Auto);
        let a = m.sample_spectrum(3.0, 42).unwrap();
        assert_eq!(a, m.sample_spectrum(3.0, 42).unwrap());
        assert_ne!(a, m.sample_spectrum(3.0, 43).unwrap());
        for seed in 0..50 {
            let s = m.sample_spectrum(2.0, seed).unwrap().coefficients;
            assert!(s.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.iter().all(|v| (0.0..=2.0).contains(v)));
        }
    }

    #[test]
    fn tiny_covariance_samples_near_mean() {
        let c = [0.2, 0.9];
        let embs: Vec<_> = (0..4).map(|_| emb(&c, SpectralMode::Gft)).collect();
        let m = model(&[0.0, 1.0, 2.0, 3.0], &embs, 1.0, CovRidge::Fixed(1e-20));
        let s = m.sample_spectrum(1.0, 5).unwrap();
        for (a, b) in s.coefficients.iter().zip(c) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn constructor_validation() {
        let embs = vec![emb(&[0.1], SpectralMode::Gft), emb(&[0.2], SpectralMode::Gft)];
        let reg = fit_spectrum_regressor_weighted(&[0.0, 1.0], &embs, &[1.0, 1.0], &BoostParams::default(), 0).unwrap();
        let new = |g, r, t: Vec<f64>| ManifoldModel::new(reg.clone(), t, &embs[..], g, r);
        assert_eq!(
            new(0.0, CovRidge::Auto, vec![0.0, 1.0]),
            Err(ManifoldError::InvalidGamma(0.0))
        );
        assert_eq!(
            new(1.0, CovRidge::Fixed(0.0), vec![0.0, 1.0]),
            Err(ManifoldError::InvalidRidge(0.0))
        );
        assert!(matches!(
            new(1.0, CovRidge::Auto, vec![0.0]),
            Err(ManifoldError::LengthMismatch { .. })
        ));
    }
}
