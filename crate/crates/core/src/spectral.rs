//! Spectral decomposition of the normalized Laplacian and the graph Fourier
//! transform.

use crate::graph::{default_signal, normalized_laplacian, Graph, GraphError};
use crate::linalg::{symmetric_eigen, LinalgError, Matrix};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("eigensolver failed: {0}")]
    ConvergenceFailure(#[from] LinalgError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Eigenpairs of `L_norm` together with a node signal and its GFT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal; column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: Matrix,
    pub signal: Vec<f64>,
    /// `Uᵀ signal`.
    pub gft_coefficients: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(values) Uᵀ`.
    pub fn synthesize(&self, values: &[f64]) -> Result<Matrix, SpectralError> {
        let n = self.dimension();
        if values.len() != n {
            return Err(SpectralError::DimensionMismatch {
                expected: n,
                got: values.len(),
            });
        }
        let u = &self.eigenvectors;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s: f64 = (0..n).map(|m| u[(i, m)] * values[m] * u[(j, m)]).sum();
                out[(i, j)] = s;
            }
        }
        out.symmetrize_from_upper();
        Ok(out)
    }
}

/// Decomposes `L_norm(g)` and transforms `signal` into the spectral domain.
pub fn spectral_decompose(g: &Graph, signal: &[f64]) -> Result<SpectralDecomposition, SpectralError> {
    if signal.len() != g.node_count() {
        return Err(SpectralError::DimensionMismatch {
            expected: g.node_count(),
            got: signal.len(),
        });
    }
    let laplacian = normalized_laplacian(g)?;
    let eig = symmetric_eigen(&laplacian)?;
    let gft_coefficients = gft(&eig.vectors, signal)?;
    Ok(SpectralDecomposition {
        eigenvalues: eig.values,
        eigenvectors: eig.vectors,
        signal: signal.to_vec(),
        gft_coefficients,
    })
}

/// [`spectral_decompose`] with the unit-norm degree vector as the signal.
pub fn decompose_with_default_signal(g: &Graph) -> Result<SpectralDecomposition, SpectralError> {
    spectral_decompose(g, &default_signal(g))
}

/// Forward GFT, `x̂ = Uᵀ x`.
pub fn gft(basis: &Matrix, signal: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if signal.len() != basis.rows() {
        return Err(SpectralError::DimensionMismatch {
            expected: basis.rows(),
            got: signal.len(),
        });
    }
    Ok(basis.transpose_matvec(signal))
}

/// Inverse GFT, `x̃ = U x̂`. Coefficient vectors must already have the basis
/// dimension; see [`pad_coefficients`].
pub fn inverse_gft(basis: &Matrix, coefficients: &[f64]) -> Result<Vec<f64>, SpectralError> {
    if coefficients.len() != basis.cols() {
        return Err(SpectralError::DimensionMismatch {
            expected: basis.cols(),
            got: coefficients.len(),
        });
    }
    Ok(basis.matvec(coefficients))
}

/// `[s, 0, …, 0]` of length `n`. Longer inputs are rejected.
pub fn pad_coefficients(coefficients: &[f64], n: usize) -> Result<Vec<f64>, SpectralError> {
    if coefficients.len() > n {
        return Err(SpectralError::DimensionMismatch {
            expected: n,
            got: coefficients.len(),
        });
    }
    let mut out = coefficients.to_vec();
    out.resize(n, 0.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decomp(g: &Graph) -> SpectralDecomposition {
        decompose_with_default_signal(g).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn eigenvalue_examples() {
        let edge = Graph::unlabeled(2, [(0, 1)]).unwrap();
        assert_close(&decomp(&edge).eigenvalues, &[0.0, 2.0], 1e-12);

        // det(L - tI) = -t (t - 1)(t - 2) for the 3-path.
        let path = Graph::unlabeled(3, [(0, 1), (1, 2)]).unwrap();
        assert_close(&decomp(&path).eigenvalues, &[0.0, 1.0, 2.0], 1e-12);

        let tri = Graph::unlabeled(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_close(&decomp(&tri).eigenvalues, &[0.0, 1.5, 1.5], 1e-12);
    }

    #[test]
    fn decomposition_invariants() {
        let g = Graph::unlabeled(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (1, 4)]).unwrap();
        let d = decomp(&g);
        let n = d.dimension();
        assert!(d.eigenvalues[0].abs() <= 1e-8);
        assert!(d.eigenvalues.iter().all(|&l| (-1e-8..=2.0 + 1e-8).contains(&l)));
        let u = &d.eigenvectors;
        let gram = u.transpose().matmul(u);
        assert!(gram.sub(&Matrix::identity(n)).frobenius_norm() < 1e-8);
        let rebuilt = d.synthesize(&d.eigenvalues).unwrap();
        let l = normalized_laplacian(&g).unwrap();
        assert!(rebuilt.sub(&l).frobenius_norm() < 1e-8);
    }

    #[test]
    fn decomposition_is_deterministic() {
        let g = Graph::unlabeled(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)]).unwrap();
        assert_eq!(decomp(&g), decomp(&g));
    }

    #[test]
    fn inverse_gft_examples() {
        let g = Graph::unlabeled(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let d = decomp(&g);
        let x = [0.3, -1.2, 2.0, 0.7];
        let coeffs = gft(&d.eigenvectors, &x).unwrap();
        assert_close(&inverse_gft(&d.eigenvectors, &coeffs).unwrap(), &x, 1e-12);

        let e1 = [1.0, 0.0, 0.0, 0.0];
        assert_close(
            &inverse_gft(&d.eigenvectors, &e1).unwrap(),
            &d.eigenvectors.column(0),
            0.0 + f64::EPSILON,
        );
        assert_eq!(inverse_gft(&d.eigenvectors, &[0.0; 4]).unwrap(), vec![0.0; 4]);
        assert_eq!(
            inverse_gft(&d.eigenvectors, &[1.0, 2.0]),
            Err(SpectralError::DimensionMismatch { expected: 4, got: 2 })
        );
    }

    #[test]
    fn padding() {
        assert_eq!(pad_coefficients(&[1.0, 2.0], 4).unwrap(), vec![1.0, 2.0, 0.0, 0.0]);
        assert!(pad_coefficients(&[1.0, 2.0, 3.0], 2).is_err());
    }

    #[test]
    fn signal_length_checked() {
        let g = Graph::unlabeled(2, [(0, 1)]).unwrap();
        assert!(matches!(
            spectral_decompose(&g, &[1.0]),
            Err(SpectralError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn isolated_node_propagates() {
        let g = Graph::unlabeled(3, [(0, 1)]).unwrap();
        assert_eq!(
            decompose_with_default_signal(&g),
            Err(SpectralError::Graph(GraphError::IsolatedNode(2)))
        );
    }
}
