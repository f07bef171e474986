//! Small dense symmetric-matrix helpers used throughout the crate.

use nalgebra::{DMatrix, DVector};

/// Eigenvalue clip below which a symmetric PSD matrix is treated as rank-deficient.
pub const EIGEN_CLIP: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix, returned as (values, vectors).
///
/// Columns of the returned matrix are the eigenvectors matching the value order.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

/// Symmetric square root and its generalized inverse.
///
/// Eigenvalues below `clip` are treated as exactly zero, so the inverse factor
/// annihilates the (numerical) nullspace: this is the generalized-inverse
/// convention used for rank-deficient per-group Gram matrices.
pub fn sym_sqrt_and_pinv(m: &DMatrix<f64>, clip: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (vals, vecs) = sym_eigen(m);
    let k = vals.len();
    let mut sqrt_diag = DVector::zeros(k);
    let mut pinv_diag = DVector::zeros(k);
    for i in 0..k {
        if vals[i] > clip {
            let r = vals[i].sqrt();
            sqrt_diag[i] = r;
            pinv_diag[i] = 1.0 / r;
        }
    }
    let sqrt = &vecs * DMatrix::from_diagonal(&sqrt_diag) * vecs.transpose();
    let pinv = &vecs * DMatrix::from_diagonal(&pinv_diag) * vecs.transpose();
    (sqrt, pinv)
}

/// Moore–Penrose inverse of a symmetric matrix, with eigenvalues below `clip`
/// treated as exactly zero.
pub fn sym_pinv(m: &DMatrix<f64>, clip: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen(m);
    let mut inv_diag = DVector::zeros(vals.len());
    for i in 0..vals.len() {
        if vals[i].abs() > clip {
            inv_diag[i] = 1.0 / vals[i];
        }
    }
    &vecs * DMatrix::from_diagonal(&inv_diag) * vecs.transpose()
}

/// Solve the symmetric positive (semi)definite system `K x = b`.
///
/// Attempts a Cholesky factorization first; on failure falls back to a
/// minimum-norm solve through the eigendecomposition with eigenvalues below
/// `clip` zeroed. Returns the solution and whether the fallback was used.
pub fn solve_spd_or_min_norm(
    k: &DMatrix<f64>,
    b: &DVector<f64>,
    clip: f64,
) -> (DVector<f64>, bool) {
    if let Some(chol) = k.clone().cholesky() {
        (chol.solve(b), false)
    } else {
        let (vals, vecs) = sym_eigen(k);
        let mut coefs = vecs.transpose() * b;
        for i in 0..vals.len() {
            if vals[i] > clip {
                coefs[i] /= vals[i];
            } else {
                coefs[i] = 0.0;
            }
        }
        (vecs * coefs, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_recomposes() {
        // A = Bᵀ B is PSD; the symmetric root must square back to it.
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.5, 0.0, 1.0, -1.0, 2.0, 0.3, 0.7]);
        let a = b.transpose() * &b;
        let (s, _) = sym_sqrt_and_pinv(&a, EIGEN_CLIP);
        let err = (&s * &s - &a).abs().max();
        assert!(err < 1e-10, "recomposition error {err}");
    }

    #[test]
    fn pinv_projects_onto_range() {
        // Rank-1 PSD matrix: pinv(sqrt)·sqrt must be the orthogonal projector onto the range.
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let a = &v * v.transpose();
        let (s, si) = sym_sqrt_and_pinv(&a, EIGEN_CLIP);
        let p = &si * &s;
        let err = (&p * &p - &p).abs().max();
        assert!(err < 1e-8, "projector not idempotent: {err}");
        // Projector acts as identity on the range vector.
        let pv = &p * &v;
        assert!((&pv - &v).norm() < 1e-8);
    }

    #[test]
    fn min_norm_fallback_flags() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 0.0]);
        let (x, min_norm) = solve_spd_or_min_norm(&a, &b, EIGEN_CLIP);
        assert!(min_norm);
        assert!((x[0] - 2.0).abs() < 1e-12 && x[1].abs() < 1e-12);
    }
}
