//! Symmetric eigendecomposition via cyclic Jacobi rotations.

use crate::error::{Error, Result};
use crate::linalg::matrix::DenseMatrix;

const EIGEN_MAX_SWEEPS: usize = 60;

/// Eigenpairs of a symmetric matrix, eigenvalues sorted descending (signed),
/// eigenvectors as columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

/// Eigendecomposition of a (numerically) symmetric matrix. The input is
/// symmetrized once up front; callers that care about asymmetry tolerance
/// check it themselves.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<SymmetricEigen> {
    jacobi(a, true).map(|(values, vectors)| SymmetricEigen {
        values,
        vectors: vectors.expect("vectors requested"),
    })
}

/// Eigenvalues only (descending), skipping vector accumulation.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    jacobi(a, false).map(|(values, _)| values)
}

fn jacobi(input: &DenseMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<DenseMatrix>)> {
    if input.rows() != input.cols() {
        return Err(Error::InvalidArgument(format!(
            "symmetric eigendecomposition needs a square matrix, got {}x{}",
            input.rows(),
            input.cols()
        )));
    }
    if !input.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let n = input.rows();
    let mut a = input.symmetrized();
    let mut v = want_vectors.then(|| DenseMatrix::identity(n));
    let scale = a.fro_norm().max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _sweep in 0..EIGEN_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.at(p, q).powi(2);
            }
        }
        if off.sqrt() <= 1e-14 * scale {
            converged = true;
            break;
        }
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let apq = a.at(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let app = a.at(p, p);
                let aqq = a.at(q, q);
                if apq.abs() <= 1e-16 * (app.abs() + aqq.abs()) {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.is_finite() {
                    let s = if theta >= 0.0 { 1.0 } else { -1.0 };
                    s / (theta.abs() + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (2.0 * theta)
                };
                if !t.is_finite() {
                    continue;
                }
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;

                // A ← JᵀAJ on rows/columns p and q.
                for k in 0..n {
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.at(p, k);
                    let aqk = a.at(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                // Re-pin the symmetric zero.
                a.set(p, q, 0.0);
                a.set(q, p, 0.0);

                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v.at(k, p);
                        let vkq = v.at(k, q);
                        v.set(k, p, c * vkp - s * vkq);
                        v.set(k, q, s * vkp + c * vkq);
                    }
                }
            }
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "Jacobi eigendecomposition did not settle within {EIGEN_MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a.at(i, i)).collect();
    order.sort_by(|&x, &y| diag[y].partial_cmp(&diag[x]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| diag[i]).collect();
    let vectors = v.map(|v| {
        let mut out = DenseMatrix::zeros(n, n);
        for (slot, &src) in order.iter().enumerate() {
            let mut col = v.col_to_vec(src);
            // Same orientation rule as the SVD factors.
            let mut idx = 0;
            for (i, x) in col.iter().enumerate() {
                if x.abs() > col[idx].abs() {
                    idx = i;
                }
            }
            if col[idx] < 0.0 {
                for x in col.iter_mut() {
                    *x = -*x;
                }
            }
            out.set_col(slot, &col);
        }
        out
    });
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng::RandomSource;

    #[test]
    fn diagonal_eigenvalues() {
        let a = DenseMatrix::from_diag(&[1.0, 9.0, -2.0]);
        let e = symmetric_eigen(&a).unwrap();
        assert_eq!(e.values.len(), 3);
        assert!((e.values[0] - 9.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        assert!((e.values[2] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn reconstructs_random_symmetric() {
        let mut rng = RandomSource::new(9);
        let g = DenseMatrix::gaussian(12, 12, &mut rng);
        let a = g.symmetrized();
        let e = symmetric_eigen(&a).unwrap();
        let lam = DenseMatrix::from_diag(&e.values);
        let recon = e.vectors.matmul(&lam).matmul(&e.vectors.transpose());
        assert!(recon.max_abs_diff(&a) < 1e-11 * a.fro_norm().max(1.0));
        let vtv = e.vectors.transpose().matmul(&e.vectors);
        assert!(vtv.max_abs_diff(&DenseMatrix::identity(12)) < 1e-11);
    }

    #[test]
    fn values_only_matches_full() {
        let mut rng = RandomSource::new(10);
        let a = DenseMatrix::gaussian(8, 8, &mut rng).symmetrized();
        let full = symmetric_eigen(&a).unwrap();
        let vals = symmetric_eigenvalues(&a).unwrap();
        for (x, y) in full.values.iter().zip(vals.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_preserved() {
        let mut rng = RandomSource::new(123);
        let a = DenseMatrix::gaussian(10, 10, &mut rng).symmetrized();
        let vals = symmetric_eigenvalues(&a).unwrap();
        let tr: f64 = vals.iter().sum();
        assert!((tr - a.trace()).abs() < 1e-10 * a.fro_norm().max(1.0));
    }
}
