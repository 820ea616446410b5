//! Full singular value decomposition via one-sided Jacobi rotations.
//!
//! The contract is accuracy, not algorithm: reconstruction residual below
//! `1e-10 · ‖W‖_F` and factor orthonormality below `1e-10` entrywise, for
//! any matrix whose smaller dimension is at most [`SVD_DIM_CAP`]. One-sided
//! Jacobi is used because it reaches high relative accuracy across widely
//! scaled spectra with little code.

use crate::error::{Error, Result};
use crate::linalg::matrix::{dot, DenseMatrix};

/// Desk-scale oracle contract: `min(rows, cols)` must not exceed this.
pub const SVD_DIM_CAP: usize = 1024;

/// Jacobi sweep budget; exceeding it is a hard numerical error rather than a
/// silently partial result.
pub const SVD_MAX_SWEEPS: usize = 60;

const PAIR_TOL: f64 = 1e-14;

/// Truncated or full set of singular triplets, σ descending, factors with
/// orthonormal columns. `left` is `rows × k`, `right` is `cols × k`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub sigma: Vec<f64>,
    pub left: DenseMatrix,
    pub right: DenseMatrix,
}

impl SvdFactors {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    /// `Σ σ_i u_i v_iᵀ`.
    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n, k) = (self.left.rows(), self.right.rows(), self.k());
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut acc = 0.0;
                for t in 0..k {
                    acc += self.sigma[t] * self.left.at(i, t) * self.right.at(j, t);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    /// `‖W − Σ σ u vᵀ‖_F`.
    pub fn residual(&self, w: &DenseMatrix) -> f64 {
        w.sub(&self.reconstruct()).fro_norm()
    }

    /// Largest entrywise deviation of `leftᵀleft` and `rightᵀright` from I.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for factor in [&self.left, &self.right] {
            let k = self.k();
            for a in 0..k {
                let ca = factor.col_to_vec(a);
                for b in a..k {
                    let cb = factor.col_to_vec(b);
                    let g = dot(&ca, &cb);
                    let target = if a == b { 1.0 } else { 0.0 };
                    worst = worst.max((g - target).abs());
                }
            }
        }
        worst
    }

    /// Keep the top `k` triplets.
    pub fn truncated(&self, k: usize) -> SvdFactors {
        assert!(k <= self.k());
        let left = DenseMatrix::from_fn(self.left.rows(), k, |i, j| self.left.at(i, j));
        let right = DenseMatrix::from_fn(self.right.rows(), k, |i, j| self.right.at(i, j));
        SvdFactors { sigma: self.sigma[..k].to_vec(), left, right }
    }
}

/// Full thin SVD of `w`.
///
/// Singular values come back sorted descending; each vector pair is
/// normalized so the largest-magnitude entry of `v_i` is positive (first
/// such entry on magnitude ties), which pins down the sign ambiguity for
/// tests. Tied singular values only promise an orthonormal basis of the
/// tied subspace, not individual vectors.
///
/// ```
/// use spectral_sentinel::linalg::{full_svd, DenseMatrix};
///
/// let f = full_svd(&DenseMatrix::from_diag(&[3.0, 1.0])).unwrap();
/// assert!((f.sigma[0] - 3.0).abs() < 1e-12);
/// assert!((f.sigma[1] - 1.0).abs() < 1e-12);
/// ```
pub fn full_svd(w: &DenseMatrix) -> Result<SvdFactors> {
    if !w.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let k = w.rows().min(w.cols());
    if k > SVD_DIM_CAP {
        return Err(Error::Capacity(format!(
            "full_svd handles min(rows, cols) <= {SVD_DIM_CAP}, got {k}"
        )));
    }
    let transposed = w.rows() < w.cols();
    let tall = if transposed { w.transpose() } else { w.clone() };
    let (m, n) = (tall.rows(), tall.cols());

    // Work on rows of tallᵀ so every column of the tall matrix is contiguous.
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| tall.col_to_vec(j)).collect();
    // Right factor accumulator, stored as rows of Vᵀ.
    let mut vt: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row
        })
        .collect();

    let mut converged = false;
    for _sweep in 0..SVD_MAX_SWEEPS {
        let mut col_sq: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
        let mut rotated = false;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let app = col_sq[p];
                let aqq = col_sq[q];
                if app == 0.0 && aqq == 0.0 {
                    continue;
                }
                let apq = {
                    let (cp, cq) = pair_mut(&mut cols, p, q);
                    dot(cp, cq)
                };
                if apq == 0.0 || apq.abs() <= PAIR_TOL * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta.is_finite() {
                    let s = if zeta >= 0.0 { 1.0 } else { -1.0 };
                    s / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                } else {
                    // apq is negligible next to aqq - app; rotation degenerates.
                    1.0 / (2.0 * zeta)
                };
                if !t.is_finite() {
                    continue;
                }
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                {
                    let (cp, cq) = pair_mut(&mut cols, p, q);
                    rotate(cp, cq, c, s);
                }
                {
                    let (vp, vq) = pair_mut(&mut vt, p, q);
                    rotate(vp, vq, c, s);
                }
                col_sq[p] = app - t * apq;
                col_sq[q] = aqq + t * apq;
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence(format!(
            "one-sided Jacobi did not settle within {SVD_MAX_SWEEPS} sweeps"
        )));
    }

    // Extract σ and normalized left columns, sorted descending.
    let mut order: Vec<usize> = (0..n).collect();
    let sigmas: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    order.sort_by(|&a, &b| sigmas[b].partial_cmp(&sigmas[a]).unwrap());

    let mut sigma = Vec::with_capacity(n);
    let mut left = DenseMatrix::zeros(m, n);
    let mut right = DenseMatrix::zeros(n, n);
    let mut zero_cols = Vec::new();
    for (slot, &src) in order.iter().enumerate() {
        let s = sigmas[src];
        sigma.push(s);
        right.set_col(slot, &vt[src]);
        if s > 0.0 {
            let u: Vec<f64> = cols[src].iter().map(|x| x / s).collect();
            left.set_col(slot, &u);
        } else {
            zero_cols.push(slot);
        }
    }
    if !zero_cols.is_empty() {
        complete_columns(&mut left, &zero_cols);
    }

    let mut factors = if transposed {
        SvdFactors { sigma, left: right, right: left }
    } else {
        SvdFactors { sigma, left, right }
    };
    apply_sign_convention(&mut factors);
    Ok(factors)
}

fn pair_mut<T>(v: &mut [T], p: usize, q: usize) -> (&mut T, &mut T) {
    debug_assert!(p < q);
    let (lo, hi) = v.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

#[inline]
fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let xa = *x;
        let yb = *y;
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

/// Orient each triplet so the largest-magnitude entry of v_i is positive.
pub(crate) fn apply_sign_convention(f: &mut SvdFactors) {
    for j in 0..f.k() {
        let v = f.right.col_to_vec(j);
        let mut idx = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[idx].abs() {
                idx = i;
            }
        }
        if v[idx] < 0.0 {
            for i in 0..f.right.rows() {
                let x = f.right.at(i, j);
                f.right.set(i, j, -x);
            }
            for i in 0..f.left.rows() {
                let x = f.left.at(i, j);
                f.left.set(i, j, -x);
            }
        }
    }
}

/// Fill the listed zero columns of `m` with unit vectors orthogonal to every
/// other column (Gram–Schmidt against canonical seeds, best pivot first).
fn complete_columns(m: &mut DenseMatrix, empty: &[usize]) {
    let rows = m.rows();
    for &slot in empty {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for seed in 0..rows {
            let mut v = vec![0.0; rows];
            v[seed] = 1.0;
            for _ in 0..2 {
                for j in 0..m.cols() {
                    if j == slot {
                        continue;
                    }
                    let cj = m.col_to_vec(j);
                    let g = dot(&v, &cj);
                    if g != 0.0 {
                        for i in 0..rows {
                            v[i] -= g * cj[i];
                        }
                    }
                }
            }
            let nrm = dot(&v, &v).sqrt();
            if best.as_ref().map_or(true, |(b, _)| nrm > *b) {
                best = Some((nrm, v));
            }
            if nrm > 0.5 {
                break;
            }
        }
        let (nrm, mut v) = best.expect("basis completion found no pivot");
        assert!(nrm > 0.0, "cannot complete orthonormal basis");
        for x in v.iter_mut() {
            *x /= nrm;
        }
        m.set_col(slot, &v);
    }
}
