//! Dense row-major matrix of 64-bit floats.

use crate::error::{Error, Result};
use crate::linalg::rng::RandomSource;

/// Dense matrix, row-major, `rows × cols`, all entries finite at
/// construction time. Arithmetic does not re-validate, so divergent
/// iterations can drive entries non-finite; operations that require finite
/// data check for it explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Build from row-major data, validating shape and finiteness.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "matrix dimensions must be positive, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("non-finite matrix entry".into()));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Square matrix with `values` on the diagonal.
    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = values[i];
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        DenseMatrix { rows, cols, data }
    }

    /// Matrix of iid standard normal draws.
    pub fn gaussian(rows: usize, cols: usize, rng: &mut RandomSource) -> Self {
        let mut data = vec![0.0; rows * cols];
        rng.fill_normal(&mut data);
        DenseMatrix { rows, cols, data }
    }

    /// Rank-one outer product `u vᵀ`.
    pub fn outer(u: &[f64], v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for &ui in u {
            for &vj in v {
                data.push(ui * vj);
            }
        }
        DenseMatrix { rows: u.len(), cols: v.len(), data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_to_vec(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    pub fn set_col(&mut self, j: usize, v: &[f64]) {
        debug_assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self.set(i, j, v[i]);
        }
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0.0)
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `self · other`. Shapes are a programmer contract; mismatches panic.
    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let arow = self.row(i);
            for (k, &aik) in arow.iter().enumerate() {
                if aik == 0.0 {
                    continue;
                }
                let brow = other.row(k);
                let orow = out.row_mut(i);
                for j in 0..brow.len() {
                    orow[j] += aik * brow[j];
                }
            }
        }
        out
    }

    /// `self · x` for a column vector `x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `selfᵀ · x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len(), "matvec_t shape mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for j in 0..self.cols {
                out[j] += xi * row[j];
            }
        }
        out
    }

    pub fn scaled(&self, c: f64) -> DenseMatrix {
        let data = self.data.iter().map(|x| c * x).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// `self += c · other`.
    pub fn add_assign_scaled(&mut self, other: &DenseMatrix, c: f64) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a - b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(other.data.iter()).map(|(a, b)| a + b).collect();
        DenseMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Frobenius norm without validation.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `(self + selfᵀ)/2` for square matrices.
    pub fn symmetrized(&self) -> DenseMatrix {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        DenseMatrix::from_fn(n, n, |i, j| 0.5 * (self.at(i, j) + self.at(j, i)))
    }

    /// `‖self − selfᵀ‖_F` relative to `‖self‖_F` (0 for the zero matrix).
    pub fn asymmetry(&self) -> f64 {
        assert_eq!(self.rows, self.cols);
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self.at(i, j) - self.at(j, i);
                acc += d * d;
            }
        }
        let fro = self.fro_norm();
        if fro == 0.0 {
            0.0
        } else {
            acc.sqrt() / fro
        }
    }
}

/// Frobenius norm `sqrt(Σ w_ij²)`; errors on non-finite entries.
///
/// ```
/// use spectral_sentinel::linalg::{frobenius_norm, DenseMatrix};
///
/// let w = DenseMatrix::from_vec(1, 2, vec![3.0, 4.0]).unwrap();
/// assert_eq!(frobenius_norm(&w).unwrap(), 5.0);
/// ```
pub fn frobenius_norm(w: &DenseMatrix) -> Result<f64> {
    if !w.is_finite() {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    Ok(w.fro_norm())
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_validates() {
        assert!(DenseMatrix::from_vec(0, 2, vec![]).is_err());
        assert!(DenseMatrix::from_vec(2, 2, vec![1.0; 3]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(DenseMatrix::from_vec(1, 2, vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn frobenius_trivial_cases() {
        assert_eq!(frobenius_norm(&DenseMatrix::zeros(3, 3)).unwrap(), 0.0);
        assert_eq!(frobenius_norm(&DenseMatrix::identity(4)).unwrap(), 2.0);
        let w = DenseMatrix::from_vec(1, 2, vec![3.0, 4.0]).unwrap();
        assert_eq!(frobenius_norm(&w).unwrap(), 5.0);
    }

    #[test]
    fn frobenius_rejects_non_finite() {
        let mut w = DenseMatrix::zeros(2, 2);
        w.data[3] = f64::INFINITY;
        assert!(matches!(frobenius_norm(&w), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn matmul_agrees_with_hand_computation() {
        let a = DenseMatrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let b = DenseMatrix::from_vec(3, 2, vec![7.0, 8.0, 9.0, 10.0, 11.0, 12.0]).unwrap();
        let c = a.matmul(&b);
        assert_eq!(c.data(), &[58.0, 64.0, 139.0, 154.0]);
        let x = a.matvec(&[1.0, 1.0, 1.0]);
        assert_eq!(x, vec![6.0, 15.0]);
        let y = a.matvec_t(&[1.0, 1.0]);
        assert_eq!(y, vec![5.0, 7.0, 9.0]);
    }

    #[test]
    fn transpose_roundtrip() {
        let mut rng = RandomSource::new(1);
        let a = DenseMatrix::gaussian(5, 3, &mut rng);
        assert_eq!(a.transpose().transpose(), a);
    }
}
