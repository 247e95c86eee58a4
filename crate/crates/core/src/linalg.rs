//! Small dense row-major matrices and Cholesky helpers.
//!
//! Dimensions here never exceed a few dozen, so everything is plain loops.

use alloc::vec;
use alloc::vec::Vec;
#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Mat {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix buffer length");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
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

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// Rows `start..end` as a new matrix.
    pub fn slice_rows(&self, start: usize, end: usize) -> Mat {
        Mat {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// In-place lower Cholesky factor of a symmetric positive definite `n×n`
/// row-major matrix. The strict upper triangle is zeroed. On failure returns
/// the offending pivot.
pub fn cholesky(a: &mut [f64], n: usize) -> Result<(), usize> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(j);
        }
        let ljj = d.sqrt();
        a[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    Ok(())
}

/// Cholesky factor of a symmetric positive semi-definite matrix. Pivots within
/// `tol · max diag` of zero are treated as exact zeros (rank deficiency).
pub fn cholesky_psd(a: &mut [f64], n: usize, tol: f64) -> Result<(), usize> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !d.is_finite() || d < -tol * scale {
            return Err(j);
        }
        if d <= tol * scale {
            a[j * n + j] = 0.0;
            for i in j + 1..n {
                a[i * n + j] = 0.0;
            }
        } else {
            let ljj = d.sqrt();
            a[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / ljj;
            }
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    Ok(())
}

/// Solve `L x = b` in place for lower-triangular `L`.
pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve `L' x = b` in place for lower-triangular `L`.
pub fn solve_lower_transpose(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// `out = L z` for lower-triangular `L`.
pub fn lower_mul(l: &[f64], n: usize, z: &[f64], out: &mut [f64]) {
    for i in 0..n {
        out[i] = (0..=i).map(|k| l[i * n + k] * z[k]).sum();
    }
}

/// Replace `a` by `(a + a')/2`.
pub fn symmetrize(a: &mut [f64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
}

/// Solve a symmetric tridiagonal positive definite system via its Cholesky
/// factor. Returns `(l_diag, l_sub)` such that `Q = L L'` with bidiagonal `L`.
pub fn tridiag_cholesky(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>), usize> {
    let n = diag.len();
    let mut ld = vec![0.0; n];
    let mut ls = vec![0.0; n.saturating_sub(1)];
    for i in 0..n {
        let mut d = diag[i];
        if i > 0 {
            d -= ls[i - 1] * ls[i - 1];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(i);
        }
        ld[i] = d.sqrt();
        if i + 1 < n {
            ls[i] = off[i] / ld[i];
        }
    }
    Ok((ld, ls))
}

/// Forward solve `L x = b` with bidiagonal `L`.
pub fn tridiag_solve_lower(ld: &[f64], ls: &[f64], b: &mut [f64]) {
    for i in 0..b.len() {
        if i > 0 {
            b[i] -= ls[i - 1] * b[i - 1];
        }
        b[i] /= ld[i];
    }
}

/// Back solve `L' x = b` with bidiagonal `L`.
pub fn tridiag_solve_upper(ld: &[f64], ls: &[f64], b: &mut [f64]) {
    let n = b.len();
    for i in (0..n).rev() {
        if i + 1 < n {
            b[i] -= ls[i] * b[i + 1];
        }
        b[i] /= ld[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = [4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0];
        let mut l = a;
        cholesky(&mut l, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - a[i * 3 + j]).abs() < 1e-12);
            }
        }
        let mut b = [1.0, -2.0, 0.5];
        solve_lower(&l, 3, &mut b);
        solve_lower_transpose(&l, 3, &mut b);
        for i in 0..3 {
            let r: f64 = (0..3).map(|k| a[i * 3 + k] * b[k]).sum();
            assert!((r - [1.0, -2.0, 0.5][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = [1.0, 2.0, 2.0, 1.0];
        assert_eq!(cholesky(&mut a, 2), Err(1));
    }

    #[test]
    fn psd_factor_of_rank_one() {
        let mut a = [1.0, 1.0, 1.0, 1.0];
        cholesky_psd(&mut a, 2, 1e-12).unwrap();
        assert_eq!(a, [1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn tridiagonal_solve_matches_dense() {
        let diag = [2.0, 3.0, 2.5, 1.5];
        let off = [-0.5, 0.7, -0.3];
        let (ld, ls) = tridiag_cholesky(&diag, &off).unwrap();
        let rhs = [1.0, 0.0, -1.0, 2.0];
        let mut x = rhs;
        tridiag_solve_lower(&ld, &ls, &mut x);
        tridiag_solve_upper(&ld, &ls, &mut x);
        for i in 0..4 {
            let mut r = diag[i] * x[i];
            if i > 0 {
                r += off[i - 1] * x[i - 1];
            }
            if i < 3 {
                r += off[i] * x[i + 1];
            }
            assert!((r - rhs[i]).abs() < 1e-12);
        }
    }
}
