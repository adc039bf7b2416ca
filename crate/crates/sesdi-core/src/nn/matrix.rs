//! Dense row-major matrices and the three GEMM flavours the MLP needs.
//!
//! The kernels are blocked so weight rows are streamed once per member tile
//! instead of once per member; tests pin them against naive triple loops.

#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "matrix {}x{} needs {} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// self += alpha * other
    pub fn add_scaled(&mut self, other: &Matrix, alpha: f64) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for a in &mut self.data {
            *a *= alpha;
        }
    }
}

/// Member tile width for the blocked kernels.
const TILE: usize = 8;

/// y (m x n) = x (m x k) * w (n x k)^T. The MLP forward: n output units,
/// each with a k-wide weight row.
pub fn gemm_nt(x: &Matrix, w: &Matrix, y: &mut Matrix) {
    assert_eq!(x.cols, w.cols, "inner dims");
    assert_eq!(y.rows, x.rows);
    assert_eq!(y.cols, w.rows);
    let k = x.cols;
    let n = w.rows;
    let mut xt = vec![0.0f64; TILE * k];
    let mut i0 = 0;
    while i0 < x.rows {
        let b = TILE.min(x.rows - i0);
        // transpose the member tile so the inner loop is contiguous
        for j in 0..k {
            for bi in 0..b {
                xt[j * TILE + bi] = x.data[(i0 + bi) * k + j];
            }
        }
        for o in 0..n {
            let wo = w.row(o);
            let mut acc = [0.0f64; TILE];
            for (j, &wv) in wo.iter().enumerate() {
                let xr = &xt[j * TILE..j * TILE + TILE];
                for bi in 0..TILE {
                    acc[bi] += wv * xr[bi];
                }
            }
            for bi in 0..b {
                y.data[(i0 + bi) * n + o] = acc[bi];
            }
        }
        i0 += b;
    }
}

/// c (m x k) = a (m x n) * b (n x k). Backward through a layer:
/// input gradients dX = delta * W.
pub fn gemm_nn(a: &Matrix, b: &Matrix, c: &mut Matrix) {
    assert_eq!(a.cols, b.rows, "inner dims");
    assert_eq!(c.rows, a.rows);
    assert_eq!(c.cols, b.cols);
    let k = b.cols;
    let n = a.cols;
    let mut i0 = 0;
    while i0 < a.rows {
        let blk = TILE.min(a.rows - i0);
        for row in c.data[i0 * k..(i0 + blk) * k].iter_mut() {
            *row = 0.0;
        }
        for o in 0..n {
            let bo = b.row(o);
            for bi in 0..blk {
                let coef = a.data[(i0 + bi) * n + o];
                if coef == 0.0 {
                    continue;
                }
                let crow = &mut c.data[(i0 + bi) * k..(i0 + bi) * k + k];
                for (cv, bv) in crow.iter_mut().zip(bo) {
                    *cv += coef * bv;
                }
            }
        }
        i0 += blk;
    }
}

/// c (n x k) += a (m x n)^T * b (m x k). Weight gradients
/// dW += delta^T * input, accumulated over the m member rows.
pub fn gemm_tn_acc(a: &Matrix, b: &Matrix, c: &mut Matrix) {
    assert_eq!(a.rows, b.rows, "member counts");
    assert_eq!(c.rows, a.cols);
    assert_eq!(c.cols, b.cols);
    let n = a.cols;
    let k = b.cols;
    let mut i0 = 0;
    while i0 < a.rows {
        let blk = TILE.min(a.rows - i0);
        for o in 0..n {
            let crow = &mut c.data[o * k..(o + 1) * k];
            for bi in 0..blk {
                let coef = a.data[(i0 + bi) * n + o];
                if coef == 0.0 {
                    continue;
                }
                let brow = &b.data[(i0 + bi) * k..(i0 + bi) * k + k];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += coef * bv;
                }
            }
        }
        i0 += blk;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use rand::Rng;

    fn random(rows: usize, cols: usize, tag: &str) -> Matrix {
        let mut rng = rng_for(11, tag);
        Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
    }

    fn naive_nt(x: &Matrix, w: &Matrix) -> Matrix {
        Matrix::from_fn(x.rows(), w.rows(), |i, o| {
            (0..x.cols()).map(|j| x.at(i, j) * w.at(o, j)).sum()
        })
    }

    fn naive_nn(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.rows(), b.cols(), |i, j| {
            (0..a.cols()).map(|o| a.at(i, o) * b.at(o, j)).sum()
        })
    }

    fn naive_tn(a: &Matrix, b: &Matrix) -> Matrix {
        Matrix::from_fn(a.cols(), b.cols(), |o, j| {
            (0..a.rows()).map(|i| a.at(i, o) * b.at(i, j)).sum()
        })
    }

    fn close(a: &Matrix, b: &Matrix) {
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0));
        }
    }

    #[test]
    fn gemm_nt_matches_naive() {
        for (m, k, n) in [(1, 1, 1), (3, 5, 7), (8, 16, 4), (13, 9, 21)] {
            let x = random(m, k, "x");
            let w = random(n, k, "w");
            let mut y = Matrix::zeros(m, n);
            gemm_nt(&x, &w, &mut y);
            close(&y, &naive_nt(&x, &w));
        }
    }

    #[test]
    fn gemm_nn_matches_naive() {
        for (m, n, k) in [(1, 1, 1), (4, 6, 3), (17, 8, 5)] {
            let a = random(m, n, "a");
            let b = random(n, k, "b");
            let mut c = Matrix::zeros(m, k);
            gemm_nn(&a, &b, &mut c);
            close(&c, &naive_nn(&a, &b));
        }
    }

    #[test]
    fn gemm_tn_matches_naive() {
        for (m, n, k) in [(1, 1, 1), (5, 4, 6), (19, 7, 3)] {
            let a = random(m, n, "a");
            let b = random(m, k, "b");
            let mut c = Matrix::zeros(n, k);
            gemm_tn_acc(&a, &b, &mut c);
            close(&c, &naive_tn(&a, &b));
        }
    }
}
