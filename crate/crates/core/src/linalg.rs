//! Small dense symmetric solves for the damped least-squares iteration.

use alloc::vec::Vec;

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: alloc::vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] = v;
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    /// In-place Cholesky factorisation `A = L Lᵀ`; the lower triangle is
    /// overwritten with `L`. Returns the smallest pivot ratio
    /// `L_kk² / A_kk`, or `None` if the matrix is not positive definite.
    pub fn cholesky(&mut self) -> Option<f64> {
        let n = self.n;
        let mut min_ratio = f64::INFINITY;
        for j in 0..n {
            let mut d = self.get(j, j);
            let orig = d;
            for k in 0..j {
                d -= self.get(j, k) * self.get(j, k);
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            if orig > 0.0 {
                min_ratio = min_ratio.min(d / orig);
            }
            let l = libm::sqrt(d);
            self.set(j, j, l);
            for i in j + 1..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= self.get(i, k) * self.get(j, k);
                }
                self.set(i, j, s / l);
            }
        }
        Some(min_ratio)
    }

    /// Solve `L Lᵀ x = b` with a factor produced by [`cholesky`](Self::cholesky).
    pub fn cholesky_solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.get(i, k) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.get(k, i) * y[k];
            }
            y[i] = s / self.get(i, i);
        }
        y
    }
}
