//! Orthonormal two-dimensional DCT-II on `P x T` matrices.

use crate::tensor::MatrixObs;

/// Orthonormal DCT-II matrix of order `n`, row-major: entry `[p][i]` is
/// `c_p cos(pi (2i + 1) p / (2n))` with `c_0 = sqrt(1/n)`, `c_p = sqrt(2/n)`.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut m = Vec::with_capacity(n * n);
    for p in 0..n {
        let c = if p == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        for i in 0..n {
            let angle = std::f64::consts::PI * (2 * i + 1) as f64 * p as f64 / (2.0 * nf);
            m.push(c * angle.cos());
        }
    }
    m
}

/// Precomputed row (`L`, `P x P`) and column (`R`, `T x T`) bases.
#[derive(Clone, Debug)]
pub struct Dct2 {
    rows: usize,
    cols: usize,
    left: Vec<f64>,
    right: Vec<f64>,
}

impl Dct2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            left: dct_matrix(rows),
            right: dct_matrix(cols),
        }
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    /// `Omega = L M R^T`.
    pub fn forward(&self, m: &MatrixObs) -> MatrixObs {
        assert_eq!(m.shape(), (self.rows, self.cols), "DCT shape mismatch");
        let (p, t) = (self.rows, self.cols);
        let x = m.as_slice();
        let mut lm = vec![0.0; p * t];
        for r in 0..p {
            for i in 0..p {
                let l = self.left[r * p + i];
                for j in 0..t {
                    lm[r * t + j] += l * x[i * t + j];
                }
            }
        }
        let mut out = vec![0.0; p * t];
        for r in 0..p {
            for c in 0..t {
                out[r * t + c] = (0..t).map(|j| lm[r * t + j] * self.right[c * t + j]).sum();
            }
        }
        MatrixObs::from_vec_unchecked(p, t, out)
    }

    /// `M = L^T Omega R`.
    pub fn inverse(&self, omega: &MatrixObs) -> MatrixObs {
        assert_eq!(omega.shape(), (self.rows, self.cols), "DCT shape mismatch");
        let (p, t) = (self.rows, self.cols);
        let w = omega.as_slice();
        let mut lw = vec![0.0; p * t];
        for r in 0..p {
            for i in 0..p {
                let l = self.left[r * p + i];
                for c in 0..t {
                    lw[i * t + c] += l * w[r * t + c];
                }
            }
        }
        let mut out = vec![0.0; p * t];
        for i in 0..p {
            for c in 0..t {
                let v = lw[i * t + c];
                for j in 0..t {
                    out[i * t + j] += v * self.right[c * t + j];
                }
            }
        }
        MatrixObs::from_vec_unchecked(p, t, out)
    }
}

pub fn dct2_forward(m: &MatrixObs) -> MatrixObs {
    Dct2::new(m.rows(), m.cols()).forward(m)
}

pub fn dct2_inverse(omega: &MatrixObs) -> MatrixObs {
    Dct2::new(omega.rows(), omega.cols()).inverse(omega)
}
