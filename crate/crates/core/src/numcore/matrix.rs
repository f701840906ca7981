use serde::{Deserialize, Serialize};

use crate::error::{GrnnError, Result};
use crate::numcore::rng::Rng;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(GrnnError::shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Entries uniform in `[-1/sqrt(cols), 1/sqrt(cols)]`.
    pub fn fan_in_uniform(rows: usize, cols: usize, rng: &mut Rng) -> Self {
        let bound = 1.0 / (cols as f64).sqrt();
        let data = (0..rows * cols).map(|_| rng.uniform_in(-bound, bound)).collect();
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

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn same_shape(&self, other: &Matrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// `out = self * x + bias`, where `x` is given as consecutive segments
    /// whose lengths add up to `cols`.
    pub fn affine_segments(&self, segments: &[&[f64]], bias: &[f64], out: &mut [f64]) {
        debug_assert_eq!(segments.iter().map(|s| s.len()).sum::<usize>(), self.cols);
        for (r, o) in out.iter_mut().enumerate().take(self.rows) {
            let row = self.row(r);
            let mut acc = bias[r];
            let mut c = 0;
            for seg in segments {
                for &v in seg.iter() {
                    acc += row[c] * v;
                    c += 1;
                }
            }
            *o = acc;
        }
    }

    /// `out += self^T * g`.
    pub fn add_transpose_mul(&self, g: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.cols);
        for (r, &gr) in g.iter().enumerate().take(self.rows) {
            if gr == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * gr;
            }
        }
    }

    /// `self += g ⊗ x`, with `x` split in segments as in [`Matrix::affine_segments`].
    pub fn add_outer_segments(&mut self, g: &[f64], segments: &[&[f64]]) {
        let cols = self.cols;
        for (r, &gr) in g.iter().enumerate().take(self.rows) {
            if gr == 0.0 {
                continue;
            }
            let row = &mut self.data[r * cols..(r + 1) * cols];
            let mut c = 0;
            for seg in segments {
                for &v in seg.iter() {
                    row[c] += gr * v;
                    c += 1;
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add_assign(acc: &mut [f64], v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += *b;
    }
}
