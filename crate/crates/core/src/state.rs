//! Small dense vectors and matrices for desk-scale state spaces.
//!
//! [`State`] is a `Copy` fixed-capacity vector so that scheme steps never touch
//! the heap. [`Matrix`] is heap-backed and only built at problem construction
//! or in diagnostics.

use std::fmt;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Upper bound on the state dimension `n` and the noise dimension `d`.
pub const MAX_DIM: usize = 16;

/// A point of `R^n`, `n <= MAX_DIM`.
#[derive(Clone, Copy, PartialEq)]
pub struct State {
    len: usize,
    data: [f64; MAX_DIM],
}

impl State {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM, "dimension {n} exceeds MAX_DIM");
        State {
            len: n,
            data: [0.0; MAX_DIM],
        }
    }

    pub fn from_slice(values: &[f64]) -> Self {
        let mut s = State::zeros(values.len());
        s.data[..values.len()].copy_from_slice(values);
        s
    }

    /// Checked constructor for user-facing inputs.
    pub fn try_from_slice(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.len() > MAX_DIM {
            return Err(Error::invalid(format!(
                "state dimension {} outside 1..={MAX_DIM}",
                values.len()
            )));
        }
        Ok(State::from_slice(values))
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut s = State::zeros(n);
        s[k] = 1.0;
        s
    }

    pub fn dim(&self) -> usize {
        self.len
    }

    /// `self += a * other`
    #[inline]
    pub fn axpy(&mut self, a: f64, other: &State) {
        debug_assert_eq!(self.len, other.len);
        for i in 0..self.len {
            self.data[i] += a * other.data[i];
        }
    }

    #[inline]
    pub fn scaled(&self, a: f64) -> State {
        let mut out = *self;
        for v in out.iter_mut() {
            *v *= a;
        }
        out
    }

    #[inline]
    pub fn sub(&self, other: &State) -> State {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for i in 0..self.len {
            out.data[i] -= other.data[i];
        }
        out
    }

    #[inline]
    pub fn add(&self, other: &State) -> State {
        debug_assert_eq!(self.len, other.len);
        let mut out = *self;
        for i in 0..self.len {
            out.data[i] += other.data[i];
        }
        out
    }

    pub fn norm_sq(&self) -> f64 {
        self.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|v| v.is_finite())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.as_ref().to_vec()
    }
}

impl Deref for State {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.data[..self.len]
    }
}

impl DerefMut for State {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.data[..self.len]
    }
}

impl AsRef<[f64]> for State {
    fn as_ref(&self) -> &[f64] {
        self
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter()).finish()
    }
}

/// Square row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows; panics if the rows are not square.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = Matrix::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            m.data[i * n..(i + 1) * n].copy_from_slice(row);
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn mul_vec(&self, v: &State) -> State {
        debug_assert_eq!(v.dim(), self.n);
        let n = self.n;
        let mut out = State::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for k in 0..n {
                acc += row[k] * v[k];
            }
            out[i] = acc;
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn add_scaled(&self, a: f64, other: &Matrix) -> Matrix {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, v) in out.data.iter_mut().zip(&other.data) {
            *o += a * v;
        }
        out
    }

    pub fn scaled(&self, a: f64) -> Matrix {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self[(i, j)] == 0.0))
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> State {
        let mut out = State::zeros(self.n);
        for i in 0..self.n {
            out[i] = self[(i, j)];
        }
        out
    }

    pub fn set_column(&mut self, j: usize, col: &State) {
        for i in 0..self.n {
            self[(i, j)] = col[i];
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}
