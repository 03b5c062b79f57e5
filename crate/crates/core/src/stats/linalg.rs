use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
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

    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::param("all columns must have the same length"));
        }
        Ok(Matrix {
            rows,
            cols: columns.len(),
            data: columns.concat(),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::param("all rows must have the same length"));
        }
        let mut m = Matrix::zeros(n, p);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                m.set(i, j, *v);
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(idx.len(), self.cols);
        for j in 0..self.cols {
            let src = self.col(j);
            for (dst, &i) in out.col_mut(j).iter_mut().zip(idx) {
                *dst = src[i];
            }
        }
        out
    }

    /// `X' X / scale`, as a dense row-major `p × p` array.
    pub fn gram(&self, scale: f64) -> Vec<f64> {
        let p = self.cols;
        let mut g = vec![0.0; p * p];
        for a in 0..p {
            for b in a..p {
                let v = dot(self.col(a), self.col(b)) / scale;
                g[a * p + b] = v;
                g[b * p + a] = v;
            }
        }
        g
    }

    /// `X' y / scale`.
    pub fn xty(&self, y: &[f64], scale: f64) -> Vec<f64> {
        (0..self.cols)
            .map(|j| dot(self.col(j), y) / scale)
            .collect()
    }

    /// `X b`.
    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (j, bj) in b.iter().enumerate() {
            if *bj != 0.0 {
                for (o, x) in out.iter_mut().zip(self.col(j)) {
                    *o += x * bj;
                }
            }
        }
        out
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Cholesky factor of a symmetric positive-definite row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    p: usize,
    l: Vec<f64>,
}

/// Relative pivot size below which a column counts as linearly dependent.
const PIVOT_TOL: f64 = 1e-10;

impl Cholesky {
    /// Factors `a`; on failure returns every column whose pivot collapses
    /// (each is a linear combination of earlier columns).
    pub fn new(a: &[f64], p: usize) -> core::result::Result<Self, Vec<usize>> {
        let mut l = vec![0.0; p * p];
        let mut dependent = Vec::new();
        for j in 0..p {
            let mut d = a[j * p + j];
            for k in 0..j {
                d -= l[j * p + k] * l[j * p + k];
            }
            if !(d > PIVOT_TOL * a[j * p + j].abs()) || a[j * p + j] == 0.0 {
                dependent.push(j);
                continue;
            }
            let djj = libm::sqrt(d);
            l[j * p + j] = djj;
            for i in j + 1..p {
                let mut s = a[i * p + j];
                for k in 0..j {
                    s -= l[i * p + k] * l[j * p + k];
                }
                l[i * p + j] = s / djj;
            }
        }
        if dependent.is_empty() {
            Ok(Cholesky { p, l })
        } else {
            Err(dependent)
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let p = self.p;
        let mut z = b.to_vec();
        for i in 0..p {
            let (done, rest) = z.split_at_mut(i);
            let s = self.l[i * p..i * p + i]
                .iter()
                .zip(done.iter())
                .fold(rest[0], |s, (l, zk)| s - l * zk);
            z[i] = s / self.l[i * p + i];
        }
        for i in (0..p).rev() {
            let (head, done) = z.split_at_mut(i + 1);
            let s = done
                .iter()
                .enumerate()
                .fold(head[i], |s, (o, zk)| s - self.l[(i + 1 + o) * p + i] * zk);
            z[i] = s / self.l[i * p + i];
        }
        z
    }

    /// Row-major inverse of the factored matrix.
    pub fn inverse(&self) -> Vec<f64> {
        let p = self.p;
        let mut inv = vec![0.0; p * p];
        let mut e = vec![0.0; p];
        for j in 0..p {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            for (i, v) in self.solve(&e).into_iter().enumerate() {
                inv[i * p + j] = v;
            }
        }
        inv
    }
}

/// Largest eigenvalue of a small symmetric positive semi-definite row-major
/// matrix.
pub(crate) fn largest_eigenvalue(a: &[f64], p: usize) -> f64 {
    symmetric_eigenvalues(a, p).into_iter().fold(0.0, f64::max)
}

/// Eigenvalues of a symmetric `p × p` matrix by cyclic Jacobi rotations.
pub(crate) fn symmetric_eigenvalues(a: &[f64], p: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    let off = |m: &[f64]| -> f64 {
        (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * p + j] * m[i * p + j])
            .sum()
    };
    let scale: f64 = m.iter().map(|v| v * v).sum();
    for _ in 0..100 {
        if off(&m) <= 1e-30 * scale {
            break;
        }
        for i in 0..p {
            for j in i + 1..p {
                let aij = m[i * p + j];
                if aij == 0.0 {
                    continue;
                }
                let theta = (m[j * p + j] - m[i * p + i]) / (2.0 * aij);
                let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..p {
                    let (mki, mkj) = (m[k * p + i], m[k * p + j]);
                    m[k * p + i] = c * mki - s * mkj;
                    m[k * p + j] = s * mki + c * mkj;
                }
                for k in 0..p {
                    let (mik, mjk) = (m[i * p + k], m[j * p + k]);
                    m[i * p + k] = c * mik - s * mjk;
                    m[j * p + k] = s * mik + c * mjk;
                }
            }
        }
    }
    (0..p).map(|i| m[i * p + i]).collect()
}
