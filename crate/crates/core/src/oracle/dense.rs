//! Dense symmetric matrix algebra for the Toeplitz oracle.
//!
//! Plain row-major storage with an unblocked Cholesky; the oracle caps at a
//! few thousand rows, where simplicity and numerical robustness matter more
//! than speed. Inversions parallelize over right-hand sides.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DMat {
    pub n: usize,
    pub a: Vec<f64>,
}

impl DMat {
    pub fn zeros(n: usize) -> Self {
        DMat { n, a: vec![0.0; n * n] }
    }

    pub fn from_toeplitz(first_row: &[f64]) -> Self {
        let n = first_row.len();
        let mut m = DMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i * n + j] = first_row[i.abs_diff(j)];
            }
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// `self * other`, parallelized over rows.
    pub fn mul(&self, other: &DMat) -> DMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = DMat::zeros(n);
        out.a
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, orow)| {
                let arow = self.row(i);
                for (k, &aik) in arow.iter().enumerate() {
                    if aik == 0.0 {
                        continue;
                    }
                    let brow = other.row(k);
                    for j in 0..n {
                        orow[j] += aik * brow[j];
                    }
                }
            });
        out
    }

    /// Frobenius inner product with the transpose pairing,
    /// `sum_ij self[i][j] * other[j][i]` = `Tr(self * other)`.
    pub fn trace_product(&self, other: &DMat) -> f64 {
        let n = self.n;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    s += self.at(i, j) * other.at(j, i);
                }
                s
            })
            .sum()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.at(i, i)).sum()
    }

    pub fn sub(&self, other: &DMat) -> DMat {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (o, b) in out.a.iter_mut().zip(&other.a) {
            *o -= b;
        }
        out
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub struct Chol {
    pub n: usize,
    l: Vec<f64>,
}

impl Chol {
    pub fn factor(m: &DMat) -> Result<Self> {
        let n = m.n;
        let mut l = m.a.clone();
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if !(d > 0.0) {
                return Err(Error::numeric(format!(
                    "matrix is not positive definite (pivot {d:.3e} at column {j})"
                )));
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            // update column j below the diagonal
            let (head, tail) = l.split_at_mut((j + 1) * n);
            let ljrow = &head[j * n..j * n + j];
            tail.par_chunks_mut(n).for_each(|row| {
                let mut s = row[j];
                for k in 0..j {
                    s -= row[k] * ljrow[k];
                }
                row[j] = s / dj;
            });
        }
        // zero strict upper triangle for cleanliness
        for i in 0..n {
            for j in i + 1..n {
                l[i * n + j] = 0.0;
            }
        }
        Ok(Chol { n, l })
    }

    /// `log det` of the factored matrix.
    pub fn logdet(&self) -> f64 {
        (0..self.n).map(|i| 2.0 * self.l[i * self.n + i].ln()).sum()
    }

    /// Solves `A x = b` in place via forward + backward substitution.
    pub fn solve_into(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * b[k];
            }
            b[i] = s / self.l[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_into(&mut x);
        x
    }

    /// Quadratic form `b^T A^{-1} b`.
    pub fn inv_quadratic_form(&self, b: &[f64]) -> f64 {
        let x = self.solve(b);
        x.iter().zip(b).map(|(xi, bi)| xi * bi).sum()
    }

    /// Full inverse, parallelized over columns.
    pub fn inverse(&self) -> DMat {
        let n = self.n;
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                self.solve_into(&mut e);
                e
            })
            .collect();
        let mut out = DMat::zeros(n);
        for (j, col) in cols.iter().enumerate() {
            for i in 0..n {
                out.set(i, j, col[i]);
            }
        }
        out
    }
}
