//! Small dense complex kernels: row-major matrices, LU with partial pivoting,
//! and eigenvalue helpers that go through nalgebra's Schur decomposition.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [C64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`, stored in place.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    /// smallest |pivot| relative to the largest entry of the input
    pub min_relative_pivot: f64,
}

impl Lu {
    /// Factorizes a square matrix. Fails if a pivot is exactly zero.
    pub fn new(a: CMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::Usage("LU of a non-square matrix".into()));
        }
        let n = a.rows;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut lu = a.data;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_piv = f64::INFINITY;
        for k in 0..n {
            let (mut p, mut best) = (k, lu[k * n + k].norm());
            for i in k + 1..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            min_piv = min_piv.min(best / scale);
            if best == 0.0 {
                return Err(Error::NearSingular {
                    shift: f64::NAN,
                    block: 0,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = ONE / lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n + k + 1..k * n + n];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l == ZERO {
                    continue;
                }
                for (r, &u) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *r -= l * u;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            min_relative_pivot: min_piv,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [C64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: C64 = row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s: C64 = row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }

    /// Solves `A X = B` for a row-major right-hand-side matrix, overwriting it.
    pub fn solve_matrix_in_place(&self, b: &mut CMatrix) {
        let n = self.n;
        assert_eq!(b.rows, n);
        let m = b.cols;
        let mut x = CMatrix::zeros(n, m);
        for (i, &p) in self.perm.iter().enumerate() {
            x.row_mut(i).copy_from_slice(b.row(p));
        }
        // forward: rows are combined, so the inner loop runs over contiguous columns
        for i in 0..n {
            let (done, rest) = x.data.split_at_mut(i * m);
            let xi = &mut rest[..m];
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l == ZERO {
                    continue;
                }
                for (a, &v) in xi.iter_mut().zip(&done[k * m..(k + 1) * m]) {
                    *a -= l * v;
                }
            }
        }
        for i in (0..n).rev() {
            let (head, tail) = x.data.split_at_mut((i + 1) * m);
            let xi = &mut head[i * m..];
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u == ZERO {
                    continue;
                }
                let off = (k - i - 1) * m;
                for (a, &v) in xi.iter_mut().zip(&tail[off..off + m]) {
                    *a -= u * v;
                }
            }
            let inv = ONE / self.lu[i * n + i];
            for a in xi.iter_mut() {
                *a *= inv;
            }
        }
        *b = x;
    }
}

/// All eigenvalues of a general complex matrix (complex Schur form), sorted by
/// real part.
pub fn general_eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if a.rows != a.cols {
        return Err(Error::Usage("eigenvalues of a non-square matrix".into()));
    }
    if a.rows == 0 {
        return Ok(Vec::new());
    }
    let schur = nalgebra::Schur::try_new(a.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::NoConvergence("complex Schur decomposition".into()))?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<C64> = (0..a.rows).map(|i| t[(i, i)]).collect();
    ev.sort_by(|x, y| x.re.total_cmp(&y.re));
    Ok(ev)
}

/// Eigenvalues and right eigenvectors of a small general complex matrix.
/// Vectors are returned as columns of the second element, unit 2-norm.
pub fn general_eigen(a: &CMatrix) -> Result<(Vec<C64>, CMatrix)> {
    let n = a.rows;
    if n != a.cols {
        return Err(Error::Usage("eigen decomposition of a non-square matrix".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let schur = nalgebra::Schur::try_new(a.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::NoConvergence("complex Schur decomposition".into()))?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|i| t[(i, i)]).collect();
    let tiny = f64::EPSILON * t.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1.0);
    let mut vecs = CMatrix::zeros(n, n);
    // back substitution on the triangular factor for each eigenvalue
    for k in 0..n {
        let lambda = values[k];
        let mut y = vec![ZERO; n];
        y[k] = ONE;
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in i + 1..=k {
                s += t[(i, j)] * y[j];
            }
            let mut d = t[(i, i)] - lambda;
            if d.norm() < tiny {
                d = C64::new(tiny, 0.0);
            }
            y[i] = -s / d;
        }
        let mut v = vec![ZERO; n];
        for (i, vi) in v.iter_mut().enumerate() {
            for (j, yj) in y.iter().enumerate().take(k + 1) {
                *vi += q[(i, j)] * yj;
            }
        }
        let nrm = norm(&v);
        for i in 0..n {
            vecs[(i, k)] = v[i] / nrm;
        }
    }
    Ok((values, vecs))
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let eig = nalgebra::SymmetricEigen::new(a.to_nalgebra());
    let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Modified Gram-Schmidt (twice) of `v` against an orthonormal set. Returns the
/// norm of what is left before normalization.
pub fn orthonormalize_against(v: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            axpy(-c, b, v);
        }
    }
    let n = norm(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}
