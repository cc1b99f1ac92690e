//! Block sweep (block-LU) solver for `(H - σ) x = r`.
//!
//! Radial rows are grouped into super-blocks such that the operator is block
//! tridiagonal over super-blocks. Forward elimination keeps the pivot blocks
//! `S_g = A_g - σ - L_g S_{g-1}⁻¹ U_{g-1}` in factored form together with
//! `X_g = S_g⁻¹ U_g`; back substitution is `x_g = y_g - X_g x_{g+1}`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::hamiltonian::BlockBandedHamiltonian;
use crate::linalg::{CMatrix, Lu, C64};

/// Pivot blocks whose smallest relative pivot falls below this are treated
/// as singular.
pub const SINGULAR_PIVOT: f64 = 64.0 * f64::EPSILON;

/// Scalar coupling pattern between two super-blocks: `coef[a][p]` couples
/// row `a` of one group to row `p` of the other, times the identity.
#[derive(Debug, Clone)]
struct Coupling {
    coef: Vec<Vec<f64>>,
}

impl Coupling {
    fn between(h: &BlockBandedHamiltonian, rows: &Range<usize>, cols: &Range<usize>) -> Self {
        let mut coef = vec![vec![0.0; cols.len()]; rows.len()];
        for (a, i) in rows.clone().enumerate() {
            for &(j, w) in h.couplings(i) {
                if cols.contains(&j) {
                    coef[a][j - cols.start] += w;
                }
            }
        }
        Self { coef }
    }

    /// `out -= (coef ⊗ I) x`, with `x` laid out row-major by radial row.
    fn sub_apply(&self, b: usize, x: &[C64], out: &mut [C64]) {
        for (a, row) in self.coef.iter().enumerate() {
            let o = &mut out[a * b..(a + 1) * b];
            for (p, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    for (oi, xi) in o.iter_mut().zip(&x[p * b..(p + 1) * b]) {
                        *oi -= xi * w;
                    }
                }
            }
        }
    }

    /// Dense `(coef ⊗ I)` times a dense matrix `x` with `coef.cols·b` rows.
    fn matmul(&self, b: usize, x: &CMatrix) -> CMatrix {
        let cols = x.cols();
        let mut out = CMatrix::zeros(self.coef.len() * b, cols);
        for (a, row) in self.coef.iter().enumerate() {
            for (p, &w) in row.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                for r in 0..b {
                    let src = x.row(p * b + r);
                    let dst = out.row_mut(a * b + r);
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s * w;
                    }
                }
            }
        }
        out
    }

    fn to_dense(&self, b: usize) -> CMatrix {
        let cols = self.coef.first().map(|r| r.len()).unwrap_or(0);
        let mut out = CMatrix::zeros(self.coef.len() * b, cols * b);
        for (a, row) in self.coef.iter().enumerate() {
            for (p, &w) in row.iter().enumerate() {
                for r in 0..b {
                    out[(a * b + r, p * b + r)] = C64::new(w, 0.0);
                }
            }
        }
        out
    }
}

/// Factored `H - σ`, reusable for many right-hand sides.
#[derive(Debug, Clone)]
pub struct SweepFactorization {
    shift: f64,
    block: usize,
    groups: Vec<Range<usize>>,
    lower: Vec<Coupling>,
    pivots: Vec<Lu>,
    /// `S_g⁻¹ U_g` for all but the last group
    fill: Vec<CMatrix>,
}

impl SweepFactorization {
    pub fn new(h: &BlockBandedHamiltonian, shift: f64) -> Result<Self> {
        let b = h.block_size();
        let groups = h.groups().to_vec();
        let mut lower = Vec::with_capacity(groups.len());
        let mut pivots: Vec<Lu> = Vec::with_capacity(groups.len());
        let mut fill: Vec<CMatrix> = Vec::with_capacity(groups.len().saturating_sub(1));
        for (g, rows) in groups.iter().enumerate() {
            let mut s = diagonal_superblock(h, rows, shift);
            let low = if g > 0 {
                let c = Coupling::between(h, rows, &groups[g - 1]);
                let lx = c.matmul(b, &fill[g - 1]);
                for (d, v) in s.as_mut_slice().iter_mut().zip(lx.as_slice()) {
                    *d -= v;
                }
                c
            } else {
                Coupling { coef: Vec::new() }
            };
            let lu = Lu::new(s).map_err(|_| Error::NearSingular { shift, block: g })?;
            if lu.min_relative_pivot < SINGULAR_PIVOT {
                return Err(Error::NearSingular { shift, block: g });
            }
            if g + 1 < groups.len() {
                let mut x = Coupling::between(h, rows, &groups[g + 1]).to_dense(b);
                lu.solve_matrix_in_place(&mut x);
                fill.push(x);
            }
            lower.push(low);
            pivots.push(lu);
        }
        Ok(Self {
            shift,
            block: b,
            groups,
            lower,
            pivots,
            fill,
        })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn dim(&self) -> usize {
        self.groups.last().map(|r| r.end).unwrap_or(0) * self.block
    }

    /// Overwrites `r` with `(H - σ)⁻¹ r`.
    pub fn solve_in_place(&self, r: &mut [C64]) {
        let b = self.block;
        let span = |g: usize| self.groups[g].start * b..self.groups[g].end * b;
        for g in 0..self.groups.len() {
            if g > 0 {
                let (head, tail) = r.split_at_mut(span(g).start);
                let prev = &head[span(g - 1)];
                self.lower[g].sub_apply(b, prev, &mut tail[..span(g).len()]);
            }
            self.pivots[g].solve_in_place(&mut r[span(g)]);
        }
        for g in (0..self.groups.len().saturating_sub(1)).rev() {
            let (head, tail) = r.split_at_mut(span(g + 1).start);
            let next = &tail[..span(g + 1).len()];
            let x = &self.fill[g];
            let cur = &mut head[span(g)];
            for (k, v) in cur.iter_mut().enumerate() {
                let s: C64 = x.row(k).iter().zip(next).map(|(a, b)| a * b).sum();
                *v -= s;
            }
        }
    }
}

fn diagonal_superblock(h: &BlockBandedHamiltonian, rows: &Range<usize>, shift: f64) -> CMatrix {
    let b = h.block_size();
    let n = rows.len() * b;
    let mut s = CMatrix::zeros(n, n);
    for (a, i) in rows.clone().enumerate() {
        let d = h.diagonal_block(i);
        for r in 0..b {
            s.row_mut(a * b + r)[a * b..(a + 1) * b].copy_from_slice(d.row(r));
            s[(a * b + r, a * b + r)] -= C64::new(shift, 0.0);
        }
        for &(j, w) in h.couplings(i) {
            if rows.contains(&j) {
                let p = j - rows.start;
                for r in 0..b {
                    s[(a * b + r, p * b + r)] += C64::new(w, 0.0);
                }
            }
        }
    }
    s
}

/// Solves `(H - σ) x = r` once.
pub fn block_sweep_solve(h: &BlockBandedHamiltonian, shift: f64, r: &[C64]) -> Result<Vec<C64>> {
    if r.len() != h.dim() {
        return Err(Error::Usage(format!(
            "right-hand side has length {}, operator dimension is {}",
            r.len(),
            h.dim()
        )));
    }
    let f = SweepFactorization::new(h, shift)?;
    let mut x = r.to_vec();
    f.solve_in_place(&mut x);
    Ok(x)
}
