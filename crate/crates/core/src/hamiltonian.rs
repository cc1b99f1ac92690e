//! Block-banded Hamiltonian on the (radial node, angle) product grid.
//!
//! Unknowns are ordered radial-major: entry `i·(2M+1) + j` is `ψ_j(ρ_{i+1})`.
//! Each radial row owns a dense angular block; radial neighbors couple through
//! scalar multiples of the identity.

use std::ops::Range;

use crate::angular::{potential_matrix, AngularScheme};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::model::SystemConfig;
use crate::radial::RadialScheme;

#[derive(Debug, Clone)]
pub struct BlockBandedHamiltonian {
    block: usize,
    diag: Vec<CMatrix>,
    /// off-diagonal radial couplings per row: (column row, coefficient)
    couplings: Vec<Vec<(usize, f64)>>,
    groups: Vec<Range<usize>>,
}

impl BlockBandedHamiltonian {
    /// Discretizes `H = (1/2m_r)[-∂²_ρ - 1/(4ρ²) - ρ⁻² ∂²_φ + V]` where `V` is
    /// the scaled potential matrix.
    pub fn assemble(cfg: &SystemConfig, ang: &AngularScheme, rad: &RadialScheme) -> Result<Self> {
        cfg.validate()?;
        let scale = 1.0 / (2.0 * cfg.reduced_mass());
        let b = ang.size();
        let mut diag = Vec::with_capacity(rad.dim());
        let mut couplings = Vec::with_capacity(rad.dim());
        for (i, (row, &rho)) in rad.rows().iter().zip(rad.interior()).enumerate() {
            let inv2 = 1.0 / (rho * rho);
            let mut d = potential_matrix(rho, cfg, ang)?;
            let h0 = ang.h0();
            let mut kin_diag = -0.25 * inv2;
            let mut off = Vec::with_capacity(row.entries.len());
            for &(j, w) in &row.entries {
                if j == i {
                    kin_diag -= w;
                } else {
                    off.push((j, -w * scale));
                }
            }
            for r in 0..b {
                for c in 0..b {
                    d[(r, c)] -= h0[(r, c)] * inv2;
                }
                d[(r, r)] += kin_diag;
            }
            diag.push(d.scale(C64::new(scale, 0.0)));
            couplings.push(off);
        }
        let groups = partition(&couplings);
        Ok(Self {
            block: b,
            diag,
            couplings,
            groups,
        })
    }

    /// `(H + P H P)/2` for an angular involution `P`. Radial couplings are
    /// scalar in angle and unchanged; only the diagonal blocks are averaged.
    pub fn symmetrized(&self, p: &CMatrix) -> Result<Self> {
        if p.rows() != self.block || p.cols() != self.block {
            return Err(Error::Usage(format!(
                "symmetry matrix is {}x{}, blocks are {}",
                p.rows(),
                p.cols(),
                self.block
            )));
        }
        let half = C64::new(0.5, 0.0);
        let diag = self
            .diag
            .iter()
            .map(|d| {
                let mut s = p.matmul(d).matmul(p);
                for (x, y) in s.as_mut_slice().iter_mut().zip(d.as_slice()) {
                    *x = (*x + y) * half;
                }
                s
            })
            .collect();
        Ok(Self {
            block: self.block,
            diag,
            couplings: self.couplings.clone(),
            groups: self.groups.clone(),
        })
    }

    /// Builds an operator from explicit parts; used for synthetic tests.
    pub fn from_parts(diag: Vec<CMatrix>, couplings: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let block = diag.first().map(|d| d.rows()).unwrap_or(0);
        if diag.iter().any(|d| d.rows() != block || d.cols() != block) {
            return Err(Error::Usage("diagonal blocks must share one square size".into()));
        }
        if couplings.len() != diag.len()
            || couplings
                .iter()
                .enumerate()
                .any(|(i, r)| r.iter().any(|&(j, _)| j >= diag.len() || j == i))
        {
            return Err(Error::Usage("coupling list does not match the block rows".into()));
        }
        let groups = partition(&couplings);
        Ok(Self {
            block,
            diag,
            couplings,
            groups,
        })
    }

    /// Angular block size `2M+1`.
    pub fn block_size(&self) -> usize {
        self.block
    }

    /// Number of radial rows.
    pub fn radial_rows(&self) -> usize {
        self.diag.len()
    }

    pub fn dim(&self) -> usize {
        self.block * self.diag.len()
    }

    pub fn diagonal_block(&self, row: usize) -> &CMatrix {
        &self.diag[row]
    }

    pub fn couplings(&self, row: usize) -> &[(usize, f64)] {
        &self.couplings[row]
    }

    /// Radial-row ranges of the super-blocks used by the sweep solver.
    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    /// Largest radial distance between coupled rows.
    pub fn block_bandwidth(&self) -> usize {
        self.couplings
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); x.len()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        let b = self.block;
        debug_assert_eq!(x.len(), self.dim());
        for (i, (d, row)) in self.diag.iter().zip(&self.couplings).enumerate() {
            let out = &mut y[i * b..(i + 1) * b];
            let xi = &x[i * b..(i + 1) * b];
            for (r, o) in out.iter_mut().enumerate() {
                *o = d.row(r).iter().zip(xi).map(|(a, v)| a * v).sum();
            }
            for &(j, w) in row {
                let xj = &x[j * b..(j + 1) * b];
                for (o, v) in out.iter_mut().zip(xj) {
                    *o += v * w;
                }
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let b = self.block;
        let mut a = CMatrix::zeros(self.dim(), self.dim());
        for (i, (d, row)) in self.diag.iter().zip(&self.couplings).enumerate() {
            for r in 0..b {
                for c in 0..b {
                    a[(i * b + r, i * b + c)] = d[(r, c)];
                }
                for &(j, w) in row {
                    a[(i * b + r, j * b + r)] += C64::new(w, 0.0);
                }
            }
        }
        a
    }

    /// Largest absolute row sum; a cheap bound on the operator norm.
    pub fn norm_estimate(&self) -> f64 {
        self.diag
            .iter()
            .zip(&self.couplings)
            .map(|(d, row)| {
                let off: f64 = row.iter().map(|&(_, w)| w.abs()).sum();
                (0..self.block)
                    .map(|r| d.row(r).iter().map(|v| v.norm()).sum::<f64>() + off)
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

/// Groups consecutive radial rows so that every coupling links rows in the
/// same or adjacent groups.
fn partition(couplings: &[Vec<(usize, f64)>]) -> Vec<Range<usize>> {
    let n = couplings.len();
    if n == 0 {
        return Vec::new();
    }
    let reach_hi: Vec<usize> = couplings
        .iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|&(j, _)| j).max().unwrap_or(i).max(i))
        .collect();
    let valid = |groups: &[Range<usize>]| {
        let mut owner = vec![0usize; n];
        for (g, r) in groups.iter().enumerate() {
            owner[r.clone()].fill(g);
        }
        couplings
            .iter()
            .enumerate()
            .all(|(i, r)| r.iter().all(|&(j, _)| owner[i].abs_diff(owner[j]) <= 1))
    };
    let max_first = n.min(reach_hi[0] + 1);
    let mut best: Option<Vec<Range<usize>>> = None;
    for first in 1..=max_first {
        let mut groups = std::iter::once(0..first).collect::<Vec<_>>();
        let mut start = first;
        while start < n {
            let prev = &groups[groups.len() - 1];
            let need = prev.clone().map(|i| reach_hi[i] + 1).max().unwrap_or(start + 1);
            let end = need.max(start + 1).min(n);
            groups.push(start..end);
            start = end;
        }
        while groups.len() > 1 && !valid(&groups) {
            let last = groups.pop().unwrap();
            let prev = groups.pop().unwrap();
            groups.push(prev.start..last.end);
        }
        let widest = groups.iter().map(|r| r.len()).max().unwrap_or(0);
        let better = match &best {
            None => true,
            Some(b) => widest < b.iter().map(|r| r.len()).max().unwrap_or(0),
        };
        if better {
            best = Some(groups);
        }
    }
    best.unwrap_or_else(|| std::iter::once(0..n).collect())
}
