//! Mapped radial grid and seven-point second-derivative stencils.
//!
//! Nodes are `ρ_k = ρ_N t_k²` with `t_k = k/N`, `k = 1..N`. The wavefunction
//! vanishes at `ρ_N`, so the unknowns live on the `N-1` nodes below it and
//! vectors passed to this module have that length.

use crate::error::{Error, Result};

/// Smallest radial resolution accepted by [`RadialScheme::new`].
pub const MIN_NODES: usize = 8;

const STENCIL_WIDTH: usize = 7;
const HALF_WIDTH: usize = 3;

/// How the seven-point stencils are built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilBasis {
    /// Interpolate `ψ/√ρ` by a polynomial and differentiate `√ρ` times it.
    /// Exact for `√ρ·p(ρ)` with `deg p ≤ 6`, which matches the behavior of the
    /// radial channels at the origin. The outer boundary uses odd reflection
    /// of `ψ` about `t = 1`.
    #[default]
    SqrtRho,
    /// Interpolate `ψ` itself, with the zero values at `ρ = 0` and `ρ = ρ_N`
    /// as stencil members and eight-point one-sided supports near both ends.
    Polynomial,
}

/// Weights for the derivatives of orders `0..=max_order` at `center`, from
/// polynomial interpolation through `nodes` (Fornberg's recursion).
///
/// Returns `c[d][j]`, the weight of node `j` for the `d`-th derivative.
pub fn fornberg_weights(center: f64, nodes: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - center;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - center;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Mapped nodes `ρ_N (k/N)²` for `k = 1..=N`.
pub fn mapped_nodes(n: usize, rho_max: f64) -> Vec<f64> {
    (1..=n).map(|k| mapped_point(k as f64, n, rho_max)).collect()
}

fn mapped_point(k: f64, n: usize, rho_max: f64) -> f64 {
    let t = k / n as f64;
    rho_max * t * t
}

/// One row of the discrete second derivative: unknown-column indices with
/// weights, after boundary values have been eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilRow {
    pub entries: Vec<(usize, f64)>,
}

/// Stencil before boundary elimination: support positions and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStencil {
    pub center: f64,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RawStencil {
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RadialScheme {
    n: usize,
    rho_max: f64,
    basis: StencilBasis,
    nodes: Vec<f64>,
    raw: Vec<RawStencil>,
    rows: Vec<StencilRow>,
}

impl RadialScheme {
    pub fn new(n: usize, rho_max: f64, basis: StencilBasis) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Config(format!(
                "radial grid needs at least {MIN_NODES} nodes (got {n})"
            )));
        }
        if !(rho_max > 0.0) || !rho_max.is_finite() {
            return Err(Error::Config(format!(
                "outer radius must be positive and finite (got {rho_max})"
            )));
        }
        let nodes = mapped_nodes(n, rho_max);
        let (raw, rows) = match basis {
            StencilBasis::SqrtRho => sqrt_rho_stencils(n, rho_max),
            StencilBasis::Polynomial => polynomial_stencils(n, rho_max),
        };
        Ok(Self {
            n,
            rho_max,
            basis,
            nodes,
            raw,
            rows,
        })
    }

    /// `N`, the number of mapped nodes including `ρ_N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of unknowns, `N-1`.
    pub fn dim(&self) -> usize {
        self.n - 1
    }

    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }

    pub fn basis(&self) -> StencilBasis {
        self.basis
    }

    /// All mapped nodes `ρ_1..ρ_N`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Nodes carrying unknowns, `ρ_1..ρ_{N-1}`.
    pub fn interior(&self) -> &[f64] {
        &self.nodes[..self.n - 1]
    }

    pub fn rows(&self) -> &[StencilRow] {
        &self.rows
    }

    pub fn raw_stencil(&self, row: usize) -> &RawStencil {
        &self.raw[row]
    }

    /// Largest `|i - j|` over all stencil entries.
    pub fn bandwidth(&self) -> usize {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.entries.iter().map(move |&(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Discrete `d²f/dρ²` at the unknown nodes; boundary values are zero.
    pub fn apply_second_derivative(&self, f: &[f64]) -> Result<Vec<f64>> {
        if f.len() != self.dim() {
            return Err(Error::Usage(format!(
                "expected {} radial values, got {}",
                self.dim(),
                f.len()
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|r| r.entries.iter().map(|&(j, w)| w * f[j]).sum())
            .collect())
    }

    /// Quadrature weights for `∫₀^{ρ_N} g(ρ) dρ` on the unknown nodes
    /// (trapezoid rule in `t`, `dρ = 2ρ_N t dt`).
    pub fn quadrature_weights(&self) -> Vec<f64> {
        let h = 1.0 / self.n as f64;
        (1..self.n).map(|k| 2.0 * self.rho_max * (k as f64 * h) * h).collect()
    }

    /// Weights `w_k` with `ψ(ρ)/√ρ ≈ Σ_k w_k ψ_k`, from cubic interpolation of
    /// `ψ/√ρ` through the four nearest nodes; the first segment extends to
    /// the origin. `None` outside `[0, ρ_N]`.
    pub fn interpolation_weights(&self, rho: f64) -> Option<Vec<(usize, f64)>> {
        if !(rho >= 0.0 && rho <= self.rho_max) {
            return None;
        }
        let t = (rho / self.rho_max).sqrt() * self.n as f64;
        // 1-based node index just below rho
        let below = (t.floor() as usize).clamp(1, self.n - 1);
        let start = below.saturating_sub(1).max(1).min(self.n - 3);
        let support: Vec<usize> = (start..start + 4).collect();
        let xs: Vec<f64> = support.iter().map(|&k| self.nodes[k - 1]).collect();
        let c = fornberg_weights(rho, &xs, 0);
        Some(
            support
                .iter()
                .zip(&c[0])
                .filter(|(&k, _)| k < self.n)
                .map(|(&k, &w)| (k - 1, w / self.nodes[k - 1].sqrt()))
                .collect(),
        )
    }
}

fn push_entry(entries: &mut Vec<(usize, f64)>, col: usize, w: f64) {
    match entries.iter_mut().find(|(c, _)| *c == col) {
        Some(e) => e.1 += w,
        None => entries.push((col, w)),
    }
}

fn finish_row(mut entries: Vec<(usize, f64)>) -> StencilRow {
    entries.sort_by_key(|&(c, _)| c);
    StencilRow { entries }
}

fn sqrt_rho_stencils(n: usize, rho_max: f64) -> (Vec<RawStencil>, Vec<StencilRow>) {
    let mut raw = Vec::with_capacity(n - 1);
    let mut rows = Vec::with_capacity(n - 1);
    for k in 1..n {
        let start = k.saturating_sub(HALF_WIDTH).max(1);
        let support: Vec<usize> = (start..start + STENCIL_WIDTH).collect();
        let points: Vec<f64> = support.iter().map(|&j| mapped_point(j as f64, n, rho_max)).collect();
        let rk = mapped_point(k as f64, n, rho_max);
        let c = fornberg_weights(rk, &points, 2);
        let weights: Vec<f64> = points
            .iter()
            .enumerate()
            .map(|(i, &rj)| {
                let mut w = (rk / rj).sqrt() * (c[2][i] + c[1][i] / rk);
                if support[i] == k {
                    w -= 0.25 / (rk * rk);
                }
                w
            })
            .collect();

        let mut entries = Vec::with_capacity(STENCIL_WIDTH);
        for (&j, &w) in support.iter().zip(&weights) {
            match j.cmp(&n) {
                std::cmp::Ordering::Less => push_entry(&mut entries, j - 1, w),
                std::cmp::Ordering::Equal => {}
                // odd reflection about t = 1
                std::cmp::Ordering::Greater => push_entry(&mut entries, 2 * n - j - 1, -w),
            }
        }
        raw.push(RawStencil {
            center: rk,
            points,
            weights,
        });
        rows.push(finish_row(entries));
    }
    (raw, rows)
}

fn polynomial_stencils(n: usize, rho_max: f64) -> (Vec<RawStencil>, Vec<StencilRow>) {
    let mut raw = Vec::with_capacity(n - 1);
    let mut rows = Vec::with_capacity(n - 1);
    for k in 1..n {
        // support indices in 0..=n; 0 and n are boundary zeros. Off-center
        // rows take one extra node to stay sixth order.
        let centered = k >= HALF_WIDTH && k + HALF_WIDTH <= n;
        let width = if centered { STENCIL_WIDTH } else { STENCIL_WIDTH + 1 };
        let start = k.saturating_sub(HALF_WIDTH).min(n + 1 - width);
        let support: Vec<usize> = (start..start + width).collect();
        let points: Vec<f64> = support.iter().map(|&j| mapped_point(j as f64, n, rho_max)).collect();
        let rk = mapped_point(k as f64, n, rho_max);
        let weights = fornberg_weights(rk, &points, 2).swap_remove(2);
        let entries = support
            .iter()
            .zip(&weights)
            .filter(|(&j, _)| j != 0 && j != n)
            .map(|(&j, &w)| (j - 1, w))
            .collect();
        raw.push(RawStencil {
            center: rk,
            points,
            weights,
        });
        rows.push(finish_row(entries));
    }
    (raw, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn node_mapping() {
        assert_eq!(mapped_nodes(4, 16.0), vec![1.0, 4.0, 9.0, 16.0]);
        let s = RadialScheme::new(20, 30.0, StencilBasis::SqrtRho).unwrap();
        assert!((s.nodes()[0] / s.rho_max() - 1.0 / 400.0).abs() < 1e-15);
        assert!(s.nodes().windows(2).all(|w| w[1] > w[0]));
        assert_eq!(s.dim(), 19);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            RadialScheme::new(7, 10.0, StencilBasis::SqrtRho),
            Err(Error::Config(_))
        ));
        assert!(RadialScheme::new(10, 0.0, StencilBasis::Polynomial).is_err());
        assert!(RadialScheme::new(10, f64::NAN, StencilBasis::Polynomial).is_err());
    }

    #[test]
    fn uniform_central_weights() {
        let h = 0.37;
        let pts: Vec<f64> = (-3..=3).map(|i| 2.0 + i as f64 * h).collect();
        let c = fornberg_weights(2.0, &pts, 2);
        let want = [1.0 / 90.0, -3.0 / 20.0, 1.5, -49.0 / 18.0, 1.5, -3.0 / 20.0, 1.0 / 90.0];
        for (a, b) in c[2].iter().zip(want) {
            assert!((a * h * h - b).abs() < 1e-12, "{a} vs {b}");
        }
        // lower orders come out of the same recursion
        assert!((c[0][3] - 1.0).abs() < 1e-14);
        assert!(c[1].iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn raw_polynomial_stencils_are_exact_to_degree_six() {
        let s = RadialScheme::new(24, 20.0, StencilBasis::Polynomial).unwrap();
        for i in 0..s.dim() {
            let st = s.raw_stencil(i);
            let x = st.center;
            assert!(st.apply(|_| 1.0).abs() < 1e-9 * st.weights.iter().map(|w| w.abs()).sum::<f64>());
            let d6 = st.apply(|r| r.powi(6));
            assert!((d6 - 30.0 * x.powi(4)).abs() <= 1e-10 * 30.0 * x.powi(4), "row {i}");
        }
    }

    #[test]
    fn raw_sqrt_rho_stencils_are_exact_for_sqrt_rho_polynomials() {
        let s = RadialScheme::new(24, 20.0, StencilBasis::SqrtRho).unwrap();
        for i in 0..s.dim() {
            let st = s.raw_stencil(i);
            let x = st.center;
            // f = ρ^{1/2} ρ³: f'' = (3.5)(2.5) ρ^{3/2}
            let got = st.apply(|r| r.powf(3.5));
            let want = 8.75 * x.powf(1.5);
            assert!((got - want).abs() <= 1e-9 * want, "row {i}: {got} vs {want}");
            let got = st.apply(f64::sqrt);
            let want = -0.25 * x.powf(-1.5);
            assert!((got - want).abs() <= 1e-9 * want.abs(), "row {i}");
        }
    }

    #[test]
    fn quadratic_reproduced_exactly() {
        let rho_max = 12.0;
        let s = RadialScheme::new(30, rho_max, StencilBasis::Polynomial).unwrap();
        let f: Vec<f64> = s.interior().iter().map(|r| r * (rho_max - r)).collect();
        let d = s.apply_second_derivative(&f).unwrap();
        for v in d {
            assert!((v + 2.0).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn zero_in_zero_out_and_length_check() {
        let s = RadialScheme::new(10, 5.0, StencilBasis::SqrtRho).unwrap();
        assert!(s.apply_second_derivative(&[0.0; 9]).unwrap().iter().all(|&v| v == 0.0));
        assert!(matches!(s.apply_second_derivative(&[1.0; 10]), Err(Error::Usage(_))));
    }

    fn max_error(n: usize, rho_max: f64, f: impl Fn(f64) -> f64, d2: impl Fn(f64) -> f64) -> f64 {
        let s = RadialScheme::new(n, rho_max, StencilBasis::Polynomial).unwrap();
        let v: Vec<f64> = s.interior().iter().map(|&r| f(r)).collect();
        let d = s.apply_second_derivative(&v).unwrap();
        d.iter()
            .zip(s.interior())
            .map(|(a, &r)| (a - d2(r)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn sixth_order_on_sine() {
        let rho_max = 20.0;
        let k = PI / rho_max;
        let e: Vec<f64> = [100, 200]
            .iter()
            .map(|&n| max_error(n, rho_max, |r| (k * r).sin(), |r| -k * k * (k * r).sin()) / (k * k))
            .collect();
        let p = (e[0] / e[1]).log2();
        assert!((5.5..=6.5).contains(&p), "order {p}");
    }

    #[test]
    fn sixth_order_on_bump() {
        let g = |r: f64| (-(r - 10.0) * (r - 10.0)).exp();
        let g2 = |r: f64| (4.0 * (r - 10.0) * (r - 10.0) - 2.0) * g(r);
        let e: Vec<f64> = [100, 200, 400].iter().map(|&n| max_error(n, 20.0, g, g2)).collect();
        for w in e.windows(2) {
            let p = (w[0] / w[1]).log2();
            assert!((5.5..=6.5).contains(&p), "order {p} from {e:?}");
        }
    }

    #[test]
    fn bandwidth_near_origin() {
        let s = RadialScheme::new(40, 30.0, StencilBasis::SqrtRho).unwrap();
        assert_eq!(s.bandwidth(), 6);
        for (i, r) in s.rows().iter().enumerate().skip(3) {
            assert!(r.entries.iter().all(|&(j, _)| i.abs_diff(j) <= 3));
        }
    }

    #[test]
    fn quadrature_integrates_smooth_density() {
        let s = RadialScheme::new(200, 30.0, StencilBasis::SqrtRho).unwrap();
        // ∫ 4ρ e^{-2ρ} dρ = 1
        let q: f64 = s
            .interior()
            .iter()
            .zip(s.quadrature_weights())
            .map(|(r, w)| w * 4.0 * r * (-2.0 * r).exp())
            .sum();
        assert!((q - 1.0).abs() < 1e-6, "{q}");
    }

    #[test]
    fn interpolation_is_cardinal_and_accurate() {
        let s = RadialScheme::new(60, 20.0, StencilBasis::SqrtRho).unwrap();
        let psi: Vec<f64> = s.interior().iter().map(|r| r.sqrt() * (-r).exp()).collect();
        let eval = |rho: f64| -> f64 {
            s.interpolation_weights(rho)
                .unwrap()
                .iter()
                .map(|&(k, w)| w * psi[k])
                .sum()
        };
        for k in [0usize, 5, 30, 58] {
            let r = s.interior()[k];
            assert!((eval(r) - psi[k] / r.sqrt()).abs() < 1e-12);
        }
        for rho in [0.05, 0.9, 3.3, 11.0] {
            assert!((eval(rho) - (-rho).exp()).abs() < 1e-4, "{rho}");
        }
        assert!((eval(0.0) - 1.0).abs() < 1e-4);
        assert!(s.interpolation_weights(-0.1).is_none());
        assert!(s.interpolation_weights(20.5).is_none());
    }
}
