//! Angular discrete variable representation.
//!
//! The wavefunction is sampled on `2M+1` equidistant angles. The Fourier
//! functions `ξ_m(φ) = (-1)^m e^{imφ} / √(2π)`, `m = -M..M`, evaluated on the
//! grid give the transform `ξ_{jm}`; its inverse is `(2π/(2M+1)) ξ*_{jm}`.
//! Operators diagonal in `m` (∂²/∂φ² and `L_z`) become dense grid matrices,
//! while functions of `φ` become diagonal.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::model::{zeeman_coefficient, SystemConfig};

#[derive(Debug, Clone)]
pub struct AngularScheme {
    m: usize,
    nodes: Vec<f64>,
    xi: CMatrix,
    xi_inv: CMatrix,
    h0: CMatrix,
    h1: CMatrix,
}

impl AngularScheme {
    /// Builds the grid, the transform pair and the operator matrices
    /// `h0 = -Σ m² ξ_{jm} ξ⁻¹_{mj'}` and `h1 = Σ m ξ_{jm} ξ⁻¹_{mj'}`.
    pub fn new(m: usize) -> Self {
        let size = 2 * m + 1;
        let nodes: Vec<f64> = (0..size).map(|j| 2.0 * PI * j as f64 / size as f64).collect();
        let norm = 1.0 / (2.0 * PI).sqrt();
        // column k <-> m = k - M
        let xi = CMatrix::from_fn(size, size, |j, k| {
            let mm = k as i64 - m as i64;
            let sign = if mm.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            C64::from_polar(sign * norm, mm as f64 * nodes[j])
        });
        let w = 2.0 * PI / size as f64;
        let xi_inv = CMatrix::from_fn(size, size, |k, j| xi[(j, k)].conj() * w);

        let mut h0 = CMatrix::zeros(size, size);
        let mut h1 = CMatrix::zeros(size, size);
        for j in 0..size {
            for jp in 0..size {
                let (mut s0, mut s1) = (ZERO, ZERO);
                for k in 0..size {
                    let mm = k as f64 - m as f64;
                    let p = xi[(j, k)] * xi_inv[(k, jp)];
                    s0 -= p * (mm * mm);
                    s1 += p * mm;
                }
                h0[(j, jp)] = s0;
                h1[(j, jp)] = s1;
            }
        }
        Self {
            m,
            nodes,
            xi,
            xi_inv,
            h0,
            h1,
        }
    }

    /// Truncation order `M`.
    pub fn order(&self) -> usize {
        self.m
    }

    /// Number of grid angles, `2M+1`.
    pub fn size(&self) -> usize {
        2 * self.m + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Angular momenta in column order of `xi`.
    pub fn momenta(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.size()).map(move |k| k as i64 - self.m as i64)
    }

    pub fn xi(&self) -> &CMatrix {
        &self.xi
    }

    pub fn xi_inv(&self) -> &CMatrix {
        &self.xi_inv
    }

    /// Grid matrix of ∂²/∂φ².
    pub fn h0(&self) -> &CMatrix {
        &self.h0
    }

    /// Grid matrix of `L_z = -i ∂/∂φ`.
    pub fn h1(&self) -> &CMatrix {
        &self.h1
    }

    /// `ξ_m(φ)` for `m` in `-M..=M`.
    pub fn basis_function(m: i64, phi: f64) -> C64 {
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        C64::from_polar(sign / (2.0 * PI).sqrt(), m as f64 * phi)
    }

    /// Interpolates grid values `f_j` to an arbitrary angle through the
    /// truncated Fourier series `Σ_m ξ_m(φ) Σ_j ξ⁻¹_{mj} f_j`.
    pub fn interpolate(&self, values: &[C64], phi: f64) -> C64 {
        debug_assert_eq!(values.len(), self.size());
        self.momenta()
            .enumerate()
            .map(|(k, mm)| {
                let coeff: C64 = self.xi_inv.row(k).iter().zip(values).map(|(a, b)| a * b).sum();
                Self::basis_function(mm, phi) * coeff
            })
            .sum()
    }

    /// Weights `λ_j(φ)` with `interpolate(f, φ) = Σ_j λ_j(φ) f_j`.
    pub fn cardinal_weights(&self, phi: f64) -> Vec<C64> {
        let basis: Vec<C64> = self.momenta().map(|mm| Self::basis_function(mm, phi)).collect();
        (0..self.size())
            .map(|j| basis.iter().enumerate().map(|(k, b)| b * self.xi_inv[(k, j)]).sum())
            .collect()
    }

    /// Grid matrix of the inversion `φ → φ + π`, `Σ_m (-1)^m ξ_{jm} ξ⁻¹_{mj'}`.
    /// Commutes with `h0` and `h1` but not with the sampled `cos²φ_j`: the
    /// node set is not closed under a half-turn.
    pub fn parity_matrix(&self) -> CMatrix {
        let size = self.size();
        CMatrix::from_fn(size, size, |j, jp| {
            self.momenta()
                .enumerate()
                .map(|(k, mm)| {
                    let p = self.xi[(j, k)] * self.xi_inv[(k, jp)];
                    if mm.rem_euclid(2) == 0 {
                        p
                    } else {
                        -p
                    }
                })
                .sum()
        })
    }

    /// Grid-basis matrix of the multiplicative operator `f(φ)`, transformed to
    /// the `m` representation: `ξ⁻¹ diag(f(φ_j)) ξ`.
    pub fn to_momentum_basis(&self, grid: &CMatrix) -> CMatrix {
        self.xi_inv.matmul(grid).matmul(&self.xi)
    }
}

/// Potential matrix at radius `rho` in the grid basis, scaled by `2 m_r`:
///
/// `V_{jj'} = [-2 m_r/(ε ρ) + ¼B²ρ²(1 - sin²α cos²φ_j)] δ_{jj'} + (μ1-μ2) B cos α h1_{jj'}`
pub fn potential_matrix(rho: f64, cfg: &SystemConfig, scheme: &AngularScheme) -> Result<CMatrix> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!(
            "potential matrix needs a positive radius (got {rho})"
        )));
    }
    let mr = cfg.reduced_mass();
    let zeeman = 2.0 * mr * zeeman_coefficient(cfg);
    let s2 = cfg.alpha.sin().powi(2);
    let coulomb = -2.0 * mr / (cfg.epsilon * rho);
    let osc = 0.25 * cfg.b * cfg.b * rho * rho;
    let mut v = scheme.h1().scale(C64::new(zeeman, 0.0));
    for (j, &phi) in scheme.nodes().iter().enumerate() {
        let c = phi.cos();
        v[(j, j)] += C64::new(coulomb + osc * (1.0 - s2 * c * c), 0.0);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_eigenvalues, CMatrix};
    use crate::model::PresetSystem;
    use std::f64::consts::FRAC_PI_4;

    fn hermiticity(a: &CMatrix) -> f64 {
        a.max_abs_diff(&a.adjoint())
    }

    #[test]
    fn trivial_order_zero() {
        let s = AngularScheme::new(0);
        assert_eq!(s.nodes(), &[0.0]);
        assert!(s.h0()[(0, 0)].norm() < 1e-15);
        assert!(s.h1()[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn transform_is_inverted() {
        let s = AngularScheme::new(3);
        let id = s.xi().matmul(s.xi_inv());
        assert!(id.max_abs_diff(&CMatrix::identity(7)) < 1e-14);
    }

    #[test]
    fn h1_adjacent_entry() {
        let s = AngularScheme::new(1);
        // phi_1 - phi_0 = 2pi/3
        let expected = (2.0 / 3.0) * (2.0 * PI / 3.0).sin();
        let e = s.h1()[(1, 0)];
        assert!(e.re.abs() < 1e-15);
        assert!((e.im - expected).abs() < 1e-14);
        assert!((expected - 0.57735).abs() < 1e-5);
    }

    #[test]
    fn operator_structure() {
        for m in [1usize, 2, 5, 8] {
            let s = AngularScheme::new(m);
            let n = s.size();
            assert!(hermiticity(s.h0()) < 1e-13);
            assert!(hermiticity(s.h1()) < 1e-13);
            for i in 0..n {
                let r0: C64 = s.h0().row(i).iter().sum();
                let r1: C64 = s.h1().row(i).iter().sum();
                assert!(r0.norm() < 1e-12 && r1.norm() < 1e-12);
                for j in 0..n {
                    let (a, b) = (s.h0()[(i, j)], s.h1()[(i, j)]);
                    assert!(a.im.abs() < 1e-13, "h0 real");
                    assert!(b.re.abs() < 1e-13, "h1 imaginary");
                    assert!((b + s.h1()[(j, i)]).norm() < 1e-13, "h1 antisymmetric");
                    // circulant
                    let (i2, j2) = ((i + 1) % n, (j + 1) % n);
                    assert!((a - s.h0()[(i2, j2)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spectral_exactness() {
        for m in [0usize, 3, 16, 64] {
            let s = AngularScheme::new(m);
            let e0 = hermitian_eigenvalues(s.h0());
            let e1 = hermitian_eigenvalues(s.h1());
            let mut want0: Vec<f64> = s.momenta().map(|k| -((k * k) as f64)).collect();
            want0.sort_by(f64::total_cmp);
            let want1: Vec<f64> = s.momenta().map(|k| k as f64).collect();
            for (a, b) in e0.iter().zip(&want0) {
                assert!((a - b).abs() < 1e-12 * (1.0 + b.abs()).max(1.0) * 10.0, "{a} vs {b}");
            }
            for (a, b) in e1.iter().zip(&want1) {
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn cos_squared_couples_delta_m_two() {
        let m = 6usize;
        let s = AngularScheme::new(m);
        let n = s.size();
        let grid = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                C64::new(s.nodes()[i].cos().powi(2), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let mb = s.to_momentum_basis(&grid);
        for a in 0..n {
            for b in 0..n {
                let d = a as i64 - b as i64;
                let want = if d == 0 {
                    0.5
                } else if d.abs() == 2 {
                    // (-1)^{Δm} phase of the basis is +1 for |Δm| = 2
                    0.25
                } else if (d.rem_euclid(n as i64) == 2) || (d.rem_euclid(n as i64) == n as i64 - 2) {
                    // aliased coupling across the truncation edge
                    -0.25
                } else {
                    0.0
                };
                assert!(
                    (mb[(a, b)].re - want).abs() < 1e-13 && mb[(a, b)].im.abs() < 1e-13,
                    "({a},{b}) {} vs {want}",
                    mb[(a, b)]
                );
            }
        }
    }

    #[test]
    fn potential_matrix_limits() {
        let s = AngularScheme::new(3);
        let free = PresetSystem::Hydrogen2D.config(0.0, 0.7).unwrap();
        let v = potential_matrix(2.5, &free, &s).unwrap();
        let mr = free.reduced_mass();
        let want = CMatrix::identity(7).scale(C64::new(-2.0 * mr / 2.5, 0.0));
        assert!(v.max_abs_diff(&want) < 1e-14);

        let axial = PresetSystem::Hydrogen2D.config(0.5, 0.0).unwrap();
        let v = potential_matrix(1.7, &axial, &s).unwrap();
        for j in 1..7 {
            assert!((v[(j, j)] - v[(0, 0)]).norm() < 1e-14);
        }
        assert!(hermiticity(&v) < 1e-14);
        assert!(potential_matrix(0.0, &axial, &s).is_err());
    }

    #[test]
    fn potential_matrix_matches_momentum_construction() {
        let m = 1usize;
        let s = AngularScheme::new(m);
        let n = s.size();
        let cfg = PresetSystem::Hydrogen2D.config(0.5, FRAC_PI_4).unwrap();
        let (rho, mr) = (1.0, cfg.reduced_mass());
        let s2 = cfg.alpha.sin().powi(2);
        let osc = 0.25 * cfg.b * cfg.b * rho * rho;
        let zee = (cfg.mu1() - cfg.mu2()) * cfg.b * cfg.alpha.cos();
        // cos²φ = 1/2 + (e^{2iφ} + e^{-2iφ})/4; on 2M+1 points Δm = ±2 aliases modulo 2M+1,
        // and the (-1)^m phase convention contributes (-1)^{Δm} with the unaliased Δm.
        let vm = CMatrix::from_fn(n, n, |a, b| {
            let (ma, mb) = (a as i64 - m as i64, b as i64 - m as i64);
            let mut v = 0.0;
            if a == b {
                v += -2.0 * mr / rho + osc * (1.0 - 0.5 * s2) + zee * ma as f64;
            }
            for k in [-2i64, 2] {
                let d = ma - mb - k;
                if d.rem_euclid(n as i64) == 0 {
                    let phase = if (ma - mb).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    v += -osc * s2 * 0.25 * phase;
                }
            }
            C64::new(v, 0.0)
        });
        let grid = s.xi().matmul(&vm).matmul(s.xi_inv());
        let v = potential_matrix(rho, &cfg, &s).unwrap();
        assert!(v.max_abs_diff(&grid) < 1e-12, "diff {}", v.max_abs_diff(&grid));
    }

    #[test]
    fn interpolation_is_cardinal_on_nodes() {
        let s = AngularScheme::new(4);
        let vals: Vec<C64> = (0..9).map(|j| C64::new(j as f64, -(j as f64) * 0.5)).collect();
        for (j, &phi) in s.nodes().iter().enumerate() {
            assert!((s.interpolate(&vals, phi) - vals[j]).norm() < 1e-12);
        }
        let w = s.cardinal_weights(0.3);
        let direct: C64 = w.iter().zip(&vals).map(|(a, b)| a * b).sum();
        assert!((direct - s.interpolate(&vals, 0.3)).norm() < 1e-12);
    }

    #[test]
    fn parity_is_an_involution_commuting_with_momentum_operators() {
        let s = AngularScheme::new(5);
        let p = s.parity_matrix();
        assert!(p.matmul(&p).max_abs_diff(&CMatrix::identity(11)) < 1e-13);
        assert!(hermiticity(&p) < 1e-13);
        for op in [s.h0(), s.h1()] {
            assert!(p.matmul(op).max_abs_diff(&op.matmul(&p)) < 1e-12);
        }
    }
}
