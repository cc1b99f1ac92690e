//! Single-channel radial problems for an untilted field.
//!
//! At `α = 0` angular momentum is conserved and the 2D problem splits into
//! independent radial equations, one per `m`:
//!
//! `(1/2m_r)[-ψ'' + (m² - ¼)ψ/ρ²] + [(μ1-μ2)Bm/(2m_r) + B²ρ²/(8m_r) - 1/(ερ)]ψ = Eψ`

use crate::eigen::{ground_state_bound, spectrum_scan, ScanRequest, SolverOptions};
use crate::error::{Error, Result};
use crate::hamiltonian::BlockBandedHamiltonian;
use crate::linalg::{CMatrix, C64};
use crate::model::{zeeman_coefficient, SystemConfig};
use crate::radial::RadialScheme;

/// Radial operator of angular momentum `m`, as a block-banded operator with
/// 1×1 blocks.
pub fn axial_channel(cfg: &SystemConfig, m: i64, rad: &RadialScheme) -> Result<BlockBandedHamiltonian> {
    if cfg.alpha != 0.0 {
        return Err(Error::Config(format!(
            "angular momentum channels decouple only for an untilted field (alpha = {})",
            cfg.alpha
        )));
    }
    let scale = 1.0 / (2.0 * cfg.reduced_mass());
    let zee = zeeman_coefficient(cfg) * m as f64;
    let mm = (m * m) as f64;
    let mut diag = Vec::with_capacity(rad.dim());
    let mut couplings = Vec::with_capacity(rad.dim());
    for (i, (row, &rho)) in rad.rows().iter().zip(rad.interior()).enumerate() {
        let mut d = (mm - 0.25) / (rho * rho) * scale + zee + 0.25 * cfg.b * cfg.b * rho * rho * scale
            - 1.0 / (cfg.epsilon * rho);
        let mut off = Vec::new();
        for &(j, w) in &row.entries {
            if j == i {
                d -= w * scale;
            } else {
                off.push((j, -w * scale));
            }
        }
        diag.push(CMatrix::from_fn(1, 1, |_, _| C64::new(d, 0.0)));
        couplings.push(off);
    }
    BlockBandedHamiltonian::from_parts(diag, couplings)
}

/// Lowest `count` levels of channel `m`, ascending.
pub fn axial_levels(
    cfg: &SystemConfig,
    m: i64,
    rad: &RadialScheme,
    count: usize,
    opts: &SolverOptions,
) -> Result<Vec<f64>> {
    let h = axial_channel(cfg, m, rad)?;
    let lo = ground_state_bound(cfg) * (1.0 + 1e-6) - 1e-12;
    let hi = lo.abs().max(1.0) + h.norm_estimate();
    let s = spectrum_scan(&h, ScanRequest::lowest(lo, hi, count), opts)?;
    Ok(s.energies())
}

/// Union of all channels `|m| ≤ max_m` within `[lo, hi]`, tagged by `m`.
pub fn decoupled_spectrum(
    cfg: &SystemConfig,
    max_m: usize,
    rad: &RadialScheme,
    lo: f64,
    hi: f64,
    opts: &SolverOptions,
) -> Result<Vec<(i64, f64)>> {
    let mut out = Vec::new();
    for m in -(max_m as i64)..=max_m as i64 {
        let h = axial_channel(cfg, m, rad)?;
        let s = spectrum_scan(&h, ScanRequest::window(lo, hi), opts)?;
        out.extend(s.energies().into_iter().map(|e| (m, e)));
    }
    out.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(out)
}
