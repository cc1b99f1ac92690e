//! Physical constants used at the I/O boundary.
//!
//! All internal computations run in atomic units (hbar = m_e = e = 1). The only
//! places where SI-ish units appear are field strengths given in Tesla and
//! energies reported in meV; the conversion factors live here and nowhere else.

use serde::{Deserialize, Serialize};

/// Proton to electron mass ratio.
pub const PROTON_ELECTRON_MASS_RATIO: f64 = 1836.15267;

/// Tesla per atomic unit of magnetic field.
pub const TESLA_PER_AU: f64 = 2.350517567e5;

/// meV per Hartree.
pub const MEV_PER_HARTREE: f64 = 27211.386;

/// Bundle of the conversion constants, serialized into every run summary so
/// outputs record exactly which values were used.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub proton_electron_mass_ratio: f64,
    pub tesla_per_au: f64,
    pub mev_per_hartree: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            proton_electron_mass_ratio: PROTON_ELECTRON_MASS_RATIO,
            tesla_per_au: TESLA_PER_AU,
            mev_per_hartree: MEV_PER_HARTREE,
        }
    }
}
