//! The physical system: two opposite charges confined to a plane, in a uniform
//! magnetic field `B = B (sin α, 0, cos α)`.
//!
//! Relative-motion Hamiltonian at zero total momentum (atomic units):
//!
//! ```text
//! H = -∇²/(2 m_r) + (μ1 - μ2) B cos α L_z / (2 m_r)
//!     + B² ρ² (1 - sin²α cos²φ) / (8 m_r) - 1/(ε ρ)
//! ```
//!
//! Particle 1 is the heavier, positively charged one (proton or hole).

use serde::{Deserialize, Serialize};

use crate::constants::{MEV_PER_HARTREE, PROTON_ELECTRON_MASS_RATIO, TESLA_PER_AU};
use crate::error::{Error, Result};

/// Masses, screening and field of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Mass of particle 1 in electron masses.
    pub m1: f64,
    /// Mass of particle 2 in electron masses.
    pub m2: f64,
    /// Dielectric constant (1 for vacuum).
    pub epsilon: f64,
    /// Field strength in atomic units.
    pub b: f64,
    /// Tilt angle between field and plane normal, radians.
    pub alpha: f64,
}

impl SystemConfig {
    pub fn new(m1: f64, m2: f64, epsilon: f64, b: f64, alpha: f64) -> Result<Self> {
        let cfg = Self {
            m1,
            m2,
            epsilon,
            b,
            alpha,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m1, self.m2, self.epsilon, self.b, self.alpha]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("non-finite system parameter".into()));
        }
        if self.m1 <= 0.0 || self.m2 <= 0.0 {
            return Err(Error::Config(format!(
                "masses must be positive (m1 = {}, m2 = {})",
                self.m1, self.m2
            )));
        }
        if self.epsilon < 1.0 {
            return Err(Error::Config(format!(
                "dielectric constant must be >= 1 (got {})",
                self.epsilon
            )));
        }
        if self.b < 0.0 {
            return Err(Error::Config(format!("field strength must be >= 0 (got {})", self.b)));
        }
        // small slack so that degrees-to-radians of 90 passes
        if self.alpha < 0.0 || self.alpha > std::f64::consts::FRAC_PI_2 + 1e-12 {
            return Err(Error::Config(format!(
                "tilt angle must lie in [0, pi/2] (got {} rad)",
                self.alpha
            )));
        }
        Ok(())
    }

    pub fn total_mass(&self) -> f64 {
        self.m1 + self.m2
    }

    pub fn mu1(&self) -> f64 {
        self.m1 / self.total_mass()
    }

    pub fn mu2(&self) -> f64 {
        self.m2 / self.total_mass()
    }

    pub fn reduced_mass(&self) -> f64 {
        self.m1 * self.m2 / self.total_mass()
    }

    /// Effective Bohr radius `ε / m_r`.
    pub fn bohr_radius(&self) -> f64 {
        self.epsilon / self.reduced_mass()
    }

    pub fn with_field(mut self, b: f64, alpha: f64) -> Self {
        self.b = b;
        self.alpha = alpha;
        self
    }
}

/// Named systems with fixed masses and screening.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PresetSystem {
    /// Proton + electron, unscreened.
    Hydrogen2D,
    /// Heavy hole (0.18) + electron (0.067) in GaAs, ε = 12.1.
    ExcitonGaAs,
    Custom(SystemConfig),
}

impl PresetSystem {
    /// Configuration at field `b` (a.u.) and tilt `alpha` (rad). For `Custom`
    /// the stored field is replaced.
    pub fn config(&self, b: f64, alpha: f64) -> Result<SystemConfig> {
        let cfg = match *self {
            PresetSystem::Hydrogen2D => SystemConfig {
                m1: PROTON_ELECTRON_MASS_RATIO,
                m2: 1.0,
                epsilon: 1.0,
                b,
                alpha,
            },
            PresetSystem::ExcitonGaAs => SystemConfig {
                m1: 0.18,
                m2: 0.067,
                epsilon: 12.1,
                b,
                alpha,
            },
            PresetSystem::Custom(c) => c.with_field(b, alpha),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn name(&self) -> &'static str {
        match self {
            PresetSystem::Hydrogen2D => "hydrogen",
            PresetSystem::ExcitonGaAs => "exciton",
            PresetSystem::Custom(_) => "custom",
        }
    }
}

/// Scalar part of the effective potential (Coulomb plus the anisotropic
/// diamagnetic term), in Hartree.
pub fn scalar_potential(rho: f64, phi: f64, cfg: &SystemConfig) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!(
            "radius must be positive for the Coulomb term (got {rho})"
        )));
    }
    let mr = cfg.reduced_mass();
    let (sa, cp) = (cfg.alpha.sin(), phi.cos());
    let oscillator = 0.25 * cfg.b * cfg.b * rho * rho * (1.0 - sa * sa * cp * cp);
    Ok(oscillator / (2.0 * mr) - 1.0 / (cfg.epsilon * rho))
}

/// Coefficient multiplying the `L_z` eigenvalue `m` in the effective
/// potential: `(μ1 - μ2) B cos α / (2 m_r)`.
pub fn zeeman_coefficient(cfg: &SystemConfig) -> f64 {
    let c = (cfg.mu1() - cfg.mu2()) * cfg.b * cfg.alpha.cos() / (2.0 * cfg.reduced_mass());
    // cos(pi/2) is not exactly zero in floating point
    if (cfg.alpha - std::f64::consts::FRAC_PI_2).abs() < 1e-15 {
        0.0
    } else {
        c
    }
}

pub fn tesla_to_au(b_tesla: f64) -> f64 {
    b_tesla / TESLA_PER_AU
}

pub fn au_to_tesla(b_au: f64) -> f64 {
    b_au * TESLA_PER_AU
}

pub fn hartree_to_mev(e: f64) -> f64 {
    e * MEV_PER_HARTREE
}

pub fn mev_to_hartree(e_mev: f64) -> f64 {
    e_mev / MEV_PER_HARTREE
}

/// Field-free 2D Coulomb level `-m_r / (2 ε² (n - 1/2)²)`, `n >= 1`.
pub fn analytic_field_free_level(n: u32, cfg: &SystemConfig) -> Result<f64> {
    if n < 1 {
        return Err(Error::Domain("principal quantum number must be >= 1".into()));
    }
    let nh = n as f64 - 0.5;
    Ok(-cfg.reduced_mass() / (2.0 * cfg.epsilon * cfg.epsilon * nh * nh))
}
