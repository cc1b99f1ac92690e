//! Grid policy and the assembled problem for one `(system, B, α)` point.

use serde::{Deserialize, Serialize};

use crate::angular::AngularScheme;
use crate::error::{Error, Result};
use crate::hamiltonian::BlockBandedHamiltonian;
use crate::model::SystemConfig;
use crate::radial::{RadialScheme, StencilBasis};

/// Angular truncation that reproduces the published tables.
pub const DEFAULT_ANGULAR_ORDER: usize = 20;
pub const DEFAULT_RADIAL_NODES: usize = 200;

/// Outer radius: a fixed value or scaled from the Bohr and magnetic lengths.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum RhoMax {
    #[default]
    Auto,
    Fixed(f64),
}

impl Serialize for RhoMax {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RhoMax::Auto => s.serialize_str("auto"),
            RhoMax::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for RhoMax {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(RhoMax::Fixed(v)),
            Raw::Text(t) if t == "auto" => Ok(RhoMax::Auto),
            Raw::Text(t) => t
                .parse()
                .map(RhoMax::Fixed)
                .map_err(|_| serde::de::Error::custom(format!("rho_max must be a number or \"auto\", got {t:?}"))),
        }
    }
}

impl std::str::FromStr for RhoMax {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(RhoMax::Auto);
        }
        s.parse()
            .map(RhoMax::Fixed)
            .map_err(|_| Error::Config(format!("rho_max must be a number or \"auto\", got {s:?}")))
    }
}

/// `min(40 a, 24 l_B)` with `a = ε/m_r` and `l_B = 1/√B`.
pub fn auto_rho_max(cfg: &SystemConfig) -> f64 {
    let bohr = 40.0 * cfg.bohr_radius();
    if cfg.b > 0.0 {
        bohr.min(24.0 / cfg.b.sqrt())
    } else {
        bohr
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub m: usize,
    pub n: usize,
    pub rho_max: RhoMax,
    pub basis: StencilBasis,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            m: DEFAULT_ANGULAR_ORDER,
            n: DEFAULT_RADIAL_NODES,
            rho_max: RhoMax::Auto,
            basis: StencilBasis::SqrtRho,
        }
    }
}

/// Grid with every choice made explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolvedGrid {
    pub m: usize,
    pub n: usize,
    pub rho_max: f64,
    pub basis: StencilBasis,
}

impl GridSpec {
    pub fn new(m: usize, n: usize, rho_max: RhoMax) -> Self {
        Self {
            m,
            n,
            rho_max,
            basis: StencilBasis::SqrtRho,
        }
    }

    pub fn resolve(&self, cfg: &SystemConfig) -> Result<ResolvedGrid> {
        let rho_max = match self.rho_max {
            RhoMax::Auto => auto_rho_max(cfg),
            RhoMax::Fixed(v) => v,
        };
        if !(rho_max > 0.0) || !rho_max.is_finite() {
            return Err(Error::Config(format!("outer radius must be positive (got {rho_max})")));
        }
        Ok(ResolvedGrid {
            m: self.m,
            n: self.n,
            rho_max,
            basis: self.basis,
        })
    }
}

/// Schemes and Hamiltonian for one configuration.
#[derive(Debug, Clone)]
pub struct Problem {
    pub cfg: SystemConfig,
    pub grid: ResolvedGrid,
    pub angular: AngularScheme,
    pub radial: RadialScheme,
    pub hamiltonian: BlockBandedHamiltonian,
}

impl Problem {
    pub fn new(cfg: SystemConfig, spec: &GridSpec) -> Result<Self> {
        let grid = spec.resolve(&cfg)?;
        let angular = AngularScheme::new(grid.m);
        let radial = RadialScheme::new(grid.n, grid.rho_max, grid.basis)?;
        let hamiltonian = BlockBandedHamiltonian::assemble(&cfg, &angular, &radial)?;
        Ok(Self {
            cfg,
            grid,
            angular,
            radial,
            hamiltonian,
        })
    }

    /// The same problem with the angular potential averaged over a half-turn,
    /// so that the Hamiltonian commutes with the inversion `φ → φ + π`
    /// exactly. Only couplings between the highest momenta `|m| ≥ M-1`
    /// change.
    pub fn parity_symmetrized(&self) -> Result<Self> {
        let hamiltonian = self.hamiltonian.symmetrized(&self.angular.parity_matrix())?;
        Ok(Self {
            cfg: self.cfg,
            grid: self.grid,
            angular: self.angular.clone(),
            radial: self.radial.clone(),
            hamiltonian,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PresetSystem;

    #[test]
    fn auto_radius_shrinks_with_field() {
        let h = |b: f64| auto_rho_max(&PresetSystem::Hydrogen2D.config(b, 0.0).unwrap());
        assert!((h(0.0) - 40.0 / 0.99945568).abs() < 1e-4);
        assert!((h(4.0) - 12.0).abs() < 1e-12);
        assert!(h(100.0) < h(10.0));
        let x = PresetSystem::ExcitonGaAs
            .config(crate::model::tesla_to_au(2.0), 0.0)
            .unwrap();
        assert!(auto_rho_max(&x) > 1000.0);
    }

    #[test]
    fn rho_max_serde() {
        let g: GridSpec = serde_json::from_str(r#"{"m":4,"n":60,"rho_max":"auto"}"#).unwrap();
        assert_eq!(g.rho_max, RhoMax::Auto);
        assert_eq!(g.basis, StencilBasis::SqrtRho);
        let g: GridSpec = serde_json::from_str(r#"{"rho_max":12.5}"#).unwrap();
        assert_eq!(g.rho_max, RhoMax::Fixed(12.5));
        assert_eq!(g.m, DEFAULT_ANGULAR_ORDER);
        assert_eq!(serde_json::to_string(&RhoMax::Auto).unwrap(), "\"auto\"");
        assert!(serde_json::from_str::<GridSpec>(r#"{"rho_max":"far"}"#).is_err());
        assert_eq!("12.5".parse::<RhoMax>().unwrap(), RhoMax::Fixed(12.5));
        assert!("x".parse::<RhoMax>().is_err());
    }

    #[test]
    fn problem_builds() {
        let cfg = PresetSystem::Hydrogen2D.config(1.0, 0.3).unwrap();
        let p = Problem::new(cfg, &GridSpec::new(2, 20, RhoMax::Fixed(15.0))).unwrap();
        assert_eq!(p.hamiltonian.dim(), 19 * 5);
        assert!(Problem::new(cfg, &GridSpec::new(2, 20, RhoMax::Fixed(-1.0))).is_err());
    }
}
