//! Run configuration: JSON file fields, overridden by command-line flags.

use std::path::Path;

use anyhow::{bail, Context, Result};
use magneto2d::eigen::SolverOptions;
use magneto2d::grid::GridSpec;
use magneto2d::model::{PresetSystem, SystemConfig};
use magneto2d::observables::{Extents, ParityClass, Tracking, UnitSystem};
use magneto2d::par::Execution;
use magneto2d::reference::StateLabel;
use magneto2d::stats::{Unfolding, DEFAULT_BINS, DEFAULT_RANGE, DEFAULT_WINDOW};
use magneto2d::verification::Profile;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SystemChoice {
    #[default]
    Hydrogen,
    Exciton,
    Custom {
        m1: f64,
        m2: f64,
        epsilon: f64,
    },
}

impl SystemChoice {
    pub fn preset(self) -> Result<PresetSystem> {
        Ok(match self {
            SystemChoice::Hydrogen => PresetSystem::Hydrogen2D,
            SystemChoice::Exciton => PresetSystem::ExcitonGaAs,
            SystemChoice::Custom { m1, m2, epsilon } => {
                PresetSystem::Custom(SystemConfig::new(m1, m2, epsilon, 0.0, 0.0)?)
            }
        })
    }

    /// Hydrogen-like systems work in atomic units, the exciton in Tesla/meV.
    pub fn units(self) -> UnitSystem {
        match self {
            SystemChoice::Exciton => UnitSystem::Laboratory,
            _ => UnitSystem::Atomic,
        }
    }
}

impl std::str::FromStr for SystemChoice {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hydrogen" => Ok(SystemChoice::Hydrogen),
            "exciton" => Ok(SystemChoice::Exciton),
            _ => bail!("system must be hydrogen or exciton (custom systems need a config file), got {s:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub block: usize,
    pub batch: usize,
    pub execution: Execution,
}

impl Default for SolverSettings {
    fn default() -> Self {
        let o = SolverOptions::default();
        Self {
            tol: o.tol,
            max_iter: o.max_iter,
            seed: o.seed,
            block: o.block,
            batch: o.batch,
            execution: o.execution,
        }
    }
}

impl SolverSettings {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            block: self.block,
            batch: self.batch,
            execution: self.execution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSettings {
    /// window in the energy unit of the system
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSettings {
    pub b: Vec<f64>,
    pub alpha_deg: Vec<f64>,
    pub states: Vec<StateLabel>,
    pub tracking: Tracking,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            b: Vec::new(),
            alpha_deg: Vec::new(),
            states: vec![StateLabel::Energy(1), StateLabel::Energy(2), StateLabel::Energy(3)],
            tracking: Tracking::Overlap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensitySettings {
    pub state: StateLabel,
    pub nx: usize,
    pub ny: usize,
    pub extents: Option<Extents>,
}

impl Default for DensitySettings {
    fn default() -> Self {
        Self {
            state: StateLabel::Energy(0),
            nx: magneto2d::observables::DEFAULT_DENSITY_RESOLUTION,
            ny: magneto2d::observables::DEFAULT_DENSITY_RESOLUTION,
            extents: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NnsdSettings {
    /// levels in the histogram window, ground state excluded
    pub levels: usize,
    pub bins: usize,
    pub range: f64,
    pub parity: ParityClass,
    pub unfolding: Unfolding,
}

impl Default for NnsdSettings {
    fn default() -> Self {
        Self {
            levels: DEFAULT_WINDOW,
            bins: DEFAULT_BINS,
            range: DEFAULT_RANGE,
            parity: ParityClass::All,
            unfolding: Unfolding::Global,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rung {
    pub m: usize,
    pub n: usize,
    pub rho_max: f64,
}

impl std::str::FromStr for Rung {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            bail!("ladder rung must be M,N,rho_max (got {s:?})");
        }
        Ok(Rung {
            m: parts[0].parse().with_context(|| format!("bad M in rung {s:?}"))?,
            n: parts[1].parse().with_context(|| format!("bad N in rung {s:?}"))?,
            rho_max: parts[2].parse().with_context(|| format!("bad rho_max in rung {s:?}"))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSettings {
    pub ladder: Vec<Rung>,
    pub states: Vec<StateLabel>,
    /// largest change between rungs accepted as converged
    pub threshold: f64,
}

impl Default for ConvergeSettings {
    fn default() -> Self {
        Self {
            ladder: Vec::new(),
            states: vec![StateLabel::Energy(0), StateLabel::Energy(1)],
            threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub profile: Profile,
}

/// Everything a run needs. Field strength and energies are in the system's
/// units: atomic units for hydrogen and custom systems, Tesla and meV for the
/// exciton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemChoice,
    pub b: f64,
    pub alpha_deg: f64,
    pub grid: GridSpec,
    pub solver: SolverSettings,
    pub spectrum: SpectrumSettings,
    pub sweep: SweepSettings,
    pub density: DensitySettings,
    pub nnsd: NnsdSettings,
    pub converge: ConvergeSettings,
    pub verify: VerifySettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            system: SystemChoice::Hydrogen,
            b: 0.0,
            alpha_deg: 0.0,
            grid: GridSpec::default(),
            solver: SolverSettings::default(),
            spectrum: SpectrumSettings::default(),
            sweep: SweepSettings::default(),
            density: DensitySettings::default(),
            nnsd: NnsdSettings::default(),
            converge: ConvergeSettings::default(),
            verify: VerifySettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn units(&self) -> UnitSystem {
        self.system.units()
    }

    /// Physical configuration at the run's field and tilt.
    pub fn system_config(&self, b: f64, alpha_deg: f64) -> Result<SystemConfig> {
        let cfg = self
            .system
            .preset()?
            .config(self.units().field_to_au(b), alpha_deg.to_radians())?;
        Ok(cfg)
    }

    /// Rejects inconsistent settings before any computation.
    pub fn validate(&self) -> Result<()> {
        self.system_config(self.b, self.alpha_deg)?;
        if !(0.0..=90.0).contains(&self.alpha_deg) {
            bail!("alpha_deg must lie in [0, 90] (got {})", self.alpha_deg);
        }
        if self.grid.m > 256 {
            bail!("angular order M = {} is beyond the supported 256", self.grid.m);
        }
        if self.grid.n < magneto2d::radial::MIN_NODES {
            bail!(
                "radial nodes N = {} below the minimum {}",
                self.grid.n,
                magneto2d::radial::MIN_NODES
            );
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 || self.solver.block == 0 {
            bail!("solver needs tol > 0, max_iter > 0 and block > 0");
        }
        if let (Some(lo), Some(hi)) = (self.spectrum.lo, self.spectrum.hi) {
            if !(lo < hi) {
                bail!("spectrum window needs lo < hi (got [{lo}, {hi}])");
            }
        }
        if self.spectrum.lo.is_some() != self.spectrum.hi.is_some() {
            bail!("spectrum window needs both lo and hi");
        }
        for &b in &self.sweep.b {
            self.system_config(b, 0.0).with_context(|| format!("sweep field {b}"))?;
        }
        for &a in &self.sweep.alpha_deg {
            if !(0.0..=90.0).contains(&a) {
                bail!("sweep angle must lie in [0, 90] (got {a})");
            }
        }
        if self.density.nx < 2 || self.density.ny < 2 {
            bail!("density resolution must be at least 2x2");
        }
        if self.nnsd.levels < magneto2d::stats::MIN_LEVELS {
            bail!(
                "nnsd needs at least {} levels (got {})",
                magneto2d::stats::MIN_LEVELS,
                self.nnsd.levels
            );
        }
        if !(self.converge.threshold > 0.0) {
            bail!("converge threshold must be positive");
        }
        Ok(())
    }
}
