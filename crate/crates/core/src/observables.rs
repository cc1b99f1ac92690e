//! Labelled states, wavefunctions, densities and energy tables.
//!
//! Grid vectors are radial-major: entry `k * (2M+1) + j` holds `ψ_j(ρ_k)`.
//! The wavefunction is
//!
//! `Ψ(ρ, φ) = ρ^{-1/2} Σ_m ξ_m(φ) Σ_j ξ⁻¹_{mj} ψ_j(ρ)`
//!
//! with `ψ_j/√ρ` interpolated cubically between radial nodes. States are
//! normalized so that `∫|Ψ|² ρ dρ dφ = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angular::AngularScheme;
use crate::decoupled::axial_channel;
use crate::eigen::{eigen_residual, ground_state_bound, spectrum_scan, ScanRequest, SolverOptions};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Problem};
use crate::linalg::{dot, C64, ZERO};
use crate::model::{au_to_tesla, hartree_to_mev, tesla_to_au, PresetSystem};
use crate::par::{self, Execution};
use crate::radial::RadialScheme;
use crate::reference::StateLabel;

/// Fraction of the norm the automatic density extents must enclose.
pub const EXTENT_NORM_FRACTION: f64 = 0.9999;
pub const DEFAULT_DENSITY_RESOLUTION: usize = 512;

/// A solved, normalized state.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub label: StateLabel,
    pub energy: f64,
    pub imag: f64,
    pub residual: f64,
    pub converged: bool,
    /// grid values `ψ_j(ρ_k)`, radial-major, unit physical norm
    pub psi: Vec<C64>,
}

/// `∫|Ψ|² ρ dρ dφ` for grid values `psi`.
pub fn physical_norm_sqr(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme) -> f64 {
    let b = ang.size();
    let dphi = 2.0 * PI / b as f64;
    rad.quadrature_weights()
        .iter()
        .enumerate()
        .map(|(k, q)| q * psi[k * b..(k + 1) * b].iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum::<f64>()
        * dphi
}

fn normalize(psi: &mut [C64], ang: &AngularScheme, rad: &RadialScheme) {
    let n = physical_norm_sqr(psi, ang, rad).sqrt();
    if n > 0.0 {
        psi.iter_mut().for_each(|z| *z /= n);
    }
}

fn check_label(problem: &Problem, label: StateLabel) -> Result<()> {
    if let StateLabel::Axial { m, .. } = label {
        if problem.cfg.alpha != 0.0 {
            return Err(Error::Config(format!(
                "state {label} needs an untilted field (alpha = {})",
                problem.cfg.alpha
            )));
        }
        if m.unsigned_abs() as usize > problem.grid.m {
            return Err(Error::Config(format!(
                "state {label} lies outside the angular basis |m| <= {}",
                problem.grid.m
            )));
        }
    }
    Ok(())
}

/// Lowest `count` levels of the problem with one vector per level (degenerate
/// levels repeated), physically normalized.
pub fn lowest_states(problem: &Problem, count: usize, opts: &SolverOptions) -> Result<Vec<State>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let h = &problem.hamiltonian;
    let lo = ground_state_bound(&problem.cfg) * (1.0 + 1e-6) - 1e-12;
    let hi = lo.abs().max(1.0) + h.norm_estimate();
    let s = spectrum_scan(h, ScanRequest::lowest(lo, hi, count), opts)?;
    let mut out = Vec::with_capacity(count);
    for level in &s.levels {
        for v in &level.vectors {
            let mut psi = v.clone();
            normalize(&mut psi, &problem.angular, &problem.radial);
            out.push(State {
                label: StateLabel::Energy(out.len()),
                energy: level.energy,
                imag: level.imag,
                residual: level.residual,
                converged: level.converged,
                psi,
            });
        }
    }
    out.truncate(count);
    if out.len() < count {
        return Err(Error::NoConvergence(format!(
            "found {} of the lowest {count} levels",
            out.len()
        )));
    }
    Ok(out)
}

/// Level `radial` of angular momentum `m`, embedded in the full grid.
fn axial_state(problem: &Problem, m: i64, radial: usize, opts: &SolverOptions) -> Result<State> {
    let ch = axial_channel(&problem.cfg, m, &problem.radial)?;
    let lo = ground_state_bound(&problem.cfg) * (1.0 + 1e-6) - 1e-12;
    let hi = lo.abs().max(1.0) + ch.norm_estimate();
    let s = spectrum_scan(&ch, ScanRequest::lowest(lo, hi, radial + 1), opts)?;
    let (level, k) = s
        .levels
        .iter()
        .flat_map(|l| (0..l.vectors.len()).map(move |k| (l, k)))
        .nth(radial)
        .ok_or_else(|| Error::NoConvergence(format!("channel m = {m} has fewer than {} levels", radial + 1)))?;
    let u = &level.vectors[k];
    let b = problem.angular.size();
    let col = (m + problem.grid.m as i64) as usize;
    let xi = problem.angular.xi();
    let mut psi = vec![ZERO; u.len() * b];
    for (kk, uk) in u.iter().enumerate() {
        for j in 0..b {
            psi[kk * b + j] = uk * xi[(j, col)];
        }
    }
    normalize(&mut psi, &problem.angular, &problem.radial);
    let residual = eigen_residual(&problem.hamiltonian, &psi, level.energy);
    Ok(State {
        label: StateLabel::Axial { m, radial },
        energy: level.energy,
        imag: level.imag,
        residual,
        converged: level.converged,
        psi,
    })
}

/// Solves each requested state. Energy-ordered labels share one scan.
pub fn solve_states(problem: &Problem, labels: &[StateLabel], opts: &SolverOptions) -> Result<Vec<State>> {
    for &l in labels {
        check_label(problem, l)?;
    }
    let need = labels
        .iter()
        .filter_map(|l| match l {
            StateLabel::Energy(k) => Some(k + 1),
            StateLabel::Axial { .. } => None,
        })
        .max()
        .unwrap_or(0);
    let lowest = lowest_states(problem, need, opts)?;
    labels
        .iter()
        .map(|&l| match l {
            StateLabel::Energy(k) => Ok(lowest[k].clone()),
            StateLabel::Axial { m, radial } => axial_state(problem, m, radial, opts),
        })
        .collect()
}

pub fn solve_state(problem: &Problem, label: StateLabel, opts: &SolverOptions) -> Result<State> {
    Ok(solve_states(problem, &[label], opts)?.remove(0))
}

/// Fourier coefficients `c_{k,m} = Σ_j ξ⁻¹_{mj} ψ_j(ρ_k)` per radial node.
fn angular_coefficients(psi: &[C64], ang: &AngularScheme) -> Vec<C64> {
    let b = ang.size();
    let inv = ang.xi_inv();
    let mut c = vec![ZERO; psi.len()];
    for (k, chunk) in psi.chunks(b).enumerate() {
        for mi in 0..b {
            c[k * b + mi] = inv.row(mi).iter().zip(chunk).map(|(a, v)| a * v).sum();
        }
    }
    c
}

fn basis_row(order: usize, phi: f64) -> Vec<C64> {
    let m = order as i64;
    (-m..=m).map(|mm| AngularScheme::basis_function(mm, phi)).collect()
}

fn evaluate(coeffs: &[C64], b: usize, rad: &RadialScheme, basis: &[C64], rho: f64) -> C64 {
    match rad.interpolation_weights(rho) {
        None => ZERO,
        Some(w) => w
            .iter()
            .map(|&(k, wk)| {
                let s: C64 = coeffs[k * b..(k + 1) * b].iter().zip(basis).map(|(c, x)| c * x).sum();
                s * wk
            })
            .sum(),
    }
}

/// `Ψ(ρ, φ)` from grid values; zero outside `[0, ρ_N]`.
pub fn reconstruct_wavefunction(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme, rho: f64, phi: f64) -> C64 {
    let b = ang.size();
    debug_assert_eq!(psi.len(), b * rad.dim());
    let Some(w) = rad.interpolation_weights(rho) else {
        return ZERO;
    };
    let lambda = ang.cardinal_weights(phi);
    w.iter()
        .map(|&(k, wk)| {
            let s: C64 = psi[k * b..(k + 1) * b].iter().zip(&lambda).map(|(p, l)| p * l).sum();
            s * wk
        })
        .sum()
}

/// `⟨P⟩` for the inversion `φ → φ + π`, which multiplies `ξ_m` by `(-1)^m`.
/// Commutes with the Hamiltonian at every tilt up to truncation effects.
pub fn parity_expectation(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme) -> f64 {
    let b = ang.size();
    let c = angular_coefficients(psi, ang);
    let q = rad.quadrature_weights();
    let (mut even, mut total) = (0.0, 0.0);
    for (k, qk) in q.iter().enumerate() {
        for (mi, m) in ang.momenta().enumerate() {
            let w = qk * c[k * b + mi].norm_sqr();
            total += w;
            if m % 2 == 0 {
                even += w;
            } else {
                even -= w;
            }
        }
    }
    even / total
}

/// Fraction of the norm beyond `fraction · ρ_N`; large values mean the
/// outer radius cuts into the state.
pub fn outer_norm_fraction(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme, fraction: f64) -> f64 {
    let b = ang.size();
    let q = rad.quadrature_weights();
    let edge = fraction * rad.rho_max();
    let (mut outer, mut total) = (0.0, 0.0);
    for (k, &rho) in rad.interior().iter().enumerate() {
        let w = q[k] * psi[k * b..(k + 1) * b].iter().map(|z| z.norm_sqr()).sum::<f64>();
        total += w;
        if rho > edge {
            outer += w;
        }
    }
    outer / total
}

/// Inversion symmetry class of a level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ParityClass {
    #[default]
    All,
    Even,
    Odd,
}

impl std::str::FromStr for ParityClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(ParityClass::All),
            "even" => Ok(ParityClass::Even),
            "odd" => Ok(ParityClass::Odd),
            _ => Err(Error::Config(format!(
                "parity class must be all, even or odd (got {s:?})"
            ))),
        }
    }
}

/// `|⟨P⟩|` above which a level is assigned to a parity class.
pub const PARITY_THRESHOLD: f64 = 0.9;

/// Lowest levels of one parity class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSample {
    pub class: ParityClass,
    pub levels: Vec<f64>,
    /// levels solved in total
    pub solved: usize,
    /// levels whose parity fell below the threshold
    pub ambiguous: usize,
    pub all_converged: bool,
}

/// Lowest `count` levels in `class`. For a definite class the problem is
/// first made exactly inversion symmetric (see [`Problem::parity_symmetrized`]);
/// members are then picked by `|⟨P⟩| > PARITY_THRESHOLD` and the solve is
/// widened once if too few are found.
pub fn class_levels(problem: &Problem, class: ParityClass, count: usize, opts: &SolverOptions) -> Result<LevelSample> {
    let symmetric;
    let (problem, mut total) = match class {
        ParityClass::All => (problem, count),
        _ => {
            symmetric = problem.parity_symmetrized()?;
            (&symmetric, 2 * count + 16)
        }
    };
    for attempt in 0..2 {
        let states = lowest_states(problem, total, opts)?;
        let mut levels = Vec::new();
        let mut ambiguous = 0;
        for s in &states {
            let keep = match class {
                ParityClass::All => true,
                _ => {
                    let p = parity_expectation(&s.psi, &problem.angular, &problem.radial);
                    if p.abs() <= PARITY_THRESHOLD {
                        ambiguous += 1;
                    }
                    (class == ParityClass::Even && p > PARITY_THRESHOLD)
                        || (class == ParityClass::Odd && p < -PARITY_THRESHOLD)
                }
            };
            if keep {
                levels.push(s.energy);
            }
        }
        if levels.len() >= count || attempt == 1 {
            levels.truncate(count);
            return Ok(LevelSample {
                class,
                levels,
                solved: states.len(),
                ambiguous,
                all_converged: states.iter().all(|s| s.converged),
            });
        }
        total = total * 3 / 2;
    }
    unreachable!()
}

/// Cartesian window `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extents {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extents {
    pub fn symmetric(x: f64, y: f64) -> Self {
        Self {
            x_min: -x,
            x_max: x,
            y_min: -y,
            y_max: y,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite())
            && self.x_min < self.x_max
            && self.y_min < self.y_max;
        if ok {
            Ok(())
        } else {
            Err(Error::Usage(format!("degenerate density extents {self:?}")))
        }
    }
}

/// Grid-node samples of the density: position and quadrature mass.
fn node_masses(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme) -> Vec<(f64, f64, f64)> {
    let b = ang.size();
    let dphi = 2.0 * PI / b as f64;
    let q = rad.quadrature_weights();
    let mut out = Vec::with_capacity(psi.len());
    for (k, &rho) in rad.interior().iter().enumerate() {
        for (j, &phi) in ang.nodes().iter().enumerate() {
            let w = q[k] * dphi * psi[k * b + j].norm_sqr();
            out.push((rho * phi.cos(), rho * phi.sin(), w));
        }
    }
    out
}

/// Symmetric box enclosing `fraction` of the norm, padded by 10% and capped
/// at the outer radius.
pub fn auto_extents(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme, fraction: f64) -> Extents {
    let pts = node_masses(psi, ang, rad);
    let total: f64 = pts.iter().map(|p| p.2).sum();
    let tail = 0.5 * (1.0 - fraction) * total;
    let reach = |coord: fn(&(f64, f64, f64)) -> f64| {
        let mut v: Vec<(f64, f64)> = pts.iter().map(|p| (coord(p).abs(), p.2)).collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut acc = 0.0;
        for (r, w) in v {
            acc += w;
            if acc > tail {
                return r;
            }
        }
        0.0
    };
    let cap = rad.rho_max();
    let x = (1.1 * reach(|p| p.0)).min(cap).max(1e-3 * cap);
    let y = (1.1 * reach(|p| p.1)).min(cap).max(1e-3 * cap);
    Extents::symmetric(x, y)
}

/// `(⟨x²⟩, ⟨y²⟩)` by grid quadrature.
pub fn second_moments(psi: &[C64], ang: &AngularScheme, rad: &RadialScheme) -> (f64, f64) {
    node_masses(psi, ang, rad)
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y, w)| (a + w * x * x, b + w * y * y))
}

/// `|Ψ|²` sampled on a Cartesian lattice, endpoints included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub extents: Extents,
    pub nx: usize,
    pub ny: usize,
    /// row-major in `y`: `values[iy * nx + ix]`
    pub values: Vec<f64>,
    /// trapezoid integral of `values` over the window
    pub norm: f64,
}

impl DensityField {
    pub fn x(&self, ix: usize) -> f64 {
        lerp(self.extents.x_min, self.extents.x_max, ix, self.nx)
    }

    pub fn y(&self, iy: usize) -> f64 {
        lerp(self.extents.y_min, self.extents.y_max, iy, self.ny)
    }

    pub fn value(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.nx + ix]
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Width over height of the region where the density is at least half
    /// its maximum.
    pub fn anisotropy(&self) -> f64 {
        let half = 0.5 * self.max_value();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for iy in 0..self.ny {
            for ix in 0..self.nx {
                if self.value(ix, iy) >= half {
                    let (x, y) = (self.x(ix), self.y(iy));
                    x0 = x0.min(x);
                    x1 = x1.max(x);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
        }
        let dx = (self.extents.x_max - self.extents.x_min) / (self.nx - 1) as f64;
        let dy = (self.extents.y_max - self.extents.y_min) / (self.ny - 1) as f64;
        (x1 - x0 + dx) / (y1 - y0 + dy)
    }
}

fn lerp(a: f64, b: f64, i: usize, n: usize) -> f64 {
    a + (b - a) * i as f64 / (n - 1) as f64
}

/// Density of a normalized state on an `nx × ny` lattice. Extents default to
/// [`auto_extents`] at [`EXTENT_NORM_FRACTION`].
pub fn density_field(
    psi: &[C64],
    ang: &AngularScheme,
    rad: &RadialScheme,
    extents: Option<Extents>,
    nx: usize,
    ny: usize,
    execution: Execution,
) -> Result<DensityField> {
    if nx < 2 || ny < 2 {
        return Err(Error::Usage(format!(
            "density resolution must be at least 2x2 (got {nx}x{ny})"
        )));
    }
    if psi.len() != ang.size() * rad.dim() {
        return Err(Error::Usage(format!(
            "state has {} entries, grid has {}",
            psi.len(),
            ang.size() * rad.dim()
        )));
    }
    let ext = extents.unwrap_or_else(|| auto_extents(psi, ang, rad, EXTENT_NORM_FRACTION));
    ext.validate()?;
    let coeffs = angular_coefficients(psi, ang);
    let b = ang.size();
    let rows: Vec<usize> = (0..ny).collect();
    let values: Vec<f64> = par::map(execution, &rows, |&iy| {
        let y = lerp(ext.y_min, ext.y_max, iy, ny);
        (0..nx)
            .map(|ix| {
                let x = lerp(ext.x_min, ext.x_max, ix, nx);
                let (rho, phi) = (x.hypot(y), y.atan2(x));
                evaluate(&coeffs, b, rad, &basis_row(ang.order(), phi), rho).norm_sqr()
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let dx = (ext.x_max - ext.x_min) / (nx - 1) as f64;
    let dy = (ext.y_max - ext.y_min) / (ny - 1) as f64;
    let edge = |i: usize, n: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
    let mut norm = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            norm += edge(ix, nx) * edge(iy, ny) * values[iy * nx + ix];
        }
    }
    Ok(DensityField {
        extents: ext,
        nx,
        ny,
        values,
        norm: norm * dx * dy,
    })
}

/// Unit convention of a sweep: atomic units throughout, or Tesla in and meV
/// out (exciton work).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    #[default]
    Atomic,
    Laboratory,
}

impl UnitSystem {
    pub fn field_unit(self) -> &'static str {
        match self {
            UnitSystem::Atomic => "au",
            UnitSystem::Laboratory => "T",
        }
    }

    pub fn energy_unit(self) -> &'static str {
        match self {
            UnitSystem::Atomic => "hartree",
            UnitSystem::Laboratory => "meV",
        }
    }

    pub fn field_to_au(self, b: f64) -> f64 {
        match self {
            UnitSystem::Atomic => b,
            UnitSystem::Laboratory => tesla_to_au(b),
        }
    }

    pub fn field_from_au(self, b: f64) -> f64 {
        match self {
            UnitSystem::Atomic => b,
            UnitSystem::Laboratory => au_to_tesla(b),
        }
    }

    pub fn energy_from_au(self, e: f64) -> f64 {
        match self {
            UnitSystem::Atomic => e,
            UnitSystem::Laboratory => hartree_to_mev(e),
        }
    }
}

/// How energy-ordered labels follow a curve across tilt angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tracking {
    /// label `E_k` is the `k`-th level at every point
    #[default]
    EnergyOrder,
    /// label `E_k` follows the level of largest overlap with its value at the
    /// previous angle of the same field
    Overlap,
}

/// One sweep point, field in the table's unit and tilt in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub b: f64,
    pub alpha_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub state: StateLabel,
    pub b: f64,
    pub alpha_deg: f64,
    /// absent when the point failed or did not converge
    pub energy: Option<f64>,
    pub residual: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub units: UnitSystem,
    pub rows: Vec<EnergyRow>,
}

impl EnergyTable {
    pub fn get(&self, state: StateLabel, b: f64, alpha_deg: f64) -> Option<&EnergyRow> {
        self.rows
            .iter()
            .find(|r| r.state == state && r.b == b && r.alpha_deg == alpha_deg)
    }

    pub fn energy(&self, state: StateLabel, b: f64, alpha_deg: f64) -> Option<f64> {
        self.get(state, b, alpha_deg).and_then(|r| r.energy)
    }

    /// Energies of `state` at field `b` in increasing tilt order.
    pub fn curve(&self, state: StateLabel, b: f64) -> Vec<(f64, Option<f64>)> {
        let mut v: Vec<(f64, Option<f64>)> = self
            .rows
            .iter()
            .filter(|r| r.state == state && r.b == b)
            .map(|r| (r.alpha_deg, r.energy))
            .collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.energy.is_none()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub units: UnitSystem,
    pub tracking: Tracking,
    pub solver: SolverOptions,
    /// extra levels solved beyond the highest requested one, as candidates
    /// for overlap tracking
    pub tracking_margin: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            units: UnitSystem::Atomic,
            tracking: Tracking::EnergyOrder,
            solver: SolverOptions::default(),
            tracking_margin: 2,
        }
    }
}

struct PointResult {
    /// energy-ordered pool, `None` if the scan failed
    pool: std::result::Result<Vec<State>, String>,
    axial: Vec<std::result::Result<State, String>>,
}

fn solve_point(
    system: &PresetSystem,
    point: SweepPoint,
    grid: &GridSpec,
    pool_size: usize,
    axial: &[(i64, usize)],
    opts: &SweepOptions,
) -> PointResult {
    let setup = system
        .config(opts.units.field_to_au(point.b), point.alpha_deg.to_radians())
        .and_then(|cfg| Problem::new(cfg, grid));
    let problem = match setup {
        Ok(p) => p,
        Err(e) => {
            let msg = e.to_string();
            return PointResult {
                pool: Err(msg.clone()),
                axial: axial.iter().map(|_| Err(msg.clone())).collect(),
            };
        }
    };
    let pool = lowest_states(&problem, pool_size, &opts.solver).map_err(|e| e.to_string());
    let axial = axial
        .iter()
        .map(|&(m, radial)| {
            let label = StateLabel::Axial { m, radial };
            check_label(&problem, label)
                .and_then(|_| axial_state(&problem, m, radial, &opts.solver))
                .map_err(|e| e.to_string())
        })
        .collect();
    PointResult { pool, axial }
}

/// Assigns pool indices to the requested energy labels by overlap with the
/// previous point's assignment. Greedy on descending overlap.
fn track(prev: &[&State], pool: &[State]) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (a, p) in prev.iter().enumerate() {
        for (c, s) in pool.iter().enumerate() {
            pairs.push((dot(&p.psi, &s.psi).norm(), a, c));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut assign = vec![usize::MAX; prev.len()];
    let mut taken = vec![false; pool.len()];
    for (_, a, c) in pairs {
        if assign[a] == usize::MAX && !taken[c] {
            assign[a] = c;
            taken[c] = true;
        }
    }
    assign
}

/// Energies of the requested states over a list of `(B, α)` points.
/// Per-point failures become rows without an energy and with an error text.
pub fn energy_sweep(
    system: &PresetSystem,
    states: &[StateLabel],
    points: &[SweepPoint],
    grid: &GridSpec,
    opts: &SweepOptions,
) -> Result<EnergyTable> {
    if states.is_empty() || points.is_empty() {
        return Err(Error::Usage("a sweep needs at least one state and one point".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if points[..i].contains(p) {
            return Err(Error::Usage(format!("duplicate sweep point {p:?}")));
        }
    }
    for (i, s) in states.iter().enumerate() {
        if states[..i].contains(s) {
            return Err(Error::Usage(format!("duplicate state {s}")));
        }
    }
    let energy_labels: Vec<usize> = states
        .iter()
        .filter_map(|s| match s {
            StateLabel::Energy(k) => Some(*k),
            _ => None,
        })
        .collect();
    let axial: Vec<(i64, usize)> = states
        .iter()
        .filter_map(|s| match *s {
            StateLabel::Axial { m, radial } => Some((m, radial)),
            _ => None,
        })
        .collect();
    let margin = if opts.tracking == Tracking::Overlap {
        opts.tracking_margin
    } else {
        0
    };
    let pool_size = energy_labels.iter().max().map_or(0, |k| k + 1 + margin);

    let results = par::map(opts.solver.execution, points, |&p| {
        solve_point(system, p, grid, pool_size, &axial, opts)
    });

    // pool index used for each energy label at each point
    let mut chosen: Vec<Vec<usize>> = vec![energy_labels.clone(); points.len()];
    if opts.tracking == Tracking::Overlap {
        let mut fields: Vec<f64> = Vec::new();
        for p in points {
            if !fields.contains(&p.b) {
                fields.push(p.b);
            }
        }
        for b in fields {
            let mut idx: Vec<usize> = (0..points.len()).filter(|&i| points[i].b == b).collect();
            idx.sort_by(|&i, &j| points[i].alpha_deg.total_cmp(&points[j].alpha_deg));
            let mut prev: Option<usize> = None;
            for i in idx {
                let Ok(pool) = &results[i].pool else {
                    prev = None;
                    continue;
                };
                if let Some(pi) = prev {
                    let Ok(prev_pool) = &results[pi].pool else {
                        unreachable!()
                    };
                    let prev_states: Vec<&State> = chosen[pi].iter().map(|&c| &prev_pool[c]).collect();
                    chosen[i] = track(&prev_states, pool);
                }
                prev = Some(i);
            }
        }
    }

    let mut rows = Vec::with_capacity(points.len() * states.len());
    for (i, (p, r)) in points.iter().zip(&results).enumerate() {
        let mut ai = 0;
        let mut ei = 0;
        for &label in states {
            let state: std::result::Result<&State, String> = match label {
                StateLabel::Energy(_) => {
                    let c = chosen[i][ei];
                    ei += 1;
                    r.pool.as_ref().map(|pool| &pool[c]).map_err(|e| e.clone())
                }
                StateLabel::Axial { .. } => {
                    ai += 1;
                    r.axial[ai - 1].as_ref().map_err(|e| e.clone())
                }
            };
            rows.push(match state {
                Ok(s) if s.converged => EnergyRow {
                    state: label,
                    b: p.b,
                    alpha_deg: p.alpha_deg,
                    energy: Some(opts.units.energy_from_au(s.energy)),
                    residual: Some(s.residual),
                    error: None,
                },
                Ok(s) => EnergyRow {
                    state: label,
                    b: p.b,
                    alpha_deg: p.alpha_deg,
                    energy: None,
                    residual: Some(s.residual),
                    error: Some(format!("not converged (residual {:.3e})", s.residual)),
                },
                Err(e) => EnergyRow {
                    state: label,
                    b: p.b,
                    alpha_deg: p.alpha_deg,
                    energy: None,
                    residual: None,
                    error: Some(e),
                },
            });
        }
    }
    Ok(EnergyTable {
        units: opts.units,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RhoMax;

    fn small(b: f64, alpha_deg: f64) -> Problem {
        let cfg = PresetSystem::Hydrogen2D.config(b, alpha_deg.to_radians()).unwrap();
        Problem::new(cfg, &GridSpec::new(4, 60, RhoMax::Fixed(20.0))).unwrap()
    }

    #[test]
    fn states_are_normalized_and_ordered() {
        let p = small(0.5, 27.0);
        let s = lowest_states(&p, 4, &SolverOptions::default()).unwrap();
        for w in s.windows(2) {
            assert!(w[0].energy <= w[1].energy);
        }
        for st in &s {
            assert!((physical_norm_sqr(&st.psi, &p.angular, &p.radial) - 1.0).abs() < 1e-12);
            assert!(st.converged);
        }
    }

    #[test]
    fn node_values_are_reproduced() {
        let p = small(0.5, 27.0);
        let s = solve_state(&p, StateLabel::Energy(1), &SolverOptions::default()).unwrap();
        let b = p.angular.size();
        for &(k, j) in &[(3usize, 0usize), (20, 4), (40, 7)] {
            let (rho, phi) = (p.radial.interior()[k], p.angular.nodes()[j]);
            let got = reconstruct_wavefunction(&s.psi, &p.angular, &p.radial, rho, phi);
            let want = s.psi[k * b + j] / rho.sqrt();
            assert!((got - want).norm() < 1e-12 * want.norm().max(1e-3), "{got} {want}");
        }
        assert_eq!(reconstruct_wavefunction(&s.psi, &p.angular, &p.radial, 25.0, 0.0), ZERO);
    }

    #[test]
    fn axial_state_matches_energy_order() {
        let p = small(0.5, 0.0);
        let o = SolverOptions::default();
        let e0 = solve_state(&p, StateLabel::Energy(0), &o).unwrap();
        let a0 = solve_state(&p, StateLabel::Axial { m: 0, radial: 0 }, &o).unwrap();
        assert!((e0.energy - a0.energy).abs() < 1e-9);
        assert!(a0.residual < 1e-8, "{}", a0.residual);
        let bad = solve_state(&small(0.5, 10.0), StateLabel::Axial { m: 0, radial: 0 }, &o);
        assert!(matches!(bad, Err(Error::Config(_))));
        assert!(matches!(
            solve_state(&p, StateLabel::Axial { m: 5, radial: 0 }, &o),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn parity_of_axial_states() {
        let p = small(0.5, 0.0);
        let o = SolverOptions::default();
        let even = solve_state(&p, StateLabel::Axial { m: -2, radial: 0 }, &o).unwrap();
        let odd = solve_state(&p, StateLabel::Axial { m: 1, radial: 0 }, &o).unwrap();
        assert!((parity_expectation(&even.psi, &p.angular, &p.radial) - 1.0).abs() < 1e-12);
        assert!((parity_expectation(&odd.psi, &p.angular, &p.radial) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_rejects_bad_resolution() {
        let p = small(0.5, 0.0);
        let psi = vec![ZERO; p.hamiltonian.dim()];
        let r = density_field(&psi, &p.angular, &p.radial, None, 1, 10, Execution::Sequential);
        assert!(matches!(r, Err(Error::Usage(_))));
        let r = density_field(&psi[1..], &p.angular, &p.radial, None, 10, 10, Execution::Sequential);
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn units_convert_at_the_boundary() {
        let u = UnitSystem::Laboratory;
        assert!((u.field_from_au(u.field_to_au(2.0)) - 2.0).abs() < 1e-12);
        assert_eq!(UnitSystem::Atomic.energy_from_au(0.25), 0.25);
        assert_eq!(u.energy_unit(), "meV");
    }

    #[test]
    fn track_follows_overlap() {
        let mk = |e: f64, v: [f64; 2]| State {
            label: StateLabel::Energy(0),
            energy: e,
            imag: 0.0,
            residual: 0.0,
            converged: true,
            psi: v.iter().map(|&x| C64::new(x, 0.0)).collect(),
        };
        let prev = [mk(0.0, [1.0, 0.0]), mk(1.0, [0.0, 1.0])];
        let pool = [mk(0.0, [0.1, 0.99]), mk(1.0, [0.99, -0.1])];
        let refs: Vec<&State> = prev.iter().collect();
        assert_eq!(track(&refs, &pool), vec![1, 0]);
    }
}
