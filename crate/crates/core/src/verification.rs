//! Comparison of computed energies with the embedded reference tables.

use serde::{Deserialize, Serialize};

use crate::eigen::SolverOptions;
use crate::error::Result;
use crate::grid::{GridSpec, Problem};
use crate::model::{hartree_to_mev, tesla_to_au, PresetSystem};
use crate::observables::{energy_sweep, lowest_states, SweepOptions, SweepPoint};
use crate::reference::{
    lookup, StateLabel, Table, EXCITON_ANCHOR_MEV, EXCITON_ANCHOR_TESLA, TABLE_ANGLES_DEG, TABLE_FIELDS,
};

/// Relative tolerance for rows with `B ≤ 100`.
pub const TABLE_TOLERANCE: f64 = 1e-4;
/// Absolute tolerance used instead for entries with `|E| < 0.1`.
pub const NEAR_ZERO_TOLERANCE: f64 = 1e-5;
/// Relative tolerance for the high-field rows.
pub const EXTENDED_TOLERANCE: f64 = 1e-3;
pub const EXCITON_TOLERANCE_MEV: f64 = 0.05;
/// Radial nodes of the deliberately coarse negative-control profile.
pub const COARSE_NODES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// rows `B ≤ 10`
    #[default]
    Default,
    /// every row, high fields at the looser tolerance
    Extended,
    /// default rows on a coarse radial grid; expected to fail
    Coarse,
}

impl std::str::FromStr for Profile {
    type Err = crate::error::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Profile::Default),
            "extended" => Ok(Profile::Extended),
            "coarse" => Ok(Profile::Coarse),
            _ => Err(crate::error::Error::Config(format!(
                "unknown profile {s:?} (expected default, extended or coarse)"
            ))),
        }
    }
}

impl Profile {
    pub fn fields(self) -> Vec<f64> {
        match self {
            Profile::Extended => TABLE_FIELDS.to_vec(),
            _ => TABLE_FIELDS.iter().copied().filter(|&b| b <= 10.0).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    /// `E1`, `E2`, `E3` or `exciton`
    pub table: String,
    pub state: StateLabel,
    pub b: f64,
    pub alpha_deg: f64,
    pub reference: f64,
    pub computed: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    /// relative, or absolute when `absolute` is set
    pub tolerance: f64,
    pub absolute: bool,
    pub pass: bool,
    pub error: Option<String>,
}

impl CheckEntry {
    fn new(
        table: &str,
        state: StateLabel,
        b: f64,
        alpha_deg: f64,
        reference: f64,
        tolerance: f64,
        absolute: bool,
    ) -> Self {
        Self {
            table: table.into(),
            state,
            b,
            alpha_deg,
            reference,
            computed: None,
            abs_error: None,
            rel_error: None,
            tolerance,
            absolute,
            pass: false,
            error: None,
        }
    }

    fn set(&mut self, computed: Option<f64>, error: Option<String>) {
        self.computed = computed;
        self.error = error;
        self.pass = false;
        self.abs_error = None;
        self.rel_error = None;
        if let Some(c) = computed {
            let abs = (c - self.reference).abs();
            self.abs_error = Some(abs);
            self.rel_error = Some(abs / self.reference.abs());
            self.pass = if self.absolute {
                abs < self.tolerance
            } else {
                abs / self.reference.abs() < self.tolerance
            };
        }
    }
}

/// Tolerance rule for a table entry.
pub fn entry_tolerance(b: f64, reference: f64) -> (f64, bool) {
    if b > 100.0 {
        (EXTENDED_TOLERANCE, false)
    } else if reference.abs() < 0.1 {
        (NEAR_ZERO_TOLERANCE, true)
    } else {
        (TABLE_TOLERANCE, false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub profile: Profile,
    pub grid: GridSpec,
    pub entries: Vec<CheckEntry>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| !e.pass).count()
    }
}

/// Table entries of `tables` for the profile's rows, computed on `grid`
/// (radial nodes replaced by [`COARSE_NODES`] for the coarse profile).
pub fn verify_tables(
    profile: Profile,
    tables: &[Table],
    grid: &GridSpec,
    solver: &SolverOptions,
) -> Result<VerificationReport> {
    let mut grid = *grid;
    if profile == Profile::Coarse {
        grid.n = COARSE_NODES;
    }
    let fields = profile.fields();
    let mut entries = Vec::new();
    for (tilted, angles) in [(false, vec![0.0]), (true, TABLE_ANGLES_DEG[1..].to_vec())] {
        let alpha0 = if tilted { angles[0] } else { 0.0 };
        let labels: Vec<StateLabel> = tables.iter().map(|t| t.label(alpha0)).collect();
        let points: Vec<SweepPoint> = fields
            .iter()
            .flat_map(|&b| angles.iter().map(move |&a| SweepPoint { b, alpha_deg: a }))
            .collect();
        let opts = SweepOptions {
            solver: *solver,
            ..SweepOptions::default()
        };
        let table = energy_sweep(&PresetSystem::Hydrogen2D, &labels, &points, &grid, &opts)?;
        for p in &points {
            for (t, &label) in tables.iter().zip(&labels) {
                let reference = lookup(*t, p.b, p.alpha_deg).expect("table point");
                let (tol, abs) = entry_tolerance(p.b, reference);
                let mut e = CheckEntry::new(t.name(), label, p.b, p.alpha_deg, reference, tol, abs);
                let row = table.get(label, p.b, p.alpha_deg).expect("sweep row");
                e.set(row.energy, row.error.clone());
                entries.push(e);
            }
        }
    }
    entries.sort_by(|a, b| {
        a.table
            .cmp(&b.table)
            .then(a.b.total_cmp(&b.b))
            .then(a.alpha_deg.total_cmp(&b.alpha_deg))
    });
    Ok(VerificationReport { profile, grid, entries })
}

/// Exciton ground state at the anchor field, in meV.
pub fn exciton_anchor(grid: &GridSpec, solver: &SolverOptions) -> Result<CheckEntry> {
    let cfg = PresetSystem::ExcitonGaAs.config(tesla_to_au(EXCITON_ANCHOR_TESLA), 0.0)?;
    let mut e = CheckEntry::new(
        "exciton",
        StateLabel::Energy(0),
        EXCITON_ANCHOR_TESLA,
        0.0,
        EXCITON_ANCHOR_MEV,
        EXCITON_TOLERANCE_MEV,
        true,
    );
    let solved = Problem::new(cfg, grid).and_then(|p| lowest_states(&p, 1, solver));
    match solved {
        Ok(s) if s[0].converged => e.set(Some(hartree_to_mev(s[0].energy)), None),
        Ok(s) => e.set(None, Some(format!("not converged (residual {:.3e})", s[0].residual))),
        Err(err) => e.set(None, Some(err.to_string())),
    }
    Ok(e)
}

/// All three reference tables for the profile plus the exciton anchor.
pub fn verify(profile: Profile, grid: &GridSpec, solver: &SolverOptions) -> Result<VerificationReport> {
    let mut r = verify_tables(profile, &[Table::E1, Table::E2, Table::E3], grid, solver)?;
    let mut anchor_grid = *grid;
    anchor_grid.n = r.grid.n;
    r.entries.push(exciton_anchor(&anchor_grid, solver)?);
    Ok(r)
}
