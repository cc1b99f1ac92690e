//! Subcommand implementations. Each returns the process outcome; hard
//! errors propagate as `anyhow` errors.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Result};
use magneto2d::eigen::{ground_state_bound, spectrum_scan, ScanRequest};
use magneto2d::grid::{GridSpec, Problem, RhoMax};
use magneto2d::observables::{
    class_levels, density_field, outer_norm_fraction, parity_expectation, second_moments, solve_states, EnergyTable,
    SweepOptions, SweepPoint,
};
use magneto2d::reference::StateLabel;
use magneto2d::stats::{default_window, nnsd, NnsdOptions};
use magneto2d::verification::verify;
use serde::Serialize;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{csv_bytes, write_outputs, Sidecar};

/// How a completed run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    NonConvergence,
    VerificationFailed,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NonConvergence => 2,
            Outcome::VerificationFailed => 3,
        }
    }
}

pub struct RunContext<'a> {
    pub config: &'a RunConfig,
    pub output: &'a Path,
    pub timing: bool,
    pub started: Instant,
}

impl RunContext<'_> {
    fn finish(&self, command: &str, csv: &[u8], grid: serde_json::Value, summary: serde_json::Value) -> Result<()> {
        let elapsed = self.started.elapsed().as_secs_f64();
        if self.timing {
            eprintln!("{command}: {elapsed:.2} s");
        }
        let sidecar = Sidecar {
            command,
            config: self.config,
            grid,
            summary,
            timing_seconds: self.timing.then_some(elapsed),
        };
        write_outputs(self.output, csv, &sidecar)
    }

    fn problem(&self, b: f64, alpha_deg: f64, grid: &GridSpec) -> Result<Problem> {
        Ok(Problem::new(self.config.system_config(b, alpha_deg)?, grid)?)
    }
}

fn grid_json(p: &Problem) -> serde_json::Value {
    json!({
        "m": p.grid.m,
        "n": p.grid.n,
        "rho_max": p.grid.rho_max,
        "basis": p.grid.basis,
        "dimension": p.hamiltonian.dim(),
    })
}

pub fn spectrum(ctx: &RunContext) -> Result<Outcome> {
    let c = ctx.config;
    let units = c.units();
    let p = ctx.problem(c.b, c.alpha_deg, &c.grid)?;
    let opts = c.solver.options();
    let to_au = |e: f64| e / units.energy_from_au(1.0);
    let req = match (c.spectrum.lo, c.spectrum.hi, c.spectrum.count) {
        (Some(lo), Some(hi), None) => ScanRequest::window(to_au(lo), to_au(hi)),
        (Some(lo), Some(hi), Some(n)) => ScanRequest::lowest(to_au(lo), to_au(hi), n),
        (None, None, count) => {
            let lo = ground_state_bound(&p.cfg) * (1.0 + 1e-6) - 1e-12;
            let hi = lo.abs().max(1.0) + p.hamiltonian.norm_estimate();
            ScanRequest::lowest(lo, hi, count.unwrap_or(10))
        }
        _ => bail!("spectrum window needs both lo and hi"),
    };
    let s = spectrum_scan(&p.hamiltonian, req, &opts)?;
    #[derive(Serialize)]
    struct Row {
        index: usize,
        energy: f64,
        residual: f64,
        converged: bool,
    }
    let mut rows = Vec::new();
    for l in &s.levels {
        for _ in 0..l.multiplicity {
            rows.push(Row {
                index: rows.len(),
                energy: units.energy_from_au(l.energy),
                residual: l.residual,
                converged: l.converged,
            });
        }
    }
    let unconverged = rows.iter().filter(|r| !r.converged).count();
    let csv = csv_bytes(&["index", "energy", "residual", "converged"], &rows, &[])?;
    let summary = json!({
        "count": rows.len(),
        "distinct": s.levels.len(),
        "unconverged": unconverged,
        "window": [units.energy_from_au(s.window.0), units.energy_from_au(s.window.1)],
        "complete_window": s.complete_window,
        "dedup_tolerance": s.dedup_tol,
        "shifts": s.shifts.len(),
        "max_imag": s.levels.iter().map(|l| l.imag.abs()).fold(0.0, f64::max),
    });
    ctx.finish("spectrum", &csv, grid_json(&p), summary)?;
    Ok(if unconverged > 0 {
        eprintln!("spectrum: {unconverged} level(s) did not converge; see the converged column");
        Outcome::NonConvergence
    } else {
        Outcome::Success
    })
}

fn sweep_points(c: &RunConfig) -> Vec<SweepPoint> {
    let bs = if c.sweep.b.is_empty() {
        vec![c.b]
    } else {
        c.sweep.b.clone()
    };
    let alphas = if c.sweep.alpha_deg.is_empty() {
        vec![c.alpha_deg]
    } else {
        c.sweep.alpha_deg.clone()
    };
    bs.iter()
        .flat_map(|&b| alphas.iter().map(move |&a| SweepPoint { b, alpha_deg: a }))
        .collect()
}

pub fn sweep_csv(t: &EnergyTable) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Row<'a> {
        state: String,
        b: f64,
        b_unit: &'a str,
        alpha_deg: f64,
        energy: Option<f64>,
        energy_unit: &'a str,
        error_flag: String,
    }
    let rows: Vec<Row> = t
        .rows
        .iter()
        .map(|r| Row {
            state: r.state.to_string(),
            b: r.b,
            b_unit: t.units.field_unit(),
            alpha_deg: r.alpha_deg,
            energy: r.energy,
            energy_unit: t.units.energy_unit(),
            error_flag: r.error.clone().unwrap_or_default(),
        })
        .collect();
    csv_bytes(
        &[
            "state",
            "B",
            "B_unit",
            "alpha_deg",
            "energy",
            "energy_unit",
            "error_flag",
        ],
        &rows,
        &[],
    )
}

pub fn sweep(ctx: &RunContext) -> Result<Outcome> {
    let c = ctx.config;
    let points = sweep_points(c);
    let opts = SweepOptions {
        units: c.units(),
        tracking: c.sweep.tracking,
        solver: c.solver.options(),
        ..SweepOptions::default()
    };
    let table = magneto2d::observables::energy_sweep(&c.system.preset()?, &c.sweep.states, &points, &c.grid, &opts)?;
    let csv = sweep_csv(&table)?;
    let mut grids = Vec::new();
    let mut seen: Vec<f64> = Vec::new();
    for p in &points {
        if !seen.contains(&p.b) {
            seen.push(p.b);
            let resolved = c.grid.resolve(&c.system_config(p.b, 0.0)?)?;
            grids.push(json!({ "b": p.b, "grid": resolved }));
        }
    }
    let failures = table.failures();
    let summary = json!({
        "points": points.len(),
        "states": c.sweep.states,
        "rows": table.rows.len(),
        "failures": failures,
        "tracking": c.sweep.tracking,
    });
    ctx.finish("sweep", &csv, json!(grids), summary)?;
    Ok(if failures > 0 {
        eprintln!("sweep: {failures} row(s) flagged; see the error_flag column");
        Outcome::NonConvergence
    } else {
        Outcome::Success
    })
}

pub fn density(ctx: &RunContext) -> Result<Outcome> {
    let c = ctx.config;
    let p = ctx.problem(c.b, c.alpha_deg, &c.grid)?;
    let opts = c.solver.options();
    let state = solve_states(&p, &[c.density.state], &opts)?.remove(0);
    if !state.converged {
        eprintln!(
            "density: state {} did not converge (residual {:.3e}); no density written",
            c.density.state, state.residual
        );
        return Ok(Outcome::NonConvergence);
    }
    let f = density_field(
        &state.psi,
        &p.angular,
        &p.radial,
        c.density.extents,
        c.density.nx,
        c.density.ny,
        opts.execution,
    )?;
    #[derive(Serialize)]
    struct Row {
        x: f64,
        y: f64,
        density: f64,
    }
    let mut rows = Vec::with_capacity(f.nx * f.ny);
    for iy in 0..f.ny {
        for ix in 0..f.nx {
            rows.push(Row {
                x: f.x(ix),
                y: f.y(iy),
                density: f.value(ix, iy),
            });
        }
    }
    let csv = csv_bytes(&["x", "y", "density"], &rows, &[])?;
    let (x2, y2) = second_moments(&state.psi, &p.angular, &p.radial);
    let summary = json!({
        "state": c.density.state,
        "energy": c.units().energy_from_au(state.energy),
        "residual": state.residual,
        "extents": f.extents,
        "nx": f.nx,
        "ny": f.ny,
        "layout": "rows ordered by y, then x",
        "norm": f.norm,
        "anisotropy_half_max": f.anisotropy(),
        "second_moments": { "x2": x2, "y2": y2 },
        "parity": parity_expectation(&state.psi, &p.angular, &p.radial),
        "outer_norm_fraction": outer_norm_fraction(&state.psi, &p.angular, &p.radial, 0.9),
    });
    if (f.norm - 1.0).abs() > 1e-2 {
        eprintln!("density: norm inside the window is {:.6}; widen the extents", f.norm);
    }
    ctx.finish("density", &csv, grid_json(&p), summary)?;
    Ok(Outcome::Success)
}

pub fn nnsd_cmd(ctx: &RunContext) -> Result<Outcome> {
    let c = ctx.config;
    let p = ctx.problem(c.b, c.alpha_deg, &c.grid)?;
    let sample = class_levels(&p, c.nnsd.parity, c.nnsd.levels + 1, &c.solver.options())?;
    let window = default_window(&sample.levels, c.nnsd.levels);
    if window.len() < c.nnsd.levels {
        eprintln!(
            "nnsd: only {} levels in the requested class (asked for {})",
            window.len(),
            c.nnsd.levels
        );
    }
    let h = nnsd(
        &window,
        &NnsdOptions {
            bins: c.nnsd.bins,
            range: c.nnsd.range,
            unfolding: c.nnsd.unfolding,
        },
    )?;
    #[derive(Serialize)]
    struct Row {
        bin_lo: f64,
        bin_hi: f64,
        count: usize,
        freq: f64,
        poisson_ref: f64,
        wigner_ref: f64,
    }
    let rows: Vec<Row> = (0..h.counts.len())
        .map(|i| Row {
            bin_lo: h.edges[i],
            bin_hi: h.edges[i + 1],
            count: h.counts[i],
            freq: h.freq[i],
            poisson_ref: h.poisson_ref[i],
            wigner_ref: h.wigner_ref[i],
        })
        .collect();
    let footer = vec![
        format!("ks_poisson,{}", h.ks_poisson),
        format!("ks_wigner,{}", h.ks_wigner),
    ];
    let csv = csv_bytes(
        &["bin_lo", "bin_hi", "count", "freq", "poisson_ref", "wigner_ref"],
        &rows,
        &footer,
    )?;
    let units = c.units();
    let summary = json!({
        "levels": window.len(),
        "spacings": h.spacing_count(),
        "window": [
            window.first().map(|&e| units.energy_from_au(e)),
            window.last().map(|&e| units.energy_from_au(e)),
        ],
        "mean_spacing": units.energy_from_au(h.series.mean_spacing),
        "parity": sample.class,
        "solved": sample.solved,
        "ambiguous_parity": sample.ambiguous,
        "ks_poisson": h.ks_poisson,
        "ks_wigner": h.ks_wigner,
        "prefers": if h.prefers_wigner() { "wigner" } else { "poisson" },
        "normalization": "frequencies scaled to unit area",
    });
    ctx.finish("nnsd", &csv, grid_json(&p), summary)?;
    Ok(if sample.all_converged {
        Outcome::Success
    } else {
        Outcome::NonConvergence
    })
}

pub fn verify_cmd(ctx: &RunContext) -> Result<Outcome> {
    let c = ctx.config;
    let report = verify(c.verify.profile, &c.grid, &c.solver.options())?;
    #[derive(Serialize)]
    struct Row<'a> {
        table: &'a str,
        state: String,
        b: f64,
        alpha_deg: f64,
        reference: f64,
        computed: Option<f64>,
        abs_error: Option<f64>,
        rel_error: Option<f64>,
        tolerance: f64,
        tolerance_kind: &'a str,
        pass: bool,
        error: &'a str,
    }
    let rows: Vec<Row> = report
        .entries
        .iter()
        .map(|e| Row {
            table: &e.table,
            state: e.state.to_string(),
            b: e.b,
            alpha_deg: e.alpha_deg,
            reference: e.reference,
            computed: e.computed,
            abs_error: e.abs_error,
            rel_error: e.rel_error,
            tolerance: e.tolerance,
            tolerance_kind: if e.absolute { "absolute" } else { "relative" },
            pass: e.pass,
            error: e.error.as_deref().unwrap_or(""),
        })
        .collect();
    for e in &report.entries {
        println!(
            "{} {:<7} {:<6} B={:<7} alpha={:<4} ref={:<16} got={:<20} rel={}",
            if e.pass { "PASS" } else { "FAIL" },
            e.table,
            e.state.to_string(),
            e.b,
            e.alpha_deg,
            e.reference,
            e.computed.map_or("-".into(), |v| format!("{v:.10}")),
            e.rel_error.map_or("-".into(), |v| format!("{v:.2e}")),
        );
    }
    let csv = csv_bytes(
        &[
            "table",
            "state",
            "B",
            "alpha_deg",
            "reference",
            "computed",
            "abs_error",
            "rel_error",
            "tolerance",
            "tolerance_kind",
            "pass",
            "error",
        ],
        &rows,
        &[],
    )?;
    let summary = json!({
        "profile": report.profile,
        "entries": report.entries.len(),
        "failures": report.failures(),
        "passed": report.passed(),
    });
    ctx.finish("verify", &csv, json!(report.grid), summary)?;
    println!(
        "{} of {} entries pass",
        report.entries.len() - report.failures(),
        report.entries.len()
    );
    Ok(if report.passed() {
        Outcome::Success
    } else {
        Outcome::VerificationFailed
    })
}

/// Rung-by-rung energies and the first rung after which every state moved
/// by less than the threshold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergeRow {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub rho_max: f64,
    pub state: String,
    pub energy: Option<f64>,
    pub delta_prev: Option<f64>,
}

pub fn converge(ctx: &RunContext) -> Result<Outcome> {
    let c = ctx.config;
    let ladder = &c.converge.ladder;
    if ladder.len() < 2 {
        bail!("convergence ladder needs at least two rungs");
    }
    let units = c.units();
    let opts = c.solver.options();
    let states: &[StateLabel] = &c.converge.states;
    let mut rows = Vec::new();
    let mut flags = Vec::new();
    let mut per_rung: Vec<Option<Vec<f64>>> = Vec::new();
    let mut edge: Vec<f64> = Vec::new();
    for r in ladder {
        let grid = GridSpec {
            m: r.m,
            n: r.n,
            rho_max: RhoMax::Fixed(r.rho_max),
            basis: c.grid.basis,
        };
        let solved = ctx
            .problem(c.b, c.alpha_deg, &grid)
            .and_then(|p| Ok((solve_states(&p, states, &opts)?, p)));
        match solved {
            Ok((s, p)) => {
                let worst_edge = s
                    .iter()
                    .map(|st| outer_norm_fraction(&st.psi, &p.angular, &p.radial, 0.9))
                    .fold(0.0, f64::max);
                edge.push(worst_edge);
                if s.iter().any(|st| !st.converged) {
                    flags.push(format!(
                        "rung M={} N={} rho_max={}: unconverged state",
                        r.m, r.n, r.rho_max
                    ));
                }
                per_rung.push(Some(s.iter().map(|st| units.energy_from_au(st.energy)).collect()));
            }
            Err(e) => {
                flags.push(format!("rung M={} N={} rho_max={}: {e}", r.m, r.n, r.rho_max));
                edge.push(f64::NAN);
                per_rung.push(None);
            }
        }
    }
    let mut deltas: Vec<Option<f64>> = vec![None];
    for (i, r) in ladder.iter().enumerate() {
        let prev = if i > 0 { per_rung[i - 1].as_ref() } else { None };
        let mut worst: Option<f64> = None;
        for (k, s) in states.iter().enumerate() {
            let e = per_rung[i].as_ref().map(|v| v[k]);
            let d = match (e, prev) {
                (Some(e), Some(p)) => Some(e - p[k]),
                _ => None,
            };
            if let Some(d) = d {
                worst = Some(worst.map_or(d.abs(), |w: f64| w.max(d.abs())));
            }
            rows.push(ConvergeRow {
                m: r.m,
                n: r.n,
                rho_max: r.rho_max,
                state: s.to_string(),
                energy: e,
                delta_prev: d,
            });
        }
        if i > 0 {
            deltas.push(worst);
        }
    }
    for i in 2..deltas.len() {
        if let (Some(a), Some(b)) = (deltas[i - 1], deltas[i]) {
            if b > a && b > c.converge.threshold {
                flags.push(format!(
                    "change grows between rungs {} and {} ({a:.3e} -> {b:.3e})",
                    i - 1,
                    i
                ));
            }
        }
    }
    let edge_limit = 1e-6;
    for (i, &e) in edge.iter().enumerate() {
        if e > edge_limit {
            flags.push(format!(
                "rung {i}: {e:.2e} of the norm lies in the outer 10% of rho_max; the outer radius is too small"
            ));
        }
    }
    let recommended = (1..ladder.len()).find(|&i| {
        deltas[i].is_some_and(|d| d < c.converge.threshold) && edge[i - 1] <= edge_limit && edge[i] <= edge_limit
    });
    let csv = csv_bytes(&["M", "N", "rho_max", "state", "energy", "delta_prev"], &rows, &[])?;
    for f in &flags {
        eprintln!("converge: {f}");
    }
    let summary = json!({
        "threshold": c.converge.threshold,
        "max_delta_per_rung": deltas,
        "outer_norm_fraction": edge,
        "recommended_rung": recommended.map(|i| ladder[i]),
        "flags": flags,
    });
    ctx.finish("converge", &csv, json!(ladder), summary)?;
    Ok(if recommended.is_some() {
        Outcome::Success
    } else {
        eprintln!("converge: no rung stabilized below {:e}", c.converge.threshold);
        Outcome::NonConvergence
    })
}
