//! `magneto2d` command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence,
//! 3 verification failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use magneto2d::grid::RhoMax;
use magneto2d::observables::{Extents, ParityClass, Tracking};
use magneto2d::par::Execution;
use magneto2d::reference::StateLabel;
use magneto2d::stats::Unfolding;
use magneto2d::verification::Profile;

use commands::{Outcome, RunContext};
use config::{RunConfig, Rung, SystemChoice};

#[derive(Parser, Debug)]
#[command(
    name = "magneto2d",
    version,
    about = "2D hydrogen atom and exciton in a tilted magnetic field"
)]
struct Cli {
    /// JSON run configuration; flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// CSV output path; the JSON sidecar goes next to it [default: <command>.csv]
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    /// worker threads [default: number of logical CPUs]
    #[arg(long, global = true, env = "MAGNETO2D_THREADS")]
    threads: Option<usize>,

    /// report wall time on stderr and in the sidecar
    #[arg(long, global = true)]
    timing: bool,

    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// hydrogen or exciton
    #[arg(long, global = true)]
    system: Option<SystemChoice>,
    /// field strength (a.u. for hydrogen, Tesla for the exciton)
    #[arg(long, global = true)]
    b: Option<f64>,
    /// tilt angle in degrees
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// angular order M (2M+1 angular nodes)
    #[arg(long, global = true)]
    m: Option<usize>,
    /// radial node count N
    #[arg(long, global = true)]
    n: Option<usize>,
    /// outer radius in a.u., or "auto"
    #[arg(long, global = true)]
    rho_max: Option<RhoMax>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// run on one thread regardless of --threads
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Levels in an energy window, or the lowest few
    Spectrum {
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Energies of labelled states over a grid of fields and tilts
    Sweep {
        #[arg(long, value_delimiter = ',')]
        b_list: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        alpha_list: Vec<f64>,
        /// labels such as E1 or m0_n1
        #[arg(long, value_delimiter = ',')]
        states: Vec<StateLabel>,
        /// energy-order or overlap
        #[arg(long, value_parser = parse_tracking)]
        tracking: Option<Tracking>,
    },
    /// Probability density of one state on a Cartesian grid
    Density {
        #[arg(long)]
        state: Option<StateLabel>,
        #[arg(long)]
        nx: Option<usize>,
        #[arg(long)]
        ny: Option<usize>,
        /// half-widths X,Y of a symmetric window
        #[arg(long, value_parser = parse_extent)]
        extent: Option<Extents>,
    },
    /// Nearest-neighbour spacing histogram
    Nnsd {
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        range: Option<f64>,
        /// all, even or odd
        #[arg(long)]
        parity: Option<ParityClass>,
        /// normalize each spacing by its 2K neighbours instead of the global mean
        #[arg(long, value_name = "K")]
        local_unfolding: Option<usize>,
    },
    /// Compare with the embedded reference tables
    Verify {
        /// default, extended or coarse
        #[arg(long)]
        profile: Option<Profile>,
    },
    /// Energies over a ladder of grids
    Converge {
        /// rung M,N,rho_max; repeat for each rung
        #[arg(long = "rung")]
        rungs: Vec<Rung>,
        #[arg(long, value_delimiter = ',')]
        states: Vec<StateLabel>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}

fn parse_extent(s: &str) -> Result<Extents, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y] if x > 0.0 && y > 0.0 => Ok(Extents::symmetric(x, y)),
        _ => Err(format!("expected two positive half-widths X,Y, got {s:?}")),
    }
}

fn parse_tracking(s: &str) -> Result<Tracking, String> {
    match s {
        "energy-order" => Ok(Tracking::EnergyOrder),
        "overlap" => Ok(Tracking::Overlap),
        _ => Err(format!("expected energy-order or overlap, got {s:?}")),
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum { .. } => "spectrum",
            Command::Sweep { .. } => "sweep",
            Command::Density { .. } => "density",
            Command::Nnsd { .. } => "nnsd",
            Command::Verify { .. } => "verify",
            Command::Converge { .. } => "converge",
        }
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let a = &cli.common;
    if let Some(s) = a.system {
        c.system = s;
    }
    if let Some(v) = a.b {
        c.b = v;
    }
    if let Some(v) = a.alpha {
        c.alpha_deg = v;
    }
    if let Some(v) = a.m {
        c.grid.m = v;
    }
    if let Some(v) = a.n {
        c.grid.n = v;
    }
    if let Some(v) = a.rho_max {
        c.grid.rho_max = v;
    }
    if let Some(v) = a.tol {
        c.solver.tol = v;
    }
    if let Some(v) = a.seed {
        c.solver.seed = v;
    }
    if a.sequential {
        c.solver.execution = Execution::Sequential;
    }
    match &cli.command {
        Command::Spectrum { lo, hi, count } => {
            if lo.is_some() || hi.is_some() {
                c.spectrum.lo = *lo;
                c.spectrum.hi = *hi;
            }
            if count.is_some() {
                c.spectrum.count = *count;
            }
        }
        Command::Sweep {
            b_list,
            alpha_list,
            states,
            tracking,
        } => {
            if !b_list.is_empty() {
                c.sweep.b = b_list.clone();
            }
            if !alpha_list.is_empty() {
                c.sweep.alpha_deg = alpha_list.clone();
            }
            if !states.is_empty() {
                c.sweep.states = states.clone();
            }
            if let Some(t) = tracking {
                c.sweep.tracking = *t;
            }
        }
        Command::Density { state, nx, ny, extent } => {
            if let Some(s) = state {
                c.density.state = *s;
            }
            if let Some(v) = nx {
                c.density.nx = *v;
            }
            if let Some(v) = ny {
                c.density.ny = *v;
            }
            if extent.is_some() {
                c.density.extents = *extent;
            }
        }
        Command::Nnsd {
            levels,
            bins,
            range,
            parity,
            local_unfolding,
        } => {
            if let Some(v) = levels {
                c.nnsd.levels = *v;
            }
            if let Some(v) = bins {
                c.nnsd.bins = *v;
            }
            if let Some(v) = range {
                c.nnsd.range = *v;
            }
            if let Some(v) = parity {
                c.nnsd.parity = *v;
            }
            if let Some(k) = local_unfolding {
                c.nnsd.unfolding = Unfolding::Local { half_width: *k };
            }
        }
        Command::Verify { profile } => {
            if let Some(p) = profile {
                c.verify.profile = *p;
            }
        }
        Command::Converge {
            rungs,
            states,
            threshold,
        } => {
            if !rungs.is_empty() {
                c.converge.ladder = rungs.clone();
            }
            if !states.is_empty() {
                c.converge.states = states.clone();
            }
            if let Some(t) = threshold {
                c.converge.threshold = *t;
            }
        }
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let config = build_config(cli)?;
    if let Some(n) = cli.threads {
        magneto2d::par::configure_threads(n)?;
    }
    let name = cli.command.name();
    let output = cli
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{name}.csv")));
    let ctx = RunContext {
        config: &config,
        output: &output,
        timing: cli.timing,
        started: Instant::now(),
    };
    match cli.command {
        Command::Spectrum { .. } => commands::spectrum(&ctx),
        Command::Sweep { .. } => commands::sweep(&ctx),
        Command::Density { .. } => commands::density(&ctx),
        Command::Nnsd { .. } => commands::nnsd_cmd(&ctx),
        Command::Verify { .. } => commands::verify_cmd(&ctx),
        Command::Converge { .. } => commands::converge(&ctx),
    }
}

fn error_code(err: &anyhow::Error) -> i32 {
    use magneto2d::error::Error;
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::NoConvergence(_)) | Some(Error::NearSingular { .. }) => 2,
        _ => 1,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let code = match run(&cli) {
        Ok(outcome) => outcome.code(),
        Err(e) => {
            eprintln!("error: {e:#}");
            error_code(&e)
        }
    };
    std::process::exit(code);
}
