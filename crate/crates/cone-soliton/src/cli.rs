//! Command-line front end: argument handling, config-file merging, and
//! orchestration of the expansion, verification, and integration pipelines.
//!
//! Exit codes: 0 on success, 2 on validation failures (bad flags, malformed
//! files, out-of-range parameters), 3 when a computation aborts on a
//! numerical condition (loss of positivity, degenerate solve, blow-up).
//!
//! A config file passed with `--config` holds the same keys as the long
//! flags in JSON form; explicit flags win on conflict. The optional
//! environment variable `CONE_SOLITON_THREADS` reserves a worker-thread
//! count; it is validated when present (the current build evaluates grids
//! on one thread, so any valid value runs identically).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::expand::{
    expand, residual_constraint, residual_evolution, residual_trace, Assembly, AssemblyFlavor,
    ExpansionCoefficients, SolitonMode,
};
use crate::io;
use crate::link::{
    build_catalog, build_grid, parse_catalog, GridSpec, LinkManifold, MAX_CF_DIM,
};
use crate::ode;
use crate::sampling::{random_potential, seeded_rng};
use crate::verify;

/// Environment variable reserving the worker-thread count.
pub const THREADS_ENV: &str = "CONE_SOLITON_THREADS";

#[derive(Parser)]
#[command(
    name = "cone-soliton",
    version,
    about = "Order-by-order asymptotics and radial integration of conical gradient Ricci solitons",
    max_term_width = 100
)]
pub struct Cli {
    /// JSON file with the same keys as the long flags; flags win on conflict.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// List the built-in links and the grid-link file format.
    Catalog,
    /// Solve the expansion order by order and write the coefficient document.
    Expand(ExpandArgs),
    /// Numerical checks of the structural identities.
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Integrate the radial second-order system from series initial data.
    Ode(OdeArgs),
}

#[derive(Subcommand)]
pub enum VerifyCommand {
    /// Check the two weighted divergence identities on a grid link with a
    /// random potential.
    Bianchi(BianchiArgs),
    /// Solve the expansion and report the surviving residual of each
    /// equation, relative to the size of its largest term.
    Residuals(ResidualsArgs),
    /// Sample the constraint residual against radius and fit its decay rate.
    Decay(DecayArgs),
    /// Leading-order structure of the constraint and the auxiliary scalar.
    Diagnostics(DiagnosticsArgs),
}

/// Keys a `--config` file may set. Every field mirrors the long flag of the
/// same name (hyphens become underscores).
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub link: Option<String>,
    pub order: Option<usize>,
    pub mode: Option<String>,
    pub f0: Option<f64>,
    pub seed: Option<u64>,
    pub amplitude: Option<f64>,
    pub rmin: Option<f64>,
    pub rmax: Option<f64>,
    pub samples: Option<usize>,
    pub r0: Option<f64>,
    pub r_end: Option<f64>,
    pub step: Option<f64>,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub state_out: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

pub fn load_config(path: Option<&Path>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ExpandArgs {
    /// Catalog string (see `catalog`) or path to a grid-link JSON file.
    #[arg(long)]
    pub link: Option<String>,
    /// Highest correction order to solve (0..=8).
    #[arg(long)]
    pub order: Option<usize>,
    /// Soliton mode: expander or shrinker.
    #[arg(long)]
    pub mode: Option<String>,
    /// Override the free gauge constant (default −(n−1)).
    #[arg(long)]
    pub f0: Option<f64>,
    /// Output path for the coefficient JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct BianchiArgs {
    /// Catalog string or grid-link JSON path (must be a grid link).
    #[arg(long)]
    pub link: Option<String>,
    /// Seed for the random potential (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Amplitude of the random potential (default 0.1).
    #[arg(long)]
    pub amplitude: Option<f64>,
    /// Output path for the report JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ResidualsArgs {
    #[arg(long)]
    pub link: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub f0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DecayArgs {
    #[arg(long)]
    pub link: Option<String>,
    /// Truncation order for the sampled residual (default 1).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub f0: Option<f64>,
    /// Smallest sampled radius (default 10).
    #[arg(long)]
    pub rmin: Option<f64>,
    /// Largest sampled radius (default 1000, capped at 1e6).
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Number of log-spaced samples (default 20).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Output path for the fit report JSON (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output path for the sample table CSV (stdout when omitted).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct DiagnosticsArgs {
    #[arg(long)]
    pub link: Option<String>,
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub f0: Option<f64>,
    /// Fit range start for the decay slope (default 10).
    #[arg(long)]
    pub rmin: Option<f64>,
    /// Fit range end for the decay slope (default 1000).
    #[arg(long)]
    pub rmax: Option<f64>,
    /// Samples for the decay slope fit (default 20).
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct OdeArgs {
    #[arg(long)]
    pub link: Option<String>,
    /// Truncation order of the series supplying initial data and the
    /// deviation reference.
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub f0: Option<f64>,
    /// Starting radius (series initial data); exclusive with --resume.
    #[arg(long)]
    pub r0: Option<f64>,
    /// Final radius (decreasing r is the default orientation; increasing
    /// works too and is the stable direction for the expanding mode).
    #[arg(long)]
    pub r_end: Option<f64>,
    /// Step size (default 0.01).
    #[arg(long)]
    pub step: Option<f64>,
    /// Trajectory CSV path (stdout when omitted).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the final state as a resumable snapshot.
    #[arg(long)]
    pub state_out: Option<PathBuf>,
    /// Resume from a snapshot written by --state-out instead of --link/--r0.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

/// Validate the worker-thread reservation if present.
pub fn worker_threads() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(raw) => {
            let n: usize = raw.parse().map_err(|_| Error::Invalid {
                context: "environment",
                message: format!("{THREADS_ENV} must be an integer, got {raw:?}"),
            })?;
            if !(1..=256).contains(&n) {
                return Err(Error::Invalid {
                    context: "environment",
                    message: format!("{THREADS_ENV} must be in 1..=256, got {n}"),
                });
            }
            Ok(Some(n))
        }
    }
}

/// Build a link from a catalog string or, when the argument names a file
/// (contains a path separator or ends in `.json`), from a grid-link JSON
/// document.
pub fn resolve_link(spec: &str) -> Result<LinkManifold> {
    let looks_like_path =
        spec.ends_with(".json") || spec.contains('/') || spec.contains(std::path::MAIN_SEPARATOR);
    if looks_like_path {
        let text = std::fs::read_to_string(spec)?;
        let grid_spec: GridSpec = serde_json::from_str(&text)?;
        build_grid(&grid_spec)
    } else {
        parse_catalog(spec)?;
        build_catalog(spec)
    }
}

fn require<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Invalid {
        context: "arguments",
        message: format!("missing required value for {flag} (flag or config key)"),
    })
}

fn parse_mode(mode: Option<String>) -> Result<SolitonMode> {
    match mode {
        None => Ok(SolitonMode::Expander),
        Some(s) => SolitonMode::parse(&s),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn solve(
    link_spec: Option<String>,
    order: Option<usize>,
    mode: Option<String>,
    f0: Option<f64>,
    default_order: Option<usize>,
) -> Result<ExpansionCoefficients> {
    let link = resolve_link(&require(link_spec, "--link")?)?;
    let order = match default_order {
        Some(d) => order.unwrap_or(d),
        None => require(order, "--order")?,
    };
    expand(&link, order, parse_mode(mode)?, f0)
}

fn run_catalog() -> Result<()> {
    println!("built-in links:");
    println!("  sphere(n[, a])            round n-sphere of radius a (default 1), n <= {MAX_CF_DIM}");
    println!("  torus(n)                  flat n-torus, n <= 3 (spectral grid: 32 per axis, 16 in 3-d)");
    println!("  sphere_product(p,a; q,b)  product of round spheres, total dimension <= {MAX_CF_DIM}");
    println!();
    println!("grid links come from JSON files:");
    println!("  {{\"dim\": 2, \"grid\": [32, 32],");
    println!("   \"metric\": [[\"1 + 0.1*sin(x1+x2)\", \"0\"], [\"0\", \"1\"]]}}");
    println!("metric entries are expressions in x1..xn (sin, cos, exp, pi, ^ with");
    println!("integer exponents); only the upper triangle is read.");
    Ok(())
}

fn run_expand(a: ExpandArgs) -> Result<()> {
    let coeffs = solve(a.link, a.order, a.mode, a.f0, None)?;
    emit(a.out.as_deref(), &io::coefficients_to_json(&coeffs)?)
}

fn run_bianchi(a: BianchiArgs) -> Result<()> {
    let link = resolve_link(&require(a.link, "--link")?)?;
    if link.core().grid().is_none() {
        return Err(Error::Invalid {
            context: "verify bianchi",
            message: "this check needs a grid link (a random potential is sampled on the grid)"
                .to_string(),
        });
    }
    let mut rng = seeded_rng(a.seed.unwrap_or(0));
    let f = random_potential(&mut rng, &link, a.amplitude.unwrap_or(0.1))?;
    let (first, second) = verify::bianchi_residuals(&link, &f)?;
    let doc = io::BianchiDoc {
        residual_first: first.sup_norm(),
        residual_second: second.sup_norm(),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

fn max_rel_coefficient(assembly: &Assembly) -> f64 {
    let scale = assembly.scale.max(f64::MIN_POSITIVE);
    assembly
        .series
        .iter()
        .map(|(_, c)| c.sup_norm() / scale)
        .fold(0.0, f64::max)
}

fn run_residuals(a: ResidualsArgs) -> Result<()> {
    let coeffs = solve(a.link, a.order, a.mode, a.f0, None)?;
    let doc = io::ResidualsDoc {
        evolution_rel_sup: max_rel_coefficient(&residual_evolution(
            &coeffs,
            AssemblyFlavor::Tracked,
        )?),
        trace_rel_sup: max_rel_coefficient(&residual_trace(&coeffs, AssemblyFlavor::Tracked)?),
        constraint_rel_sup: max_rel_coefficient(&residual_constraint(
            &coeffs,
            AssemblyFlavor::Tracked,
        )?),
    };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    emit(a.out.as_deref(), &text)
}

fn run_decay(a: DecayArgs) -> Result<()> {
    let coeffs = solve(a.link, a.order, a.mode, a.f0, Some(1))?;
    let rmin = a.rmin.unwrap_or(10.0);
    let rmax = a.rmax.unwrap_or(1000.0);
    let samples = a.samples.unwrap_or(20);
    let rows = verify::decay_samples(&coeffs, rmin, rmax, samples)?;
    emit(a.csv.as_deref(), &io::decay_csv(&rows))?;
    let fit = verify::constraint_decay_slope(&coeffs, rmin, rmax, samples)?;
    emit(a.out.as_deref(), &io::decay_fit_to_json(&fit)?)
}

fn run_diagnostics(a: DiagnosticsArgs) -> Result<()> {
    let coeffs = solve(a.link, a.order, a.mode, a.f0, None)?;
    let fit_range = Some((
        a.rmin.unwrap_or(10.0),
        a.rmax.unwrap_or(1000.0),
        a.samples.unwrap_or(20),
    ));
    let report = verify::diagnostics_from_expansion(&coeffs, fit_range)?;
    emit(a.out.as_deref(), &io::diagnostics_to_json(&report)?)
}

fn run_ode(a: OdeArgs) -> Result<()> {
    let r_end = require(a.r_end, "--r-end")?;
    let step = a.step.unwrap_or(0.01);
    let (link, coeffs, initial) = match a.resume {
        Some(path) => {
            if a.link.is_some() || a.r0.is_some() {
                return Err(Error::Invalid {
                    context: "arguments",
                    message: "--resume already carries the link and radius; drop --link/--r0"
                        .to_string(),
                });
            }
            let text = std::fs::read_to_string(&path)?;
            let (link, state, mode, f0) = io::state_from_json(&text)?;
            let order = require(a.order, "--order")?;
            let coeffs = expand(&link, order, mode, Some(f0))?;
            (link, coeffs, state)
        }
        None => {
            let coeffs = solve(a.link, a.order, a.mode, a.f0, None)?;
            let r0 = require(a.r0, "--r0")?;
            let initial = ode::init_from_series(&coeffs, r0)?;
            (coeffs.link().clone(), coeffs, initial)
        }
    };
    let (final_state, monitor) = ode::integrate(&link, &initial, r_end, step, &coeffs)?;
    emit(a.csv.as_deref(), &io::trajectory_csv(&monitor.samples))?;
    if let Some(path) = a.state_out {
        let snapshot =
            io::state_to_json(&link, &final_state, coeffs.mode, coeffs.f0_constant)?;
        std::fs::write(path, snapshot)?;
    }
    Ok(())
}

fn merge_expand(mut a: ExpandArgs, c: &FileConfig) -> ExpandArgs {
    a.link = a.link.or_else(|| c.link.clone());
    a.order = a.order.or(c.order);
    a.mode = a.mode.or_else(|| c.mode.clone());
    a.f0 = a.f0.or(c.f0);
    a.out = a.out.or_else(|| c.out.clone());
    a
}

fn merge_bianchi(mut a: BianchiArgs, c: &FileConfig) -> BianchiArgs {
    a.link = a.link.or_else(|| c.link.clone());
    a.seed = a.seed.or(c.seed);
    a.amplitude = a.amplitude.or(c.amplitude);
    a.out = a.out.or_else(|| c.out.clone());
    a
}

fn merge_residuals(mut a: ResidualsArgs, c: &FileConfig) -> ResidualsArgs {
    a.link = a.link.or_else(|| c.link.clone());
    a.order = a.order.or(c.order);
    a.mode = a.mode.or_else(|| c.mode.clone());
    a.f0 = a.f0.or(c.f0);
    a.out = a.out.or_else(|| c.out.clone());
    a
}

fn merge_decay(mut a: DecayArgs, c: &FileConfig) -> DecayArgs {
    a.link = a.link.or_else(|| c.link.clone());
    a.order = a.order.or(c.order);
    a.mode = a.mode.or_else(|| c.mode.clone());
    a.f0 = a.f0.or(c.f0);
    a.rmin = a.rmin.or(c.rmin);
    a.rmax = a.rmax.or(c.rmax);
    a.samples = a.samples.or(c.samples);
    a.out = a.out.or_else(|| c.out.clone());
    a.csv = a.csv.or_else(|| c.csv.clone());
    a
}

fn merge_diagnostics(mut a: DiagnosticsArgs, c: &FileConfig) -> DiagnosticsArgs {
    a.link = a.link.or_else(|| c.link.clone());
    a.order = a.order.or(c.order);
    a.mode = a.mode.or_else(|| c.mode.clone());
    a.f0 = a.f0.or(c.f0);
    a.rmin = a.rmin.or(c.rmin);
    a.rmax = a.rmax.or(c.rmax);
    a.samples = a.samples.or(c.samples);
    a.out = a.out.or_else(|| c.out.clone());
    a
}

fn merge_ode(mut a: OdeArgs, c: &FileConfig) -> OdeArgs {
    a.link = a.link.or_else(|| c.link.clone());
    a.order = a.order.or(c.order);
    a.mode = a.mode.or_else(|| c.mode.clone());
    a.f0 = a.f0.or(c.f0);
    a.r0 = a.r0.or(c.r0);
    a.r_end = a.r_end.or(c.r_end);
    a.step = a.step.or(c.step);
    a.csv = a.csv.or_else(|| c.csv.clone());
    a.state_out = a.state_out.or_else(|| c.state_out.clone());
    a.resume = a.resume.or_else(|| c.resume.clone());
    a
}

pub fn run(cli: Cli) -> Result<()> {
    worker_threads()?;
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Catalog => run_catalog(),
        Command::Expand(a) => run_expand(merge_expand(a, &cfg)),
        Command::Verify(v) => match v {
            VerifyCommand::Bianchi(a) => run_bianchi(merge_bianchi(a, &cfg)),
            VerifyCommand::Residuals(a) => run_residuals(merge_residuals(a, &cfg)),
            VerifyCommand::Decay(a) => run_decay(merge_decay(a, &cfg)),
            VerifyCommand::Diagnostics(a) => run_diagnostics(merge_diagnostics(a, &cfg)),
        },
        Command::Ode(a) => run_ode(merge_ode(a, &cfg)),
    }
}

/// Parse the process arguments, run, and map errors to exit codes.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                3
            }
        }
    }
}
