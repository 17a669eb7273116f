use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use solhunt::cli::{
    cmd_integrate, cmd_scan, cmd_slice, cmd_verify, linearize_report, parse_factors, parse_range,
    resolve_run, verify_report_text,
};
use solhunt::error::Error;
use solhunt::shooting::ScanGrid;
use solhunt::warped::OracleKind;

/// Numerical lab for cohomogeneity-one shrinking Ricci solitons: trajectory
/// integration, diagnostics, and shooting-method parameter scans.
#[derive(Parser)]
#[command(name = "solhunt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and write its CSV.
    Integrate(IntegrateArgs),
    /// Scan a (hbar, ubar) grid and extract solution clusters.
    Scan(ScanArgs),
    /// Min-SOL profile along the Einstein axis (ubar = 0).
    Slice(SliceArgs),
    /// Check a closed-form solution against the field equations.
    Verify(VerifyArgs),
    /// Linearization data at the warped-product fixed point.
    Linearize(LinearizeArgs),
}

#[derive(Args)]
struct CommonRunArgs {
    /// Catalog preset name (cp2, s5, s2xs3, s11, hp(n), f(n), cap2).
    #[arg(long)]
    preset: Option<String>,
    /// JSON run-config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the preset's soliton constant (must be negative).
    #[arg(long, allow_hyphen_values = true)]
    epsilon: Option<f64>,
    /// RK4 step size.
    #[arg(long)]
    step: Option<f64>,
    /// Time horizon (default: 50/sqrt(-epsilon)).
    #[arg(long)]
    tmax: Option<f64>,
    /// Series handoff time as a multiple of the step.
    #[arg(long)]
    t0_factor: Option<f64>,
}

impl CommonRunArgs {
    fn resolve(&self, record_every: Option<usize>) -> Result<solhunt::cli::RunOptions, Error> {
        resolve_run(
            self.preset.as_deref(),
            self.config.as_deref(),
            self.epsilon,
            self.step,
            self.tmax,
            self.t0_factor,
            record_every,
        )
    }
}

#[derive(Args)]
struct IntegrateArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// Initial base scale at the singular orbit.
    #[arg(long)]
    hbar: f64,
    /// Initial potential value at the singular orbit.
    #[arg(long, allow_hyphen_values = true)]
    ubar: f64,
    /// Keep every k-th sample.
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Manifest path (default: <out>.manifest.json).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// hbar range as lo:hi:step.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    hbar_range: (f64, f64, f64),
    /// ubar range as lo:hi:step.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    ubar_range: (f64, f64, f64),
    /// Cluster threshold on min-SOL.
    #[arg(long, default_value_t = 0.005)]
    threshold: f64,
    /// Prefix for the emitted .scan.csv / .clusters.json / .manifest.json.
    #[arg(long)]
    out_prefix: String,
    /// Also emit an SVG scatter of sub-threshold cells.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SliceArgs {
    #[command(flatten)]
    common: CommonRunArgs,
    /// hbar range as lo:hi:step.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    hbar_range: (f64, f64, f64),
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Golden-section refine each local minimum of the profile.
    #[arg(long)]
    refine: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Closed form to check: gaussian, conical, or cone.
    #[arg(long)]
    oracle: String,
    /// Einstein factors as dim:lambda[,dim:lambda...].
    #[arg(long, default_value = "2:1,2:1")]
    factors: String,
    /// Soliton constant.
    #[arg(long, default_value_t = -8.0, allow_hyphen_values = true)]
    epsilon: f64,
    /// Sampling horizon (defaults to the closed form's natural arc).
    #[arg(long)]
    tmax: Option<f64>,
    /// Number of interior sample times.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args)]
struct LinearizeArgs {
    /// Hypersurface dimension n (>= 2).
    #[arg(long)]
    n: u32,
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Integrate(args) => {
            let run = args.common.resolve(Some(args.record_every))?;
            let traj = cmd_integrate(
                &run,
                args.hbar,
                args.ubar,
                &args.out,
                args.manifest.as_deref(),
            )?;
            println!(
                "integrated {} samples, termination = {}, min_sol = {} at t = {}",
                traj.samples.len(),
                traj.termination.label(),
                traj.min_sol,
                traj.argmin_sol_t
            );
            Ok(0)
        }
        Command::Scan(args) => {
            let run = args.common.resolve(None)?;
            let (h_lo, h_hi, h_step) = args.hbar_range;
            let (u_lo, u_hi, u_step) = args.ubar_range;
            let grid = ScanGrid::new(h_lo, h_hi, h_step, u_lo, u_hi, u_step)?;
            let out = cmd_scan(&run, &grid, args.threshold, &args.out_prefix, args.svg)?;
            println!(
                "scanned {} cells, {} clusters below {}",
                out.result.cells.len(),
                out.clusters.len(),
                args.threshold
            );
            for c in &out.clusters {
                println!(
                    "cluster: centroid = ({}, {}), best = ({}, {}) with min_sol = {}",
                    c.centroid.0, c.centroid.1, c.best_hbar, c.best_ubar, c.best_min_sol
                );
            }
            Ok(0)
        }
        Command::Slice(args) => {
            let run = args.common.resolve(None)?;
            let (h_lo, h_hi, h_step) = args.hbar_range;
            let profile = cmd_slice(&run, h_lo, h_hi, h_step, &args.out, args.refine)?;
            println!("sliced {} points", profile.len());
            Ok(0)
        }
        Command::Verify(args) => {
            let kind = OracleKind::parse(&args.oracle)?;
            let factors = parse_factors(&args.factors)?;
            let report = cmd_verify(kind, &factors, args.epsilon, args.tmax, args.samples)?;
            print!("{}", verify_report_text(&report));
            Ok(if report.passed { 0 } else { 1 })
        }
        Command::Linearize(args) => {
            print!("{}", linearize_report(args.n)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
