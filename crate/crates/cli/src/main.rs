use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod config;
mod plot;
mod runlog;
mod stages;

use config::{Overrides, RunConfig};
use stages::{Check, Context, StageError};

/// Fixed-energy scattering and CGO-based reconstruction for 2-D nonlinear Schrodinger operators.
#[derive(Parser, Debug)]
#[command(name = "cgo-scatter", version)]
struct Cli {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Grid points per side (power of two).
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Half width L of the box [-L, L)^2.
    #[arg(long, global = true)]
    half_width: Option<f64>,
    /// Support radius of the potential region.
    #[arg(long, global = true)]
    support_radius: Option<f64>,
    /// disk | gaussian | two-disks | saturating-disk
    #[arg(long, global = true)]
    kind: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    amplitude: Option<f64>,
    #[arg(long, global = true)]
    radius: Option<f64>,
    #[arg(long, global = true)]
    mu: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    /// Use this c_gamma instead of probing.
    #[arg(long, global = true)]
    c_gamma: Option<f64>,
    #[arg(long, global = true)]
    cutoff: Option<f64>,
    #[arg(long, global = true)]
    xi_max: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Refuse |xi| below the cutoff.
    #[arg(long, global = true)]
    strict_cutoff: bool,
    /// Wavenumber for `forward`.
    #[arg(long, global = true)]
    k: Option<f64>,
    /// Incident angle in radians for `forward`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    angle: Option<f64>,
    /// Spectral lattice points per side.
    #[arg(long, global = true)]
    lattice_n: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Stamp log records with wall-clock time.
    #[arg(long, global = true)]
    timestamps: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            half_width: self.half_width,
            support_radius: self.support_radius,
            kind: self.kind.clone(),
            amplitude: self.amplitude,
            radius: self.radius,
            mu: self.mu,
            gamma: self.gamma,
            c_gamma: self.c_gamma,
            cutoff: self.cutoff,
            xi_max: self.xi_max,
            tol: self.tol,
            max_iter: self.max_iter,
            strict_cutoff: self.strict_cutoff,
            k: self.k,
            angle: self.angle,
            lattice_n: self.lattice_n,
            out: self.out.clone(),
            timestamps: self.timestamps,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Lippmann-Schwinger equation and tabulate the scattering amplitude.
    Forward,
    /// Solve for one CGO remainder.
    Cgo {
        /// Spectral parameter as `xi1,xi2`.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "6,0")]
        xi: [f64; 2],
    },
    /// Assemble the scattering transform over the spectral lattice.
    Transform,
    /// Transform, Born reconstruction and regularity report.
    Reconstruct,
    /// Numerical self-checks; exits with 3 when one fails.
    Verify {
        #[arg(value_enum, default_value_t = Which::All)]
        which: Which,
    },
    /// Potential utilities.
    Potential {
        #[command(subcommand)]
        action: PotentialAction,
    },
}

#[derive(Subcommand, Debug)]
enum PotentialAction {
    /// Write h(x, e0(x, xi)) on the grid.
    Dump {
        /// `xi` fixing the weight `e0` as `xi1,xi2`; `0,0` gives `e0 = 1`.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
        xi: [f64; 2],
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Faddeev,
    Dbar,
    GreenIdentity,
    Conditions,
    All,
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b] => Ok([a.parse().map_err(|e| format!("{a}: {e}"))?, b.parse().map_err(|e| format!("{b}: {e}"))?]),
        _ => Err(format!("expected two comma-separated numbers, got {s:?}")),
    }
}

fn run(cli: Cli) -> Result<(), StageError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&cli.flags.overrides());
    let stage = match &cli.command {
        Command::Forward => "forward",
        Command::Cgo { .. } => "cgo",
        Command::Transform => "transform",
        Command::Reconstruct => "reconstruct",
        Command::Verify { .. } => "verify",
        Command::Potential { .. } => "potential",
    };
    let ctx = Context::open(cfg, stage)?;
    let out = match &cli.command {
        Command::Forward => stages::forward(&ctx),
        Command::Cgo { xi } => stages::cgo(&ctx, *xi),
        Command::Transform => stages::transform(&ctx),
        Command::Reconstruct => stages::reconstruct(&ctx),
        Command::Verify { which } => {
            let checks: Vec<Check> = match which {
                Which::Faddeev => vec![Check::Faddeev],
                Which::Dbar => vec![Check::Dbar],
                Which::GreenIdentity => vec![Check::GreenIdentity],
                Which::Conditions => vec![Check::Conditions],
                Which::All => Check::ALL.to_vec(),
            };
            stages::verify(&ctx, &checks)
        }
        Command::Potential { action: PotentialAction::Dump { xi } } => stages::potential_dump(&ctx, *xi),
    };
    let status = match &out {
        Ok(()) => serde_json::json!({ "status": "ok" }),
        Err(e) => serde_json::json!({ "status": "error", "code": e.exit_code(), "message": e.to_string() }),
    };
    ctx.log.record("finish", status);
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
