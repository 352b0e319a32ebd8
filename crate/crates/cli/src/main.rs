//! `sic`: construct, simulate and certify the qutrit SIC measurement.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 config or input error,
//! 3 solver failure, 4 infeasible data.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::FileConfig;
use crate::error::{CliError, CliResult};
use crate::report::Format;

#[derive(Debug, Parser)]
#[command(name = "sic", version, about = "Qutrit SIC measurement: construction, simulation and certification")]
struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Solver tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for report files; without it the report goes to stdout.
    #[arg(long, global = true, env = "SIC_OUT_DIR")]
    out: Option<PathBuf>,
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Format printed to stdout when `--out` is absent.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print a measurement of the SIC family.
    #[command(subcommand)]
    Povm(PovmCmd),
    /// Emit circuit descriptions or evaluate one from a file.
    #[command(subcommand)]
    Circuit(CircuitCmd),
    /// Export or solve certification SDPs.
    #[command(subcommand)]
    Sdp(SdpCmd),
    /// Run a certification program.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Maximum-likelihood tomography from counts.
    #[command(subcommand)]
    Tomo(TomoCmd),
    /// Play a communication game.
    Game(GameArgs),
    /// Reproduce the critical visibility and success probability table.
    Table1(Table1Args),
    /// Randomness versus visibility curve.
    Fig4(Fig4Args),
    /// Simulate, reconstruct and certify the SIC interferometer end to end.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Subcommand)]
enum PovmCmd {
    /// The nine-outcome SIC measurement, optionally depolarised.
    Sic {
        #[arg(long)]
        visibility: Option<f64>,
    },
    /// The 9x9 Naimark unitary and the measurement it induces.
    Naimark,
    /// Mutually unbiased basis `y` in 1..=4.
    Mub {
        #[arg(long)]
        y: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CircuitKind {
    Sic,
    Mub,
}

#[derive(Debug, Subcommand)]
enum CircuitCmd {
    /// Write a built-in circuit as JSON.
    Emit {
        #[arg(value_enum)]
        kind: CircuitKind,
        /// Basis index for `mub`.
        #[arg(long)]
        y: Option<usize>,
    },
    /// Induced measurement of a circuit file at a uniform visibility.
    Povm {
        #[arg(long)]
        file: PathBuf,
        #[arg(long)]
        visibility: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProgramKind {
    Visibility,
    Discrimination,
}

#[derive(Debug, Subcommand)]
enum SdpCmd {
    /// Write a certification program as an SDP problem file.
    Dump {
        #[arg(value_enum)]
        program: ProgramKind,
        /// Outcome count for `visibility`.
        #[arg(long)]
        n: Option<usize>,
        /// Measurement file for `visibility` (default: SIC).
        #[arg(long)]
        povm: Option<PathBuf>,
        /// Zero-based outcome subset for `discrimination`, e.g. `0,1,2`.
        #[arg(long)]
        subset: Option<String>,
    },
    /// Solve an SDP problem file.
    Solve {
        #[arg(long)]
        file: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum CertifyCmd {
    /// Critical visibility for `n`-outcome simulability.
    Visibility {
        #[arg(long)]
        n: Option<usize>,
        /// Measurement file (default: SIC).
        #[arg(long)]
        povm: Option<PathBuf>,
    },
    /// Best `n`-outcome success probability on the SIC states.
    Discriminate {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Seesaw bound with preparations trusted up to infidelity `eps`.
    DiscriminateDistrust {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        /// Nine comma-separated infidelities (default: the measured values).
        #[arg(long)]
        eps: Option<String>,
    },
    /// Certified randomness from exclusion-state data.
    Randomness {
        /// Depolarised SIC measurement at this visibility, when no data file is given.
        #[arg(long)]
        visibility: Option<f64>,
        #[arg(long)]
        x_star: Option<usize>,
        /// Count CSV (9 settings by 9 outcomes).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Tolerance radius in Poisson standard deviations for count data.
        #[arg(long)]
        sigma: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
enum TomoCmd {
    /// Reconstruct the detector probed with the SIC states.
    Detector(TomoArgs),
    /// Reconstruct a state from the seven-setting measurement data.
    State {
        #[command(flatten)]
        common: TomoArgs,
        /// One-based SIC state used as target and, without data, as the simulated input.
        #[arg(long)]
        target: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct TomoArgs {
    /// Count CSV; without it counts are simulated.
    #[arg(long)]
    counts: Option<PathBuf>,
    /// Simulated visibility.
    #[arg(long)]
    visibility: Option<f64>,
    /// Simulated trials per setting.
    #[arg(long)]
    shots: Option<u64>,
    /// Multinomial resamples for error bars.
    #[arg(long)]
    bootstrap: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GameKind {
    Discrimination,
    Exclusion,
    Mub,
    Matching,
}

#[derive(Debug, Args)]
struct GameArgs {
    #[arg(value_enum)]
    game: GameKind,
    /// Total trials; 0 gives exact probabilities.
    #[arg(long)]
    counts: Option<u64>,
    /// Visibility of the devices (depolarisation for matching).
    #[arg(long)]
    noise: Option<f64>,
    /// Recorded count CSV scored instead of a simulation.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of states for matching.
    #[arg(long)]
    n: Option<usize>,
    /// Tolerance radius in Poisson standard deviations for the exclusion randomness.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct Table1Args {
    /// Table rows among 1, 3, 4.
    #[arg(long)]
    rows: Option<String>,
    /// Outcome counts, e.g. `2-9`.
    #[arg(long)]
    n: Option<String>,
    /// Seesaw restarts for row 4.
    #[arg(long)]
    restarts: Option<usize>,
}

#[derive(Debug, Args)]
struct Fig4Args {
    /// Evenly spaced grid points on [0, 1].
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    x_star: Option<usize>,
}

#[derive(Debug, Args)]
struct PipelineArgs {
    #[arg(long)]
    visibility: Option<f64>,
    /// Trials per probe state.
    #[arg(long)]
    shots: Option<u64>,
    /// Outcome counts for the critical visibility, e.g. `3` or `2-4`.
    #[arg(long)]
    n: Option<String>,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.u64("seed")?).unwrap_or(0);
    let tol = cli.tol.or(file.f64("tol")?).unwrap_or(1e-8);
    if !(tol.is_finite() && tol >= 1e-10) {
        return Err(CliError::Config(format!("tol must be at least 1e-10, got {tol}")));
    }
    if let Some(t) = cli.threads.or(file.usize("threads")?) {
        if t == 0 {
            return Err(CliError::Config("threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let out = cli.out.clone().or(file.path("out")?);
    let ctx = commands::Ctx { file, seed, tol };
    let (command, output) = commands::dispatch(&ctx, cli.command)?;
    let stem = command.replace([' ', '-'], "_");
    let env = report::envelope(&command, seed, output.params, output.result);
    report::emit(&stem, &env, &output.tables, out.as_deref(), cli.format)
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
