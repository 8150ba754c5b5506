//! `wiretap`: batch evaluation of the wiretap correct-decoding exponent.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{FileConfig, FlagOverrides, Settings};

#[derive(Debug, Parser)]
#[command(
    name = "wiretap",
    version,
    about = "Correct-decoding exponent of the wiretap channel"
)]
struct Cli {
    /// Read and write rates and exponents in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with solver and budget overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    obj_tol: Option<f64>,
    #[arg(long, global = true)]
    residual_tol: Option<f64>,
    #[arg(long, global = true)]
    max_iter: Option<usize>,
    /// Points of the multiplier sweep on [-1, 1].
    #[arg(long, global = true)]
    mu_points: Option<usize>,
    /// Tolerance for the ZERO / PARTIAL / FULL classification.
    #[arg(long, global = true)]
    class_tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Both representations of E(R1, R2) at one rate pair.
    Exponent {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
    },
    /// E and its classification over a rate grid.
    Sweep {
        #[arg(long)]
        channel: PathBuf,
        #[command(flatten)]
        plan: SweepArgs,
    },
    /// Full-security intervals of R2 for each R1.
    Region {
        #[arg(long)]
        channel: PathBuf,
        /// Comma-separated R1 values.
        #[arg(long, value_delimiter = ',', required = true)]
        r1: Vec<f64>,
    },
    /// Gaussian channel exponent at one rate pair or over a grid.
    Gaussian {
        /// Power constraint S.
        #[arg(long)]
        s: f64,
        /// Noise variance.
        #[arg(long)]
        sigma2: f64,
        #[arg(long, requires = "r2")]
        r1: Option<f64>,
        #[arg(long, requires = "r1")]
        r2: Option<f64>,
        #[command(flatten)]
        plan: SweepArgs,
        /// Grid points of the correlation line search.
        #[arg(long)]
        rho_points: Option<usize>,
    },
    /// Monte-Carlo estimate of the ensemble-average correct-decoding probability.
    Simulate {
        #[arg(long)]
        channel: PathBuf,
        /// Comma-separated blocklengths.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        enum_budget: Option<u64>,
        /// Output draws per codebook when exact enumeration is over budget.
        #[arg(long)]
        z_samples: Option<usize>,
    },
    /// Validate a channel file and test degradedness of the wiretap channel.
    Check {
        #[arg(long)]
        channel: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

/// Rate grid: R1 uniform on [min, max] with `steps` points; R2 either on its
/// own grid or as fractions `k/(steps-1)` of each R1.
#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub r1_min: Option<f64>,
    #[arg(long)]
    pub r1_max: Option<f64>,
    #[arg(long)]
    pub r1_steps: Option<usize>,
    #[arg(long)]
    pub r2_min: Option<f64>,
    #[arg(long)]
    pub r2_max: Option<f64>,
    #[arg(long)]
    pub r2_steps: Option<usize>,
    /// Use R2 = f·R1 with f on a uniform grid of this many points in [0, 1].
    #[arg(long, conflicts_with_all = ["r2_min", "r2_max", "r2_steps"])]
    pub r2_fraction_steps: Option<usize>,
    /// Comma-separated output columns.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
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

fn run(cli: Cli) -> Result<(), commands::CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path).map_err(commands::CliError::Usage)?,
        None => FileConfig::default(),
    };
    let flags = FlagOverrides {
        obj_tol: cli.obj_tol,
        residual_tol: cli.residual_tol,
        max_iter: cli.max_iter,
        mu_points: cli.mu_points,
        class_tol: cli.class_tol,
        threads: cli.threads,
        bits: cli.bits,
    };
    let mut settings = Settings::merge(&flags, &file);
    if let Some(t) = settings.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| commands::CliError::Usage(format!("thread pool: {e}")))?;
    }
    let stdout = std::io::stdout();
    let out = stdout.lock();
    match cli.command {
        Command::Exponent { channel, r1, r2 } => {
            commands::exponent(&settings, &channel, r1, r2, out)
        }
        Command::Sweep { channel, plan } => commands::sweep(&settings, &channel, &plan, out),
        Command::Region { channel, r1 } => commands::region(&settings, &channel, &r1, out),
        Command::Gaussian {
            s,
            sigma2,
            r1,
            r2,
            plan,
            rho_points,
        } => {
            if let Some(p) = rho_points {
                settings.rho_points = p;
            }
            let single = r1.zip(r2);
            commands::gaussian(&settings, s, sigma2, single, &plan, out)
        }
        Command::Simulate {
            channel,
            n,
            r1,
            r2,
            trials,
            seed,
            enum_budget,
            z_samples,
        } => {
            if let Some(b) = enum_budget {
                settings.enum_budget = b;
            }
            if let Some(z) = z_samples {
                settings.z_samples = z;
            }
            commands::simulate(&settings, &channel, &n, r1, r2, trials, seed, out)
        }
        Command::Check { channel, tol } => commands::check(&settings, &channel, tol, out),
    }
}
