use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};

mod commands;
mod input;

/// Faber-Schauder coefficients from antiderivative samples.
#[derive(Debug, Parser)]
#[command(name = "schauder", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the coefficients of f from a `t,F` sample file.
    Estimate {
        /// Sample file, or `-` for stdin.
        input: PathBuf,
        /// Expected level n; the file must hold 2^(n+1) + 1 rows.
        #[arg(long)]
        n: Option<u32>,
        /// Assumed value of f(0).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        f0: f64,
        /// Drop the final generation. Repeating the flag has no further effect.
        #[arg(long, action = ArgAction::Count)]
        truncate: u8,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Roughness exponent from samples on the grid of level n + 2.
    Roughness {
        input: PathBuf,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        f0: f64,
    },
    /// Traces of F, F-hat, f and f-hat for several values of f0-hat.
    DemoInstability {
        #[arg(long, default_value_t = 3)]
        n: u32,
        /// Function to sample, e.g. `cos_pi`, `sin:3`, `poly:0,1`, `takagi:1,0.5`.
        #[arg(long, default_value = "cos_pi")]
        spec: String,
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0,4",
            allow_negative_numbers = true
        )]
        f0: Vec<f64>,
        /// Evaluation points per unit interval.
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check the matrix identities and operator norms.
    Verify {
        #[arg(long, default_value_t = 8)]
        n_max: u32,
    },
    /// Compute log10 det Psi_n against the reference table.
    Dettable {
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check the coefficient and functional error bounds for one function.
    Bounds {
        #[arg(long, default_value = "sin", conflicts_with = "input")]
        spec: String,
        /// Use sampled data instead of a closed-form function.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        n: u32,
        /// `1`, `2`, `inf` or `all`.
        #[arg(long, default_value = "all")]
        p: String,
        /// Print every row instead of the summary.
        #[arg(long)]
        full: bool,
    },
    /// Write `t,F` samples of a closed-form function.
    Sample {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        level: u32,
        /// Write t as a decimal instead of `k/2^L`.
        #[arg(long)]
        decimal: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// A command failure together with its exit code.
#[derive(Debug)]
pub struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn verification(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<schauder_core::Error> for Failure {
    fn from(e: schauder_core::Error) -> Self {
        use schauder_core::Error::*;
        match e {
            UndefinedEstimate { .. } | Conditioning { .. } | NoConvergence { .. } => {
                Failure::verification(e.to_string())
            }
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::input(format!("i/o error: {e}"))
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("SCHAUDER_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Failure::input(format!(
            "SCHAUDER_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::input(format!("cannot configure thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Estimate {
            input,
            n,
            f0,
            truncate,
            format,
            output,
        } => commands::estimate(&input, n, f0, truncate > 0, format, output.as_deref()),
        Command::Roughness { input, n, f0 } => commands::roughness(&input, n, f0),
        Command::DemoInstability {
            n,
            spec,
            f0,
            points,
            output,
        } => commands::demo_instability(n, &spec, &f0, points, output.as_deref()),
        Command::Verify { n_max } => commands::verify(n_max),
        Command::Dettable { output } => commands::dettable(output.as_deref()),
        Command::Bounds {
            spec,
            input,
            n,
            p,
            full,
        } => commands::bounds(&spec, input.as_deref(), n, &p, full),
        Command::Sample {
            spec,
            level,
            decimal,
            output,
        } => commands::sample(&spec, level, decimal, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
