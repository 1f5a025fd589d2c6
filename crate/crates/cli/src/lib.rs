//! Command-line front end: argument parsing, dispatch and exit codes.
//!
//! Exit codes: 0 when the command ran and its checks passed, 2 when an
//! analysis ran but a verification failed (or an analysis step could not be
//! carried out), 1 for usage, input and IO errors.

mod commands;
mod output;
mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use limitlyap::system::Window;

pub use output::{AnalysisReport, Provenance};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "limitlyap", version, about = "Lyapunov functions for planar systems with limit cycles")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Analysis window `xmin,xmax,ymin,ymax` (default: from the file, else [-2,2]^2).
    #[arg(long, global = true, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<Window>,
    /// Grid points per axis for sampling and verification.
    #[arg(long, global = true, default_value_t = 101)]
    pub grid: usize,
    /// Tolerance for iterative steps (conformal iteration, trajectory integration).
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Directory for artifacts; nothing is written without it.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Artifact formats.
    #[arg(long, global = true, value_delimiter = ',', default_value = "csv,json")]
    pub format: Vec<Format>,
    /// Upper end of the radius scan.
    #[arg(long, global = true, default_value_t = 10.0)]
    pub rmax: f64,
    /// Nodes of the boundary map (power of two).
    #[arg(long, global = true, default_value_t = 1024)]
    pub n: usize,
    /// Definition file holding `transform_u`/`transform_v`.
    #[arg(long, global = true)]
    pub transform: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Polar form and radial classification.
    Polar { file: PathBuf },
    /// Limit-cycle radii of the radial factor.
    Cycles {
        file: Option<PathBuf>,
        /// Radial factor given directly.
        #[arg(long, allow_hyphen_values = true)]
        u0: Option<String>,
    },
    /// Construct and verify the potential.
    Lyapunov {
        file: PathBuf,
        /// Accept odd powers of r (non-smooth at the origin).
        #[arg(long)]
        allow_non_smooth: bool,
    },
    /// Pointwise decomposition on the grid.
    Decompose {
        file: PathBuf,
        /// Potential to use instead of the constructed one.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
    },
    /// Dissipative power against divergence on the cycle.
    Criteria {
        file: PathBuf,
        /// Points on the cycle.
        #[arg(long, default_value_t = 360)]
        samples: usize,
    },
    /// Boundary correspondence of a star-shaped curve.
    Conformal {
        file: Option<PathBuf>,
        /// Curve radius as a function of theta.
        #[arg(long, allow_hyphen_values = true)]
        rho: Option<String>,
    },
    /// Sampled vector field, optionally drawn with trajectories.
    Portrait { file: PathBuf },
    /// Compare two systems.
    Equiv { first: PathBuf, second: PathBuf },
    /// Full construction, verification and criteria.
    Pipeline {
        file: PathBuf,
        #[arg(long)]
        allow_non_smooth: bool,
    },
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c, d] if Window::new(a, b, c, d).is_valid() => Ok(Window::new(a, b, c, d)),
        _ => Err("expected xmin,xmax,ymin,ymax with xmin < xmax and ymin < ymax".into()),
    }
}

/// Failure classes, each with its exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(anyhow::Error),
    Input {
        path: Option<String>,
        error: limitlyap::Error,
    },
    Analysis(limitlyap::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::Input { .. } => EXIT_USAGE,
            CliError::Analysis(_) => EXIT_FAILED,
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Usage(m) => format!("usage: {m}"),
            CliError::Io(e) => format!("io: {e:#}"),
            CliError::Input { path: Some(p), error } => format!("{p}: {}", error.report()),
            CliError::Input { path: None, error } | CliError::Analysis(error) => error.report(),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("LIMITLYAP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("LIMITLYAP_THREADS must be a count, got `{raw}`")))?;
    // 0 means no worker threads beyond the caller
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    Ok(())
}

/// Parse `args`, run the command, print to stdout/stderr and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = configure_threads().and_then(|_| commands::execute(&cli));
    match result {
        Ok(run) => {
            print!("{}", run.text);
            if run.passed {
                EXIT_OK
            } else {
                EXIT_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.exit_code()
        }
    }
}
