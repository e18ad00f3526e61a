//! Command-line argument handling, shared by the binary and in-process callers.

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

use crate::commands::{exit_code, run, Report, EXIT_INVALID};
use crate::config::RawConfig;

/// Critical conditions for thermal explosion of a reacting gas in a pipe.
///
/// Every option mirrors a key of the `key = value` config file and overrides it.
#[derive(Parser, Debug)]
#[command(name = "thermx", version)]
struct Cli {
    /// One of: steady, lambda-cr, zeta0, sweep, fit, collapse, dimensional.
    command: Option<String>,

    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,

    /// laminar or turbulent.
    #[arg(long, allow_hyphen_values = true)]
    regime: Option<String>,
    /// Reynolds number (turbulent only).
    #[arg(long, allow_hyphen_values = true)]
    re: Option<String>,
    /// Frank-Kamenetskii parameter for `steady`, `zeta0` and `dimensional`.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// First lambda of a log-spaced range (`sweep`, `collapse`).
    #[arg(long, allow_hyphen_values = true)]
    lambda_start: Option<String>,
    /// Last lambda of the range.
    #[arg(long, allow_hyphen_values = true)]
    lambda_stop: Option<String>,
    /// Number of lambda values in the range.
    #[arg(long, allow_hyphen_values = true)]
    lambda_count: Option<String>,
    /// Smallest lambda used by `fit`.
    #[arg(long, allow_hyphen_values = true)]
    lambda_min: Option<String>,
    /// unweighted or bracket.
    #[arg(long, allow_hyphen_values = true)]
    weighting: Option<String>,
    /// Radial nodes (default 256).
    #[arg(long, allow_hyphen_values = true)]
    n_rho: Option<String>,
    /// Axial layers (default 256).
    #[arg(long, allow_hyphen_values = true)]
    n_xi: Option<String>,
    /// Relative bracket width at which the zeta0 bisection stops.
    #[arg(long, allow_hyphen_values = true)]
    rel_tol: Option<String>,
    /// First length tried by the zeta0 search.
    #[arg(long, allow_hyphen_values = true)]
    zeta_start: Option<String>,
    /// Longest length tried; reaching it reports an unbounded solution.
    #[arg(long, allow_hyphen_values = true)]
    zeta_cap: Option<String>,
    /// Shortest length tried; below it the run fails with exit code 3.
    #[arg(long, allow_hyphen_values = true)]
    zeta_floor: Option<String>,
    /// Dimensionless length for `dimensional`; searched for when absent.
    #[arg(long, allow_hyphen_values = true)]
    zeta0: Option<String>,
    /// Scaled residual tolerance of the layer Newton solves.
    #[arg(long, allow_hyphen_values = true)]
    newton_tol: Option<String>,
    /// Worker threads; falls back to THERMX_JOBS, then 1.
    #[arg(long, allow_hyphen_values = true)]
    jobs: Option<String>,
    /// Input file, or comma-separated files for `collapse`.
    #[arg(long = "in", allow_hyphen_values = true)]
    input: Option<String>,
    /// Output file (CSV for `steady` and `sweep`, JSON otherwise).
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// Field dump of the longest convergent solve (`zeta0`).
    #[arg(long, allow_hyphen_values = true)]
    field_out: Option<String>,
    /// Gas description file for `dimensional`.
    #[arg(long, allow_hyphen_values = true)]
    gas: Option<String>,
}

impl Cli {
    fn flags(&self) -> [(&'static str, &Option<String>); 22] {
        [
            ("command", &self.command),
            ("regime", &self.regime),
            ("re", &self.re),
            ("lambda", &self.lambda),
            ("lambda_start", &self.lambda_start),
            ("lambda_stop", &self.lambda_stop),
            ("lambda_count", &self.lambda_count),
            ("lambda_min", &self.lambda_min),
            ("weighting", &self.weighting),
            ("n_rho", &self.n_rho),
            ("n_xi", &self.n_xi),
            ("rel_tol", &self.rel_tol),
            ("zeta_start", &self.zeta_start),
            ("zeta_cap", &self.zeta_cap),
            ("zeta_floor", &self.zeta_floor),
            ("zeta0", &self.zeta0),
            ("newton_tol", &self.newton_tol),
            ("jobs", &self.jobs),
            ("in", &self.input),
            ("out", &self.out),
            ("field_out", &self.field_out),
            ("gas", &self.gas),
        ]
    }
}

fn execute(cli: &Cli) -> Result<Report> {
    let mut raw = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            RawConfig::parse(&text, Some(&path.display().to_string()))?
        }
        None => RawConfig::default(),
    };
    for (key, value) in cli.flags() {
        if let Some(v) = value {
            raw.set_flag(key, v.clone());
        }
    }
    raw.jobs_fallback(std::env::var("THERMX_JOBS").ok());
    let cfg = raw.resolve()?;
    run(&cfg)
}

/// What a run would print and its exit status.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invocation {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Parses `args` (program name first) and runs the command, exactly as the
/// `thermx` binary does, without touching the process streams.
pub fn invoke<I, T>(args: I) -> Invocation
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Invocation { code: EXIT_INVALID, stdout: String::new(), stderr: text }
            } else {
                Invocation { code: 0, stdout: text, stderr: String::new() }
            };
        }
    };
    match execute(&cli) {
        Ok(report) => Invocation { code: report.code, stdout: format!("{}\n", report.summary), stderr: String::new() },
        Err(e) => Invocation { code: exit_code(&e), stdout: String::new(), stderr: format!("error: {e:#}\n") },
    }
}
