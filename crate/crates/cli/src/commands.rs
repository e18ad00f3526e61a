use std::fs;
use std::io::BufReader;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use thermx_core::exec::with_jobs;
use thermx_core::io::{read_curve_csv, write_curve_csv, write_field_csv, write_profile_csv};
use thermx_core::model::{dimensional_critical_length, lambda_from_gas};
use thermx_core::scaling::fit_power_law_weighted;
use thermx_core::{
    collapse_spread, critical_lambda, find_zeta0, find_zeta0_with_field, solve_steady, sweep_boundary, BoundaryCurve, Execution, FlowRegime,
    PipeProblem, RegimeKind, SteadySolution, ZetaSearch,
};

use crate::config::{parse_gas, Command, ConfigError, RunConfig};
use crate::output::{write_atomic, write_json};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 1;
pub const EXIT_NON_CONVERGENCE: u8 = 2;
pub const EXIT_NO_SOLUTION: u8 = 3;

/// Failures that are results rather than bad input.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("{0}")]
    NoSolution(String),
    #[error("{0}")]
    NonConvergence(String),
}

/// Result of a run: a one-line JSON summary and the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub summary: Value,
    pub code: u8,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Report { summary, code: EXIT_OK }
    }
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<RunError>() {
            return match e {
                RunError::NoSolution(_) => EXIT_NO_SOLUTION,
                RunError::NonConvergence(_) => EXIT_NON_CONVERGENCE,
            };
        }
        if let Some(e) = cause.downcast_ref::<thermx_core::Error>() {
            return match e {
                thermx_core::Error::InvalidInput(_) => EXIT_INVALID,
                thermx_core::Error::TooSupercritical { .. } => EXIT_NO_SOLUTION,
                _ => EXIT_NON_CONVERGENCE,
            };
        }
    }
    EXIT_INVALID
}

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let command = cfg.command.ok_or(ConfigError::Missing("command"))?;
    with_jobs(cfg.jobs, || match command {
        Command::Steady => steady(cfg),
        Command::LambdaCr => lambda_cr(cfg),
        Command::Zeta0 => zeta0(cfg),
        Command::Sweep => sweep(cfg),
        Command::Fit => fit(cfg),
        Command::Collapse => collapse(cfg),
        Command::Dimensional => dimensional(cfg),
    })
}

fn out_path(cfg: &RunConfig) -> Value {
    cfg.out.as_ref().map(|p| json!(p.display().to_string())).unwrap_or(Value::Null)
}

fn steady(cfg: &RunConfig) -> Result<Report> {
    let regime = cfg.regime()?;
    let lambda = cfg.lambda()?;
    match solve_steady(&regime, lambda)? {
        SteadySolution::Found(profile) => {
            if let Some(path) = &cfg.out {
                write_atomic(path, |w| write_profile_csv(w, &profile))?;
            }
            Ok(Report::ok(json!({
                "command": "steady",
                "regime": regime.label(),
                "lambda": lambda,
                "u_axis": profile.u_axis(),
                "out": out_path(cfg),
            })))
        }
        SteadySolution::NoSolution { max_wall } => Err(RunError::NoSolution(format!(
            "no steady solution for {} flow at lambda = {lambda}: lambda exceeds lambda_cr (best wall value {max_wall:.3e})",
            regime.label()
        ))
        .into()),
    }
}

fn lambda_cr(cfg: &RunConfig) -> Result<Report> {
    let regime = cfg.regime()?;
    let env = critical_lambda(&regime, Execution::Parallel)?;
    if let Some(path) = &cfg.out {
        write_json(path, &json!({ "regime": regime, "lambda_cr": env.lambda_cr, "u0_at_cr": env.u0_at_cr, "curve": env.curve }))?;
    }
    Ok(Report::ok(json!({
        "command": "lambda-cr",
        "regime": regime.label(),
        "lambda_cr": env.lambda_cr,
        "u0_at_cr": env.u0_at_cr,
        "out": out_path(cfg),
    })))
}

fn zeta0(cfg: &RunConfig) -> Result<Report> {
    let regime = cfg.regime()?;
    let lambda = cfg.lambda()?;
    let grid = cfg.grid(&regime)?;
    let problem = PipeProblem::new(lambda, regime)?;
    let (search, field) = find_zeta0_with_field(&problem, &grid, &cfg.search)?;
    if let Some(path) = &cfg.field_out {
        write_atomic(path, |w| write_field_csv(w, &field))?;
    }
    let summary = match search {
        ZetaSearch::Bounded(p) => {
            if let Some(path) = &cfg.out {
                write_json(path, &p)?;
            }
            json!({
                "command": "zeta0",
                "regime": regime.label(),
                "lambda": lambda,
                "zeta0": p.zeta0,
                "zeta0_lo": p.zeta0_lo,
                "zeta0_hi": p.zeta0_hi,
                "n_rho": grid.n_rho,
                "n_xi": grid.n_xi,
                "out": out_path(cfg),
            })
        }
        ZetaSearch::Unbounded { zeta_cap } => {
            let v = json!({
                "command": "zeta0",
                "regime": regime.label(),
                "lambda": lambda,
                "zeta0": Value::Null,
                "unbounded": true,
                "zeta_cap": zeta_cap,
                "out": out_path(cfg),
            });
            if let Some(path) = &cfg.out {
                write_json(path, &v)?;
            }
            v
        }
    };
    Ok(Report::ok(summary))
}

fn sweep(cfg: &RunConfig) -> Result<Report> {
    let regime = cfg.regime()?;
    let lambdas = cfg.lambdas()?;
    let grid = cfg.grid(&regime)?;
    let Some(path) = &cfg.out else { bail!(ConfigError::Missing("out (sweep writes a curve file)")) };
    // The same strategy for every `jobs` value keeps the output independent of it.
    let curve = sweep_boundary(&regime, &lambdas, &grid, &cfg.search, Execution::Parallel)?;
    write_atomic(path, |w| write_curve_csv(w, &curve))?;
    let failures: Vec<Value> = curve.failures.iter().map(|(l, e)| json!({ "lambda": l, "error": e })).collect();
    let summary = json!({
        "command": "sweep",
        "regime": regime.label(),
        "n_points": curve.points.len(),
        "unbounded": curve.unbounded,
        "failures": failures,
        "out": out_path(cfg),
    });
    let code = if curve.failures.is_empty() { EXIT_OK } else { EXIT_NON_CONVERGENCE };
    Ok(Report { summary, code })
}

fn read_curve(path: &std::path::Path, regime: FlowRegime) -> Result<BoundaryCurve> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_curve_csv(BufReader::new(file), regime).with_context(|| format!("reading {}", path.display()))
}

fn fit(cfg: &RunConfig) -> Result<Report> {
    let [input] = cfg.inputs.as_slice() else { bail!(ConfigError::Missing("in (exactly one curve file)")) };
    let curve = read_curve(input, cfg.regime.unwrap_or(FlowRegime::Laminar))?;
    let fit = fit_power_law_weighted(&curve, cfg.lambda_min, cfg.weighting)?;
    if let Some(path) = &cfg.out {
        write_json(path, &fit)?;
    }
    let mut summary = serde_json::to_value(fit)?;
    summary["command"] = json!("fit");
    summary["out"] = out_path(cfg);
    Ok(Report::ok(summary))
}

fn collapse(cfg: &RunConfig) -> Result<Report> {
    if cfg.inputs.len() < 2 {
        bail!(ConfigError::Missing("in (at least two comma-separated curve files)"));
    }
    let lambdas = cfg.lambdas()?;
    let curves = cfg
        .inputs
        .iter()
        .map(|p| read_curve(p, FlowRegime::Laminar))
        .collect::<Result<Vec<_>>>()?;
    let spread = collapse_spread(&curves, &lambdas)?;
    let summary = json!({
        "command": "collapse",
        "spread": spread,
        "n_curves": curves.len(),
        "lambda_start": lambdas[0],
        "lambda_stop": lambdas[lambdas.len() - 1],
        "out": out_path(cfg),
    });
    if let Some(path) = &cfg.out {
        write_json(path, &summary)?;
    }
    Ok(Report::ok(summary))
}

fn dimensional(cfg: &RunConfig) -> Result<Report> {
    let Some(gas_path) = &cfg.gas else { bail!(ConfigError::Missing("gas")) };
    let text = fs::read_to_string(gas_path).with_context(|| format!("reading {}", gas_path.display()))?;
    let gas = parse_gas(&text, Some(&gas_path.display().to_string()))?;
    if cfg.regime.is_some() && cfg.is_turbulent() {
        bail!(thermx_core::Error::InvalidInput("`re` is taken from the gas file; do not set it".into()));
    }
    let kind = if cfg.is_turbulent() {
        RegimeKind::Turbulent
    } else if cfg.regime == Some(FlowRegime::Laminar) {
        RegimeKind::Laminar
    } else {
        bail!(ConfigError::Missing("regime"));
    };
    let regime = gas.regime(kind)?;
    let scale = lambda_from_gas(&gas, kind)?;

    let zeta0 = match cfg.zeta0 {
        Some(z) => Some(z),
        None => {
            let grid = cfg.grid(&regime)?;
            find_zeta0(&PipeProblem::new(scale.lambda, regime)?, &grid, &cfg.search)?.point().map(|p| p.zeta0)
        }
    };
    let z0 = zeta0.map(|z| dimensional_critical_length(&gas, &regime, z)).transpose()?;
    let summary = json!({
        "command": "dimensional",
        "regime": regime.label(),
        "re": gas.reynolds(),
        "prandtl": gas.prandtl(),
        "lambda": scale.lambda,
        "ell": scale.ell,
        "zeta0": zeta0,
        "z0": z0,
        "out": out_path(cfg),
    });
    if let Some(path) = &cfg.out {
        write_json(path, &summary)?;
    }
    Ok(Report::ok(summary))
}
