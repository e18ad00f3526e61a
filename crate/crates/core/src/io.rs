//! Flat-file formats. Floating-point values are written with 17 significant
//! digits so that every file reads back bit-exactly.

use std::io::{self, BufRead, Write};

use serde::Serialize;

use crate::criticality::{BoundaryCurve, ExistencePoint};
use crate::error::{Error, Result};
use crate::grid::{Field2D, GridSpec, Stretch};
use crate::model::FlowRegime;
use crate::steady::SteadyProfile;

pub const CURVE_HEADER: &str = "lambda,zeta0,zeta0_lo,zeta0_hi,n_rho,n_xi";
pub const FIELD_HEADER: &str = "rho,xi,u";
pub const PROFILE_HEADER: &str = "rho,u";

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_profile_csv<W: Write>(mut w: W, profile: &SteadyProfile) -> io::Result<()> {
    writeln!(w, "{PROFILE_HEADER}")?;
    for (r, u) in profile.rho_nodes.iter().zip(&profile.u_values) {
        writeln!(w, "{},{}", num(*r), num(*u))?;
    }
    Ok(())
}

pub fn write_field_csv<W: Write>(mut w: W, field: &Field2D) -> io::Result<()> {
    writeln!(w, "{FIELD_HEADER}")?;
    for j in 0..field.n_layers() {
        let xi = num(field.xi(j));
        for (r, u) in field.rho.iter().zip(field.layer(j)) {
            writeln!(w, "{},{},{}", num(*r), xi, num(*u))?;
        }
    }
    Ok(())
}

pub fn write_curve_csv<W: Write>(mut w: W, curve: &BoundaryCurve) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            num(p.lambda),
            num(p.zeta0),
            num(p.zeta0_lo),
            num(p.zeta0_hi),
            p.grid.n_rho,
            p.grid.n_xi
        )?;
    }
    Ok(())
}

/// Reads a curve file written by [`write_curve_csv`]. The file carries no
/// regime or stretch information; `regime` is attached to every point and
/// grids are recorded as uniform.
pub fn read_curve_csv<R: BufRead>(r: R, regime: FlowRegime) -> Result<BoundaryCurve> {
    let bad = |line: usize, msg: String| Error::InvalidInput(format!("curve file line {line}: {msg}"));
    let mut lines = r.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == CURVE_HEADER => {}
        Some((_, Ok(h))) => return Err(bad(1, format!("expected header `{CURVE_HEADER}`, got `{h}`"))),
        Some((_, Err(e))) => return Err(bad(1, e.to_string())),
        None => return Err(bad(1, "empty file".into())),
    }
    let mut points = Vec::new();
    for (k, line) in lines {
        let line = line.map_err(|e| bad(k + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 6 {
            return Err(bad(k + 1, format!("expected 6 columns, got {}", cols.len())));
        }
        let f = |i: usize| cols[i].parse::<f64>().map_err(|e| bad(k + 1, format!("column {}: {e}", i + 1)));
        let n = |i: usize| cols[i].parse::<usize>().map_err(|e| bad(k + 1, format!("column {}: {e}", i + 1)));
        points.push(ExistencePoint {
            lambda: f(0)?,
            zeta0: f(1)?,
            zeta0_lo: f(2)?,
            zeta0_hi: f(3)?,
            grid: GridSpec { n_rho: n(4)?, n_xi: n(5)?, stretch: Stretch::Uniform },
            n_xi_divergent: n(5)?,
            regime,
        });
    }
    if points.windows(2).any(|w| w[1].lambda <= w[0].lambda) {
        return Err(Error::InvalidInput("curve file must be sorted by increasing lambda".into()));
    }
    let grid = points
        .first()
        .map(|p| p.grid)
        .unwrap_or(GridSpec { n_rho: 0, n_xi: 0, stretch: Stretch::Uniform });
    Ok(BoundaryCurve { points, regime, grid, rel_tol: f64::NAN, unbounded: vec![], failures: vec![] })
}

/// Compact description of a converged field.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSummary {
    pub lambda: f64,
    pub zeta0: f64,
    pub u_max: f64,
    pub outlet_rho: Vec<f64>,
    pub outlet_u: Vec<f64>,
    pub newton_iters_per_layer: Vec<usize>,
    pub residual_norm: f64,
}

impl FieldSummary {
    pub fn new(field: &Field2D, newton_iters_per_layer: &[usize], residual_norm: f64) -> Self {
        FieldSummary {
            lambda: field.problem.lambda,
            zeta0: field.zeta0,
            u_max: field.u_max(),
            outlet_rho: field.rho.clone(),
            outlet_u: field.outlet().to_vec(),
            newton_iters_per_layer: newton_iters_per_layer.to_vec(),
            residual_norm,
        }
    }
}
