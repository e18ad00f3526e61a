//! Adaptive implicit marching in the physical axial coordinate, used as an
//! independent estimate of where the solution ceases to exist.
//!
//! Each step is taken once with `h` and twice with `h / 2`; the difference
//! controls the step size and the two results are combined by Richardson
//! extrapolation. A Newton failure halves the step. Blow-up is declared when
//! the step underflows or the excess temperature passes `u_blow`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::GridSpec;
use crate::model::PipeProblem;
use crate::pde::{LayerResult, LayerSolver, NewtonOptions, RadialOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarchOptions {
    /// Mixed absolute/relative local error tolerance per step.
    pub tol: f64,
    pub h_min: f64,
    pub h_initial: f64,
    pub u_blow: f64,
}

impl Default for MarchOptions {
    fn default() -> Self {
        MarchOptions { tol: 1e-7, h_min: 1e-12, h_initial: 1e-7, u_blow: 30.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MarchOutcome {
    BlowUp { zeta_b: f64, trajectory: Vec<(f64, f64)> },
    NoBlowUp { trajectory: Vec<(f64, f64)> },
}

impl MarchOutcome {
    /// Accepted `(zeta, u_max)` pairs.
    pub fn trajectory(&self) -> &[(f64, f64)] {
        match self {
            MarchOutcome::BlowUp { trajectory, .. } | MarchOutcome::NoBlowUp { trajectory } => trajectory,
        }
    }

    pub fn zeta_b(&self) -> Option<f64> {
        match self {
            MarchOutcome::BlowUp { zeta_b, .. } => Some(*zeta_b),
            MarchOutcome::NoBlowUp { .. } => None,
        }
    }
}

pub fn march_oracle(problem: &PipeProblem, n_rho: usize, zeta_max: f64) -> Result<MarchOutcome> {
    march_oracle_with(problem, n_rho, zeta_max, &MarchOptions::default())
}

pub fn march_oracle_with(problem: &PipeProblem, n_rho: usize, zeta_max: f64, opts: &MarchOptions) -> Result<MarchOutcome> {
    problem.validate()?;
    if !(zeta_max.is_finite() && zeta_max > 0.0) {
        return invalid(format!("zeta_max must be positive, got {zeta_max}"));
    }
    // Only the radial part of the grid is used.
    let grid = GridSpec::for_regime(&problem.regime, n_rho, crate::grid::MIN_NODES)?;
    let op = RadialOperator::new(problem, &grid);
    let newton = NewtonOptions { u_blow: f64::INFINITY, ..NewtonOptions::default() };
    let mut solver = LayerSolver::new(&op, newton);

    let rho = grid.nodes();
    let mut u: Vec<f64> = rho.iter().map(|&r| problem.inlet.eval(r)).collect();
    *u.last_mut().unwrap() = 0.0;
    let n = u.len();
    let mut full = vec![0.0; n];
    let mut half = vec![0.0; n];
    let mut next = vec![0.0; n];

    let mut zeta = 0.0;
    let mut h = opts.h_initial.min(zeta_max);
    let mut trajectory = vec![(0.0, max_of(&u))];

    let step = |from: &[f64], to: &mut [f64], dt: f64, solver: &mut LayerSolver| {
        to.copy_from_slice(from);
        matches!(solver.solve(to, from, dt), LayerResult::Converged { .. }) && max_of(to) <= opts.u_blow * 2.0
    };

    while zeta < zeta_max {
        if h < opts.h_min {
            return Ok(MarchOutcome::BlowUp { zeta_b: zeta, trajectory });
        }
        h = h.min(zeta_max - zeta);
        let ok = step(&u, &mut full, h, &mut solver)
            && step(&u, &mut half, 0.5 * h, &mut solver)
            && {
                let mid = half.clone();
                step(&mid, &mut next, 0.5 * h, &mut solver)
            };
        if !ok {
            h *= 0.5;
            continue;
        }
        let err = next
            .iter()
            .zip(&full)
            .map(|(a, b)| (a - b).abs() / (opts.tol * (1.0 + a.abs())))
            .fold(0.0, f64::max);
        if err > 1.0 {
            h *= (0.9 / err.sqrt()).max(0.2);
            continue;
        }
        for i in 0..n {
            u[i] = 2.0 * next[i] - full[i];
        }
        u[n - 1] = 0.0;
        zeta += h;
        let u_max = max_of(&u);
        trajectory.push((zeta, u_max));
        if u_max > opts.u_blow {
            return Ok(MarchOutcome::BlowUp { zeta_b: zeta, trajectory });
        }
        let grow = if err > 0.0 { (0.9 / err.sqrt()).min(4.0) } else { 4.0 };
        h *= grow.max(1.0);
    }
    Ok(MarchOutcome::NoBlowUp { trajectory })
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
