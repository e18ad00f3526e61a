//! Finite-volume discretization of the evolution problem on the fixed
//! `(rho, xi)` domain and its solution by Newton's method.
//!
//! The axial coordinate is `xi = zeta / zeta0`, so `zeta0` enters the
//! equations as a parameter. Backward differences in `xi` make the global
//! system block lower triangular: each layer depends only on the previous
//! one, and Newton on the whole system reduces to Newton layer by layer with
//! tridiagonal Jacobians.
//!
//! Radially the scheme is vertex centred. Cell `i` spans the half nodes
//! around `rho_i` and has volume `omega_i = int rho drho`; the axis cell has
//! no inner flux, which encodes both the laminar symmetry condition and the
//! vanishing turbulent axis influx. The wall node carries `u = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{Field2D, GridSpec};
use crate::model::{axial_transport_coefficient, flux_weight, FlowRegime, PipeProblem};
use crate::tridiag;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    /// Bound on the diagonally scaled residual `max_i |R_i| / s_i`, where
    /// `s_i` sums the magnitudes of the advective, diffusive and source
    /// contributions to the Jacobian diagonal.
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
    /// Any iterate exceeding this excess temperature counts as blow-up.
    pub u_blow: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 50, max_halvings: 8, u_blow: 30.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Failure {
    NewtonStall,
    UmaxExceeded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SolveOutcome {
    Converged {
        field: Field2D,
        newton_iters_per_layer: Vec<usize>,
        /// Largest final scaled residual over all layers.
        residual_norm: f64,
        /// Scaled residual norms of every Newton iterate, per layer.
        residual_history: Vec<Vec<f64>>,
    },
    Diverged {
        /// Index of the last layer that converged (0 is the inlet).
        last_good_layer: usize,
        failure: Failure,
        u_max_reached: f64,
    },
}

impl SolveOutcome {
    pub fn is_converged(&self) -> bool {
        matches!(self, SolveOutcome::Converged { .. })
    }

    pub fn field(&self) -> Option<&Field2D> {
        match self {
            SolveOutcome::Converged { field, .. } => Some(field),
            SolveOutcome::Diverged { .. } => None,
        }
    }

    pub fn into_field(self) -> Option<Field2D> {
        match self {
            SolveOutcome::Converged { field, .. } => Some(field),
            SolveOutcome::Diverged { .. } => None,
        }
    }
}

/// Precomputed radial geometry and coefficients for one problem and grid.
#[derive(Debug, Clone)]
pub(crate) struct RadialOperator {
    pub lambda_sq: f64,
    pub rho: Vec<f64>,
    /// Cell volumes for the unknown nodes `0..n-1`.
    pub volume: Vec<f64>,
    /// `cond[i]` is the conductance `a / drho` of the interface between
    /// nodes `i` and `i + 1`.
    pub cond: Vec<f64>,
    pub transport: Vec<f64>,
}

/// `int_{rho_a}^{1} drho / (rho^2 (1 - rho)^(1 - alpha))` via `t = (1 - rho)^alpha`,
/// which removes the wall singularity: the integral becomes
/// `(1/alpha) int_0^{(1 - rho_a)^alpha} dt / (1 - t^(1/alpha))^2`.
fn turbulent_wall_resistance(rho_a: f64, alpha: f64) -> f64 {
    const NODES: [f64; 8] = [
        -0.960_289_856_497_536_2,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const WEIGHTS: [f64; 8] = [
        0.101_228_536_290_376_26,
        0.222_381_034_453_374_47,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362,
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_47,
        0.101_228_536_290_376_26,
    ];
    const PANELS: usize = 4;
    let top = (1.0 - rho_a).powf(alpha);
    let width = top / PANELS as f64;
    let mut sum = 0.0;
    for p in 0..PANELS {
        let mid = (p as f64 + 0.5) * width;
        for (&x, w) in NODES.iter().zip(WEIGHTS) {
            let t = mid + 0.5 * width * x;
            let rho = 1.0 - t.powf(1.0 / alpha);
            sum += w / (rho * rho);
        }
    }
    0.5 * width * sum / alpha
}

impl RadialOperator {
    pub fn new(problem: &PipeProblem, grid: &GridSpec) -> Self {
        let rho = grid.nodes();
        let n = rho.len();
        let regime = &problem.regime;
        let half: Vec<f64> = rho.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let mut volume = Vec::with_capacity(n - 1);
        for i in 0..n - 1 {
            let inner = if i == 0 { 0.0 } else { half[i - 1] };
            volume.push(0.5 * (half[i] * half[i] - inner * inner));
        }
        let mut cond: Vec<f64> = (0..n - 1)
            .map(|i| flux_weight(regime, half[i]) / (rho[i + 1] - rho[i]))
            .collect();
        // The turbulent weight vanishes like (1 - rho)^(1 - alpha) while u' blows
        // up at the wall; a midpoint coefficient misjudges the wall cell badly,
        // so its conductance uses the exact constant-flux resistance.
        if let FlowRegime::Turbulent(t) = regime {
            cond[n - 2] = 1.0 / turbulent_wall_resistance(rho[n - 2], t.alpha);
        }
        let transport = rho.iter().map(|&r| axial_transport_coefficient(regime, r)).collect();
        RadialOperator { lambda_sq: problem.lambda * problem.lambda, rho, volume, cond, transport }
    }

    pub fn n(&self) -> usize {
        self.rho.len()
    }

    /// Flux `a du/drho` through the interface between nodes `i` and `i + 1`.
    pub fn flux(&self, u: &[f64], i: usize) -> f64 {
        self.cond[i] * (u[i + 1] - u[i])
    }

    pub fn residual_into(&self, u: &[f64], prev: &[f64], dt: f64, out: &mut [f64]) {
        let n = self.n();
        for i in 0..n - 1 {
            let outer = self.flux(u, i);
            let inner = if i == 0 { 0.0 } else { self.flux(u, i - 1) };
            out[i] = self.transport[i] * (u[i] - prev[i]) / dt
                - (outer - inner) / self.volume[i]
                - self.lambda_sq * u[i].exp();
        }
        out[n - 1] = u[n - 1];
    }

    /// Per-row scale used to normalize residuals.
    fn scale_into(&self, u: &[f64], dt: f64, out: &mut [f64]) {
        let n = self.n();
        for i in 0..n - 1 {
            let inner = if i == 0 { 0.0 } else { self.cond[i - 1] };
            out[i] = self.transport[i] / dt + (self.cond[i] + inner) / self.volume[i] + self.lambda_sq * u[i].exp();
        }
        out[n - 1] = 1.0;
    }

    fn jacobian_into(&self, u: &[f64], dt: f64, lower: &mut [f64], diag: &mut [f64], upper: &mut [f64]) {
        let n = self.n();
        for i in 0..n - 1 {
            let inner = if i == 0 { 0.0 } else { self.cond[i - 1] };
            lower[i] = -inner / self.volume[i];
            upper[i] = -self.cond[i] / self.volume[i];
            diag[i] = self.transport[i] / dt + (self.cond[i] + inner) / self.volume[i] - self.lambda_sq * u[i].exp();
        }
        lower[n - 1] = 0.0;
        upper[n - 1] = 0.0;
        diag[n - 1] = 1.0;
    }
}

/// Finite-volume residual of one implicit layer: advection difference minus
/// the conservative diffusion term minus the source, per unit cell volume.
/// The last entry is the Dirichlet identity `u = 0` at the wall.
pub fn discretize_residual(
    problem: &PipeProblem,
    grid: &GridSpec,
    zeta0: f64,
    u_layer: &[f64],
    u_prev_layer: &[f64],
) -> Result<Vec<f64>> {
    grid.validate()?;
    if u_layer.len() != grid.n_rho || u_prev_layer.len() != grid.n_rho {
        return invalid(format!("layers must have {} entries", grid.n_rho));
    }
    if !(zeta0.is_finite() && zeta0 > 0.0) {
        return invalid(format!("zeta0 must be positive, got {zeta0}"));
    }
    let op = RadialOperator::new(problem, grid);
    let mut out = vec![0.0; grid.n_rho];
    op.residual_into(u_layer, u_prev_layer, grid.d_xi() * zeta0, &mut out);
    Ok(out)
}

pub(crate) struct LayerSolver<'a> {
    op: &'a RadialOperator,
    opts: NewtonOptions,
    res: Vec<f64>,
    scale: Vec<f64>,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    delta: Vec<f64>,
    trial: Vec<f64>,
    scratch: Vec<f64>,
}

pub(crate) enum LayerResult {
    Converged { history: Vec<f64> },
    Failed { failure: Failure, u_max: f64 },
}

impl<'a> LayerSolver<'a> {
    pub fn new(op: &'a RadialOperator, opts: NewtonOptions) -> Self {
        let n = op.n();
        LayerSolver {
            op,
            opts,
            res: vec![0.0; n],
            scale: vec![0.0; n],
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            delta: vec![0.0; n],
            trial: vec![0.0; n],
            scratch: Vec::with_capacity(n),
        }
    }

    fn norm(&mut self, u: &[f64], prev: &[f64], dt: f64) -> f64 {
        self.op.residual_into(u, prev, dt, &mut self.res);
        self.op.scale_into(u, dt, &mut self.scale);
        let norm = self
            .res
            .iter()
            .zip(&self.scale)
            .map(|(r, s)| (r / s).abs())
            .fold(0.0, f64::max);
        if norm.is_finite() {
            norm
        } else {
            f64::INFINITY
        }
    }

    /// One damped Newton step from `u`. On success `u` holds the accepted
    /// iterate and the new norm is returned.
    fn step(&mut self, u: &mut [f64], prev: &[f64], dt: f64, norm: f64) -> std::result::Result<f64, LayerResult> {
        let n = u.len();
        self.op.residual_into(u, prev, dt, &mut self.res);
        self.op.jacobian_into(u, dt, &mut self.lower, &mut self.diag, &mut self.upper);
        for (d, r) in self.delta.iter_mut().zip(&self.res) {
            *d = -r;
        }
        if !tridiag::solve(&self.lower, &self.diag, &self.upper, &mut self.delta, &mut self.scratch) {
            return Err(LayerResult::Failed { failure: Failure::NewtonStall, u_max: max_of(u) });
        }
        let mut step = 1.0;
        for _ in 0..=self.opts.max_halvings {
            for i in 0..n {
                self.trial[i] = u[i] + step * self.delta[i];
            }
            let trial_max = max_of(&self.trial);
            if !(trial_max <= self.opts.u_blow) {
                return Err(LayerResult::Failed { failure: Failure::UmaxExceeded, u_max: trial_max });
            }
            let trial = std::mem::take(&mut self.trial);
            let trial_norm = self.norm(&trial, prev, dt);
            self.trial = trial;
            if trial_norm <= norm {
                u.copy_from_slice(&self.trial);
                return Ok(trial_norm);
            }
            step *= 0.5;
        }
        Err(LayerResult::Failed { failure: Failure::NewtonStall, u_max: max_of(u) })
    }

    /// Solves one implicit layer in place, starting from the contents of `u`.
    ///
    /// Once the scaled residual is below the tolerance, up to
    /// `POLISH_STEPS` further full steps are taken while they still reduce
    /// it, so that converged layers sit at round-off rather than at the
    /// tolerance.
    pub fn solve(&mut self, u: &mut [f64], prev: &[f64], dt: f64) -> LayerResult {
        const POLISH_STEPS: usize = 2;
        const POLISH_FLOOR: f64 = 1e-15;
        let n = u.len();
        u[n - 1] = 0.0;
        let mut norm = self.norm(u, prev, dt);
        let mut history = vec![norm];
        let mut iters = 0;
        while norm >= self.opts.tol {
            if iters == self.opts.max_iter {
                return LayerResult::Failed { failure: Failure::NewtonStall, u_max: max_of(u) };
            }
            match self.step(u, prev, dt, norm) {
                Ok(next) => norm = next,
                Err(failed) => return failed,
            }
            history.push(norm);
            iters += 1;
        }
        let mut polished = u.to_vec();
        for _ in 0..POLISH_STEPS {
            if norm < POLISH_FLOOR {
                break;
            }
            match self.step(&mut polished, prev, dt, norm) {
                Ok(next) if next < norm => {
                    u.copy_from_slice(&polished);
                    norm = next;
                    history.push(norm);
                }
                _ => break,
            }
        }
        LayerResult::Converged { history }
    }
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Solves the problem on `[0, 1] x [0, 1]` in `(rho, xi)` with default options.
pub fn newton_solve(
    problem: &PipeProblem,
    grid: &GridSpec,
    zeta0: f64,
    warm_start: Option<&Field2D>,
) -> Result<SolveOutcome> {
    newton_solve_with(problem, grid, zeta0, warm_start, &NewtonOptions::default())
}

/// Layer-by-layer Newton solve. Each layer starts from the previous layer;
/// with a warm start it first tries the elementwise maximum of the previous
/// layer and the warm field at the same `xi`, falling back to the previous
/// layer alone if that attempt fails.
pub fn newton_solve_with(
    problem: &PipeProblem,
    grid: &GridSpec,
    zeta0: f64,
    warm_start: Option<&Field2D>,
    opts: &NewtonOptions,
) -> Result<SolveOutcome> {
    problem.validate()?;
    grid.validate()?;
    if !(zeta0.is_finite() && zeta0 > 0.0) {
        return invalid(format!("zeta0 must be positive, got {zeta0}"));
    }
    if let Some(w) = warm_start {
        if w.grid.n_rho != grid.n_rho || w.rho != grid.nodes() {
            return invalid("warm start field uses a different radial grid");
        }
    }
    let op = RadialOperator::new(problem, grid);
    let mut solver = LayerSolver::new(&op, *opts);
    let mut field = Field2D::with_inlet(problem, *grid, zeta0);
    let dt = grid.d_xi() * zeta0;
    let n = grid.n_rho;
    let mut iters = Vec::with_capacity(grid.n_xi);
    let mut history = Vec::with_capacity(grid.n_xi);
    let mut residual_norm: f64 = 0.0;
    let mut prev = field.layer(0).to_vec();
    let mut current = vec![0.0; n];
    for j in 1..=grid.n_xi {
        let mut result = None;
        if let Some(w) = warm_start {
            let seed = w.layer_at_xi(field.xi(j));
            for i in 0..n {
                current[i] = prev[i].max(seed[i]);
            }
            match solver.solve(&mut current, &prev, dt) {
                r @ LayerResult::Converged { .. } => result = Some(r),
                LayerResult::Failed { .. } => {}
            }
        }
        let result = match result {
            Some(r) => r,
            None => {
                current.copy_from_slice(&prev);
                solver.solve(&mut current, &prev, dt)
            }
        };
        match result {
            LayerResult::Converged { history: h } => {
                residual_norm = residual_norm.max(*h.last().unwrap());
                iters.push(h.len() - 1);
                history.push(h);
                field.layer_mut(j).copy_from_slice(&current);
                prev.copy_from_slice(&current);
            }
            LayerResult::Failed { failure, u_max } => {
                return Ok(SolveOutcome::Diverged { last_good_layer: j - 1, failure, u_max_reached: u_max });
            }
        }
    }
    Ok(SolveOutcome::Converged { field, newton_iters_per_layer: iters, residual_norm, residual_history: history })
}

/// Integrated balance of one converged layer `j >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LayerBalance {
    /// `sum_i omega_i (V_i (u_i - u_prev_i) / dt - lambda^2 e^{u_i})`.
    pub volume_integral: f64,
    /// Flux `a du/drho` into the wall face (negative when heat leaves).
    pub wall_flux: f64,
}

pub fn layer_balance(field: &Field2D, j: usize) -> Result<LayerBalance> {
    if j == 0 || j > field.grid.n_xi {
        return invalid(format!("layer {j} is not an interior layer"));
    }
    let op = RadialOperator::new(&field.problem, &field.grid);
    let dt = field.grid.d_xi() * field.zeta0;
    let (u, prev) = (field.layer(j), field.layer(j - 1));
    let n = op.n();
    let volume_integral = (0..n - 1)
        .map(|i| op.volume[i] * (op.transport[i] * (u[i] - prev[i]) / dt - op.lambda_sq * u[i].exp()))
        .sum();
    Ok(LayerBalance { volume_integral, wall_flux: op.flux(u, n - 2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{c_of_alpha, Turbulence};
    use approx::assert_relative_eq;

    fn laminar(lambda: f64) -> PipeProblem {
        PipeProblem::new(lambda, FlowRegime::Laminar).unwrap()
    }

    #[test]
    fn homogeneous_residual_vanishes() {
        let grid = GridSpec::uniform(64, 32).unwrap();
        let zero = vec![0.0; 64];
        let r = discretize_residual(&laminar(0.0), &grid, 1.0, &zero, &zero).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn constants_only_feel_advection() {
        let grid = GridSpec::uniform(64, 32).unwrap();
        let (c, zeta0) = (0.7, 0.3);
        let mut u = vec![c; 64];
        u[63] = c;
        let prev = vec![0.0; 64];
        let r = discretize_residual(&laminar(0.0), &grid, zeta0, &u, &prev).unwrap();
        let rho = grid.nodes();
        for i in 0..63 {
            let expected = (1.0 - rho[i] * rho[i]) * c / (grid.d_xi() * zeta0);
            assert_relative_eq!(r[i], expected, max_relative = 1e-12);
        }
        assert_eq!(r[63], c);
    }

    #[test]
    fn axis_cell_volume() {
        let grid = GridSpec::uniform(65, 32).unwrap();
        let op = RadialOperator::new(&laminar(1.0), &grid);
        let h = 1.0 / 64.0;
        assert_relative_eq!(op.volume[0], h * h / 8.0, max_relative = 1e-14);
        let total: f64 = op.volume.iter().sum();
        let last_half = 1.0 - 0.5 * h;
        assert_relative_eq!(total, 0.5 * last_half * last_half, max_relative = 1e-13);
    }

    #[test]
    fn zero_source_converges_to_zero() {
        let grid = GridSpec::uniform(64, 32).unwrap();
        let out = newton_solve(&laminar(0.0), &grid, 5.0, None).unwrap();
        let field = out.field().unwrap();
        assert!(field.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn wall_resistance_matches_direct_quadrature() {
        // Away from the wall the integrand is smooth: compare with composite Simpson.
        let alpha = 0.3;
        let (a, b) = (0.5, 0.9);
        let f = |r: f64| 1.0 / (r * r * (1.0 - r).powf(1.0 - alpha));
        let m = 2000;
        let h = (b - a) / m as f64;
        let mut s = f(a) + f(b);
        for k in 1..m {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
        }
        let direct = s * h / 3.0;
        let split = turbulent_wall_resistance(a, alpha) - turbulent_wall_resistance(b, alpha);
        assert_relative_eq!(split, direct, max_relative = 1e-8);
    }

    #[test]
    fn supercritical_blows_up_and_subcritical_converges() {
        let grid = GridSpec::uniform(64, 64).unwrap();
        assert!(newton_solve(&laminar(1.0), &grid, 5.0, None).unwrap().is_converged());
        match newton_solve(&laminar(2.0), &grid, 10.0, None).unwrap() {
            SolveOutcome::Diverged { last_good_layer, .. } => assert!(last_good_layer < 64),
            other => panic!("expected divergence, got converged = {}", other.is_converged()),
        }
    }

    #[test]
    fn turbulent_layer_solves() {
        let alpha = 0.15;
        let regime = FlowRegime::Turbulent(Turbulence { re: (1.5f64 / alpha).exp(), alpha, c: c_of_alpha(alpha).unwrap() });
        let problem = PipeProblem::new(0.3, regime).unwrap();
        let grid = GridSpec::for_regime(&regime, 96, 32).unwrap();
        assert!(newton_solve(&problem, &grid, 10.0, None).unwrap().is_converged());
    }

    #[test]
    fn rejects_bad_input() {
        let grid = GridSpec::uniform(64, 32).unwrap();
        assert!(newton_solve(&laminar(1.0), &grid, 0.0, None).is_err());
        assert!(discretize_residual(&laminar(1.0), &grid, 1.0, &[0.0; 3], &[0.0; 3]).is_err());
    }
}
