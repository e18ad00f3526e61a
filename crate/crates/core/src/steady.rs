//! Steady radial problem `(1/rho) (a(rho) u')' + lambda^2 e^u = 0`, `u(1) = 0`,
//! with zero flux at the axis.
//!
//! Profiles are produced by shooting from the axis with the accumulated
//! source `F(rho) = int_0^rho s e^u ds` carried as a second state, so that
//! `a(rho) u' = -lambda^2 F` holds along the whole integration. The
//! integral curves form a one-parameter family in `u(0)`; the largest
//! `lambda` reached by a member that also vanishes at the wall is `lambda_cr`.

use ode_solvers::{Dopri5, OutputType, System, Vector2};
use roots::{find_root_brent, SimpleConvergency};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::model::{flux_weight, FlowRegime};

/// Integration starts this far off the axis, seeded by the regular expansion.
pub const RHO_START: f64 = 1e-8;
/// Turbulent integration stops this far from the wall; the remainder is
/// added analytically.
pub const WALL_GAP: f64 = 1e-6;

const RTOL: f64 = 1e-11;
const ATOL: f64 = 1e-13;
const PROFILE_INTERVALS: usize = 1000;
/// `|u(1)|` at the fold below which the lower and upper branch are declared
/// indistinguishable.
const CRITICAL_TOL: f64 = 1e-9;
const U0_MAX: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteadyProfile {
    pub rho_nodes: Vec<f64>,
    pub u_values: Vec<f64>,
    /// Accumulated source `int_0^rho s e^u ds` at each node.
    pub source_integral: Vec<f64>,
    pub lambda: f64,
    pub regime: FlowRegime,
    pub branch: Branch,
}

impl SteadyProfile {
    pub fn u_axis(&self) -> f64 {
        self.u_values[0]
    }

    /// Piecewise-linear interpolation of `u`.
    pub fn eval(&self, rho: f64) -> f64 {
        let r = &self.rho_nodes;
        let k = r.partition_point(|&x| x <= rho).clamp(1, r.len() - 1);
        let t = (rho - r[k - 1]) / (r[k] - r[k - 1]);
        self.u_values[k - 1] + t * (self.u_values[k] - self.u_values[k - 1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shot {
    pub u_wall: f64,
    pub profile: SteadyProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SteadySolution {
    Found(SteadyProfile),
    /// Every member of the family stays negative at the wall; `max_wall` is
    /// the largest wall value found.
    NoSolution { max_wall: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeResult {
    pub lambda_cr: f64,
    pub u0_at_cr: f64,
    /// Sampled `(u0, lambda(u0))` pairs.
    pub curve: Vec<(f64, f64)>,
}

struct RadialRhs {
    regime: FlowRegime,
    lambda_sq: f64,
}

impl System<f64, Vector2<f64>> for RadialRhs {
    fn system(&self, rho: f64, y: &Vector2<f64>, dy: &mut Vector2<f64>) {
        dy[0] = -self.lambda_sq * y[1] / flux_weight(&self.regime, rho);
        dy[1] = rho * y[0].exp();
    }
}

/// Initial state at `RHO_START` from the regular axis expansion.
fn axis_state(regime: &FlowRegime, lambda_sq: f64, u0: f64) -> Vector2<f64> {
    let r = RHO_START;
    let e = u0.exp();
    let u = match regime {
        FlowRegime::Laminar => u0 - 0.25 * lambda_sq * e * r * r,
        FlowRegime::Turbulent(_) => u0 - 0.5 * lambda_sq * e * r,
    };
    Vector2::new(u, 0.5 * e * r * r)
}

fn end_of_integration(regime: &FlowRegime) -> f64 {
    match regime {
        FlowRegime::Laminar => 1.0,
        FlowRegime::Turbulent(_) => 1.0 - WALL_GAP,
    }
}

/// Adds the analytic near-wall remainder for the turbulent profile:
/// `u' ~ -lambda^2 F (1 - rho)^(alpha - 1) / rho^2` integrates to
/// `-lambda^2 F delta^alpha / (alpha rho^2)`.
fn wall_value(regime: &FlowRegime, lambda_sq: f64, rho_end: f64, y: &Vector2<f64>) -> f64 {
    match regime {
        FlowRegime::Laminar => y[0],
        FlowRegime::Turbulent(t) => {
            let gap = 1.0 - rho_end;
            y[0] - lambda_sq * y[1] * gap.powf(t.alpha) / (t.alpha * rho_end * rho_end)
        }
    }
}

fn integrate(
    regime: &FlowRegime,
    lambda: f64,
    u0: f64,
    out: OutputType,
    dx: f64,
) -> Result<(Vec<f64>, Vec<Vector2<f64>>)> {
    let lambda_sq = lambda * lambda;
    let x_end = end_of_integration(regime);
    let y0 = axis_state(regime, lambda_sq, u0);
    let rhs = RadialRhs { regime: *regime, lambda_sq };
    let mut solver = Dopri5::from_param(
        rhs, RHO_START, x_end, dx, y0, RTOL, ATOL, 0.9, 0.04, 0.2, 10.0, 0.05, 0.0, 200_000, 1000, out,
    );
    solver.integrate().map_err(|e| {
        let rho = match &e {
            ode_solvers::dop_shared::IntegrationError::StepSizeUnderflow { x } => *x,
            ode_solvers::dop_shared::IntegrationError::MaxNumStepReached { x, .. } => *x,
            ode_solvers::dop_shared::IntegrationError::StiffnessDetected { x } => *x,
        };
        Error::Stiffness { rho, reason: e.to_string() }
    })?;
    let (x, y) = solver.results().get();
    Ok((x.clone(), y.clone()))
}

/// Wall value `u(1)` of the integral curve starting at `u(0) = u0`.
pub(crate) fn u_wall(regime: &FlowRegime, lambda: f64, u0: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(u0);
    }
    let (x, y) = integrate(regime, lambda, u0, OutputType::Sparse, 0.0)?;
    let (rho_end, y_end) = (*x.last().unwrap(), *y.last().unwrap());
    Ok(wall_value(regime, lambda * lambda, rho_end, &y_end))
}

fn check_args(lambda: f64, u0: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return invalid(format!("lambda must be finite and nonnegative, got {lambda}"));
    }
    if !(u0.is_finite() && u0 >= 0.0) {
        return invalid(format!("axis value u0 must be finite and nonnegative, got {u0}"));
    }
    Ok(())
}

/// Integrates the steady equation from the axis with `u(0) = u0` and returns
/// the wall value without imposing `u(1) = 0`, plus the sampled profile.
pub fn shoot_steady(regime: &FlowRegime, lambda: f64, u0: f64) -> Result<Shot> {
    check_args(lambda, u0)?;
    regime.validate()?;
    let lambda_sq = lambda * lambda;
    let x_end = end_of_integration(regime);
    let mut rho_nodes = vec![0.0];
    let mut u_values = vec![u0];
    let mut source_integral = vec![0.0];
    let u_wall_value = if lambda == 0.0 {
        for k in 1..=PROFILE_INTERVALS {
            rho_nodes.push(k as f64 / PROFILE_INTERVALS as f64);
            u_values.push(u0);
            let r = k as f64 / PROFILE_INTERVALS as f64;
            source_integral.push(0.5 * u0.exp() * r * r);
        }
        u0
    } else {
        let dx = (x_end - RHO_START) / PROFILE_INTERVALS as f64;
        let (xs, ys) = integrate(regime, lambda, u0, OutputType::Dense, dx)?;
        for (x, y) in xs.iter().zip(&ys).skip(1) {
            if *x < x_end - 0.5 * dx {
                rho_nodes.push(*x);
                u_values.push(y[0]);
                source_integral.push(y[1]);
            }
        }
        let (xe, ye) = integrate(regime, lambda, u0, OutputType::Sparse, 0.0)?;
        let (rho_end, y_end) = (*xe.last().unwrap(), *ye.last().unwrap());
        if matches!(regime, FlowRegime::Turbulent(_)) {
            rho_nodes.push(rho_end);
            u_values.push(y_end[0]);
            source_integral.push(y_end[1]);
        }
        let uw = wall_value(regime, lambda_sq, rho_end, &y_end);
        rho_nodes.push(1.0);
        u_values.push(uw);
        source_integral.push(y_end[1] + 0.5 * (1.0 - rho_end) * (rho_end * y_end[0].exp() + uw.exp()));
        uw
    };
    Ok(Shot {
        u_wall: u_wall_value,
        profile: SteadyProfile {
            rho_nodes,
            u_values,
            source_integral,
            lambda,
            regime: *regime,
            branch: Branch::Lower,
        },
    })
}

fn brent(f: impl FnMut(f64) -> f64, a: f64, b: f64, eps: f64) -> Result<f64> {
    let mut conv = SimpleConvergency { eps, max_iter: 200 };
    find_root_brent(a, b, f, &mut conv).map_err(|e| Error::RootFinding(format!("{e:?} on [{a}, {b}]")))
}

/// Golden-section maximization of `f` on `[a, b]` to absolute width `tol`.
pub(crate) fn golden_max(mut f: impl FnMut(f64) -> Result<f64>, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Steady solution on the requested branch.
///
/// The wall value `g(u0)` of the integral-curve family is negative at
/// `u0 = 0`, rises to a single maximum and falls again; the lower branch is
/// its smaller root. Returns `NoSolution` when the maximum stays negative.
pub fn solve_steady_branch(regime: &FlowRegime, lambda: f64, branch: Branch) -> Result<SteadySolution> {
    check_args(lambda, 0.0)?;
    regime.validate()?;
    if lambda == 0.0 {
        let mut profile = shoot_steady(regime, 0.0, 0.0)?.profile;
        profile.branch = branch;
        return Ok(SteadySolution::Found(profile));
    }
    let g = |u0: f64| u_wall(regime, lambda, u0);

    // Geometric scan in u0 until the wall value turns positive or starts to fall.
    let mut xs = vec![0.0];
    let mut gs = vec![g(0.0)?];
    let mut x = (1e-3 * lambda * lambda).min(1e-2);
    let (mut lo, mut peak) = (None, None);
    while x <= U0_MAX {
        let gx = g(x)?;
        let prev = *gs.last().unwrap();
        xs.push(x);
        gs.push(gx);
        if gx > 0.0 {
            lo = Some(xs.len() - 2);
            break;
        }
        if gx < prev {
            peak = Some(xs.len() - 1);
            break;
        }
        x *= 2.0;
    }

    let (root_lo, root_hi, peak_at) = match (lo, peak) {
        (Some(k), _) => {
            if branch == Branch::Lower {
                (xs[k], xs[k + 1], None)
            } else {
                let (xm, _) = golden_max(g, xs[k], upper_scan_end(&g, xs[k + 1])?, 1e-10)?;
                (xs[k], xm, Some(xm))
            }
        }
        (None, Some(k)) => {
            let a = if k >= 2 { xs[k - 2] } else { 0.0 };
            let (xm, gm) = golden_max(g, a, xs[k], 1e-12)?;
            if gm.abs() <= CRITICAL_TOL {
                return Err(Error::AtCriticality { lambda, lo: a, hi: xs[k] });
            }
            if gm < 0.0 {
                return Ok(SteadySolution::NoSolution { max_wall: gm });
            }
            (a, xm, Some(xm))
        }
        (None, None) => return Ok(SteadySolution::NoSolution { max_wall: *gs.last().unwrap() }),
    };

    let u0 = match branch {
        Branch::Lower => brent(|u| g(u).unwrap_or(f64::NAN), root_lo, root_hi, 1e-13)?,
        Branch::Upper => {
            let start = peak_at.unwrap_or(root_hi);
            let mut hi = start + 1.0;
            while g(hi)? > 0.0 {
                hi = start + 2.0 * (hi - start);
                if hi > U0_MAX {
                    return Err(Error::RootFinding("upper branch beyond the u0 scan limit".into()));
                }
            }
            brent(|u| g(u).unwrap_or(f64::NAN), start, hi, 1e-13)?
        }
    };
    let mut profile = shoot_steady(regime, lambda, u0)?.profile;
    *profile.u_values.last_mut().unwrap() = 0.0;
    profile.branch = branch;
    Ok(SteadySolution::Found(profile))
}

/// Extends a scan past the first positive wall value until `g` decreases,
/// giving a right end that encloses the maximum.
fn upper_scan_end(g: &impl Fn(f64) -> Result<f64>, start: f64) -> Result<f64> {
    let mut x = start;
    let mut gx = g(x)?;
    loop {
        let next = 2.0 * x;
        let gn = g(next)?;
        if gn < gx || next > U0_MAX {
            return Ok(next);
        }
        x = next;
        gx = gn;
    }
}

/// Lower-branch steady solution with `u(1) = 0`.
pub fn solve_steady(regime: &FlowRegime, lambda: f64) -> Result<SteadySolution> {
    solve_steady_branch(regime, lambda, Branch::Lower)
}

/// The `lambda` whose integral curve with axis value `u0` vanishes at the wall.
pub fn lambda_of_u0(regime: &FlowRegime, u0: f64) -> Result<f64> {
    if !(u0.is_finite() && u0 > 0.0) {
        return invalid(format!("u0 must be positive, got {u0}"));
    }
    let mut hi = 1.0;
    while u_wall(regime, hi, u0)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::RootFinding(format!("no wall crossing for u0 = {u0}")));
        }
    }
    let lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    brent(|l| u_wall(regime, l, u0).unwrap_or(f64::NAN), lo, hi, 1e-14)
}

const ENVELOPE_SAMPLES: usize = 64;
const ENVELOPE_RANGE: (f64, f64) = (0.1, 10.0);

/// Critical `lambda` as the maximum of `lambda(u0)` over the family of
/// axis values: a log-spaced scan followed by golden-section refinement.
pub fn critical_lambda(regime: &FlowRegime, exec: Execution) -> Result<EnvelopeResult> {
    regime.validate()?;
    let (mut lo, mut hi) = ENVELOPE_RANGE;
    for _ in 0..4 {
        let u0s: Vec<f64> = (0..ENVELOPE_SAMPLES)
            .map(|k| lo * (hi / lo).powf(k as f64 / (ENVELOPE_SAMPLES - 1) as f64))
            .collect();
        let lambdas: Vec<f64> = exec
            .map(&u0s, |&u0| lambda_of_u0(regime, u0))
            .into_iter()
            .collect::<Result<_>>()?;
        let k = first_fold(&lambdas)?;
        if k == 0 {
            lo /= 10.0;
            continue;
        }
        if k == ENVELOPE_SAMPLES - 1 {
            hi *= 10.0;
            continue;
        }
        let (u_star, lambda_cr) = golden_max(|u| lambda_of_u0(regime, u), u0s[k - 1], u0s[k + 1], 1e-6)?;
        let curve = u0s.into_iter().zip(lambdas).collect();
        return Ok(EnvelopeResult { lambda_cr, u0_at_cr: u_star, curve });
    }
    Err(Error::NonUnimodal(format!("maximum stays on the scan boundary of [{lo}, {hi}]")))
}

/// Index of the first local maximum of the sampled `lambda(u0)` curve.
///
/// Past the fold the turbulent curve oscillates with decaying amplitude about
/// the value of the singular axis solution `u = -ln(lambda^2 rho)`, so only
/// the part beyond the first fold that rises above it is treated as an error.
fn first_fold(values: &[f64]) -> Result<usize> {
    let k = values
        .windows(2)
        .position(|w| w[1] < w[0] * (1.0 - 1e-12))
        .unwrap_or(values.len() - 1);
    if let Some(j) = values[k + 1..].iter().position(|&v| v > values[k]) {
        return Err(Error::NonUnimodal(format!(
            "sample {} exceeds the first fold at sample {k}",
            k + 1 + j
        )));
    }
    Ok(k)
}
