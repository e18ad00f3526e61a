//! Existence boundary of the evolution problem.
//!
//! A pair `(lambda, zeta0)` lies inside the existence region when the
//! layer-wise Newton solve over the whole domain converges. For fixed
//! `lambda` the critical length is bracketed by continuation in `zeta0`
//! (doubling, each solve warm-started from the last convergent field) and
//! refined by geometric bisection.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::grid::{Field2D, GridSpec};
use crate::model::{FlowRegime, PipeProblem};
use crate::pde::{newton_solve_with, NewtonOptions, SolveOutcome};
use crate::steady::critical_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Target for `zeta0_hi / zeta0_lo - 1`.
    pub rel_tol: f64,
    pub zeta_start: f64,
    /// Convergence at this length counts as existence for every length.
    pub zeta_cap: f64,
    /// Smallest length tried when the start already diverges.
    pub zeta_floor: f64,
    /// Re-check late divergences with twice the layers before accepting them.
    pub refine_late_divergence: bool,
    pub newton: NewtonOptions,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            rel_tol: 1e-3,
            zeta_start: 1e-4,
            zeta_cap: 1e3,
            zeta_floor: 1e-12,
            refine_late_divergence: true,
            newton: NewtonOptions::default(),
        }
    }
}

impl SearchOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 1e-4 && self.rel_tol <= 0.1) {
            return invalid(format!("rel_tol must lie in (1e-4, 0.1], got {}", self.rel_tol));
        }
        if !(self.zeta_floor > 0.0 && self.zeta_floor <= self.zeta_start && self.zeta_start < self.zeta_cap) {
            return invalid("need 0 < zeta_floor <= zeta_start < zeta_cap");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistencePoint {
    pub lambda: f64,
    pub zeta0: f64,
    /// Largest length found convergent.
    pub zeta0_lo: f64,
    /// Smallest length found divergent.
    pub zeta0_hi: f64,
    pub grid: GridSpec,
    /// Layer count at which the divergence at `zeta0_hi` was confirmed.
    pub n_xi_divergent: usize,
    pub regime: FlowRegime,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ZetaSearch {
    Bounded(ExistencePoint),
    /// Convergent up to the cap.
    Unbounded { zeta_cap: f64 },
}

impl ZetaSearch {
    pub fn point(&self) -> Option<&ExistencePoint> {
        match self {
            ZetaSearch::Bounded(p) => Some(p),
            ZetaSearch::Unbounded { .. } => None,
        }
    }
}

enum Trial {
    Convergent(Field2D),
    Divergent { n_xi: usize },
}

fn classify(
    problem: &PipeProblem,
    grid: &GridSpec,
    zeta0: f64,
    warm: Option<&Field2D>,
    opts: &SearchOptions,
) -> Result<Trial> {
    match newton_solve_with(problem, grid, zeta0, warm, &opts.newton)? {
        SolveOutcome::Converged { field, .. } => Ok(Trial::Convergent(field)),
        SolveOutcome::Diverged { last_good_layer, .. } => {
            // A failure in the last tenth of the domain may be a resolution
            // artefact of the xi steps; confirm it once with twice the layers.
            if opts.refine_late_divergence && last_good_layer * 10 > grid.n_xi * 9 {
                let fine = grid.with_n_xi(2 * grid.n_xi);
                return Ok(match newton_solve_with(problem, &fine, zeta0, warm, &opts.newton)? {
                    SolveOutcome::Converged { field, .. } => Trial::Convergent(field),
                    SolveOutcome::Diverged { .. } => Trial::Divergent { n_xi: fine.n_xi },
                });
            }
            Ok(Trial::Divergent { n_xi: grid.n_xi })
        }
    }
}

/// Whether the solution over `[0, zeta0]` exists, using the same
/// classification (including the late-divergence refinement) as the search.
pub fn exists_at(problem: &PipeProblem, grid: &GridSpec, zeta0: f64, opts: &SearchOptions) -> Result<bool> {
    Ok(matches!(classify(problem, grid, zeta0, None, opts)?, Trial::Convergent(_)))
}

pub fn find_zeta0(problem: &PipeProblem, grid: &GridSpec, opts: &SearchOptions) -> Result<ZetaSearch> {
    search(problem, grid, opts, false).map(|(s, _)| s)
}

/// [`find_zeta0`] together with the field of the longest convergent solve,
/// which has twice the layers of `grid` when that solve needed refinement.
pub fn find_zeta0_with_field(problem: &PipeProblem, grid: &GridSpec, opts: &SearchOptions) -> Result<(ZetaSearch, Field2D)> {
    search(problem, grid, opts, false)
}

/// Doubling phase only: `true` when the solution reaches the cap.
fn reaches_cap(problem: &PipeProblem, grid: &GridSpec, opts: &SearchOptions) -> Result<bool> {
    Ok(matches!(search(problem, grid, opts, true)?.0, ZetaSearch::Unbounded { .. }))
}

fn search(problem: &PipeProblem, grid: &GridSpec, opts: &SearchOptions, bracket_only: bool) -> Result<(ZetaSearch, Field2D)> {
    problem.validate()?;
    grid.validate()?;
    opts.validate()?;
    if problem.lambda <= 0.0 {
        return invalid("lambda must be positive for an existence search");
    }

    let mut lo = opts.zeta_start;
    let mut hi: Option<(f64, usize)> = None;
    let mut last = loop {
        match classify(problem, grid, lo, None, opts)? {
            Trial::Convergent(f) => break f,
            Trial::Divergent { n_xi } => {
                hi = Some((lo, n_xi));
                lo *= 0.5;
                if lo < opts.zeta_floor {
                    return Err(Error::TooSupercritical { lambda: problem.lambda, zeta0: opts.zeta_floor });
                }
            }
        }
    };

    while hi.is_none() {
        if lo >= opts.zeta_cap {
            return Ok((ZetaSearch::Unbounded { zeta_cap: opts.zeta_cap }, last));
        }
        let next = (2.0 * lo).min(opts.zeta_cap);
        match classify(problem, grid, next, Some(&last), opts)? {
            Trial::Convergent(f) => {
                lo = next;
                last = f;
            }
            Trial::Divergent { n_xi } => hi = Some((next, n_xi)),
        }
    }
    let (mut hi, mut n_xi_div) = hi.unwrap();

    if !bracket_only {
        while hi / lo - 1.0 > opts.rel_tol {
            let mid = (lo * hi).sqrt();
            match classify(problem, grid, mid, Some(&last), opts)? {
                Trial::Convergent(f) => {
                    lo = mid;
                    last = f;
                }
                Trial::Divergent { n_xi } => {
                    hi = mid;
                    n_xi_div = n_xi;
                }
            }
        }
    }
    let point = ExistencePoint {
        lambda: problem.lambda,
        zeta0: (lo * hi).sqrt(),
        zeta0_lo: lo,
        zeta0_hi: hi,
        grid: *grid,
        n_xi_divergent: n_xi_div,
        regime: problem.regime,
    };
    Ok((ZetaSearch::Bounded(point), last))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCurve {
    /// Bounded points sorted by `lambda`.
    pub points: Vec<ExistencePoint>,
    pub regime: FlowRegime,
    pub grid: GridSpec,
    pub rel_tol: f64,
    /// `lambda` values that stayed convergent up to the cap.
    pub unbounded: Vec<f64>,
    /// `lambda` values whose search failed, with the diagnostic.
    pub failures: Vec<(f64, String)>,
}

impl BoundaryCurve {
    pub fn lambdas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.lambda).collect()
    }

    pub fn zeta0s(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.zeta0).collect()
    }
}

/// Existence boundary at each `lambda`. Sequential sweeps seed each search
/// with the neighbour's convergent length; parallel sweeps search each point
/// from the default start. Results are ordered by `lambda` either way.
pub fn sweep_boundary(
    regime: &FlowRegime,
    lambdas: &[f64],
    grid: &GridSpec,
    opts: &SearchOptions,
    exec: Execution,
) -> Result<BoundaryCurve> {
    regime.validate()?;
    grid.validate()?;
    opts.validate()?;
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("lambdas must be strictly increasing");
    }
    let run = |lambda: f64, start: f64| -> Result<ZetaSearch> {
        let problem = PipeProblem::new(lambda, *regime)?;
        let o = SearchOptions { zeta_start: start.clamp(opts.zeta_floor, opts.zeta_cap * 0.5), ..*opts };
        find_zeta0(&problem, grid, &o)
    };
    let results: Vec<Result<ZetaSearch>> = if exec.is_parallel() {
        exec.map(lambdas, |&l| run(l, opts.zeta_start))
    } else {
        let mut out = Vec::with_capacity(lambdas.len());
        let mut seed = opts.zeta_start;
        for &l in lambdas {
            let r = run(l, seed);
            if let Ok(ZetaSearch::Bounded(p)) = &r {
                seed = p.zeta0_lo;
            }
            out.push(r);
        }
        out
    };

    let mut curve = BoundaryCurve {
        points: Vec::new(),
        regime: *regime,
        grid: *grid,
        rel_tol: opts.rel_tol,
        unbounded: Vec::new(),
        failures: Vec::new(),
    };
    for (&lambda, r) in lambdas.iter().zip(results) {
        match r {
            Ok(ZetaSearch::Bounded(p)) => curve.points.push(p),
            Ok(ZetaSearch::Unbounded { .. }) => curve.unbounded.push(lambda),
            Err(e) => {
                log::warn!("lambda = {lambda}: {e}");
                curve.failures.push((lambda, e.to_string()));
            }
        }
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalityConsistency {
    pub lambda_cr_pde: f64,
    pub lambda_cr_steady: f64,
    pub rel_gap: f64,
}

/// Relative width to which the PDE-side critical `lambda` is bisected.
pub const LAMBDA_CR_REL_TOL: f64 = 1e-4;

/// Critical `lambda` from the evolution problem (largest `lambda` whose
/// solution reaches the length cap) compared with the steady envelope.
pub fn lambda_cr_consistency(
    regime: &FlowRegime,
    grid: &GridSpec,
    opts: &SearchOptions,
    exec: Execution,
) -> Result<CriticalityConsistency> {
    let steady = critical_lambda(regime, exec)?.lambda_cr;
    let reaches = |lambda: f64| -> Result<bool> { reaches_cap(&PipeProblem::new(lambda, *regime)?, grid, opts) };

    let mut lo = 0.95 * steady;
    let mut hi = 1.05 * steady;
    let mut tries = 0;
    while !reaches(lo)? {
        lo *= 0.9;
        tries += 1;
        if tries > 5 {
            return Err(Error::NonMonotone(format!("no unbounded solution found down to lambda = {lo}")));
        }
    }
    tries = 0;
    while reaches(hi)? {
        hi *= 1.1;
        tries += 1;
        if tries > 5 {
            return Err(Error::NonMonotone(format!("still unbounded at lambda = {hi}")));
        }
    }
    while hi / lo - 1.0 > LAMBDA_CR_REL_TOL {
        let mid = 0.5 * (lo + hi);
        if reaches(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda_cr_pde = 0.5 * (lo + hi);
    Ok(CriticalityConsistency {
        lambda_cr_pde,
        lambda_cr_steady: steady,
        rel_gap: (lambda_cr_pde - steady).abs() / steady,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> GridSpec {
        GridSpec::uniform(64, 64).unwrap()
    }

    #[test]
    fn subcritical_is_unbounded() {
        let p = PipeProblem::new(1.0, FlowRegime::Laminar).unwrap();
        assert_eq!(find_zeta0(&p, &coarse(), &SearchOptions::default()).unwrap(), ZetaSearch::Unbounded { zeta_cap: 1e3 });
    }

    #[test]
    fn bracket_is_tight_and_ordered() {
        let p = PipeProblem::new(3.0, FlowRegime::Laminar).unwrap();
        let opts = SearchOptions::default();
        let point = find_zeta0(&p, &coarse(), &opts).unwrap().point().cloned().unwrap();
        assert!(point.zeta0_lo < point.zeta0 && point.zeta0 <= point.zeta0_hi);
        assert!(point.zeta0_hi / point.zeta0_lo - 1.0 <= opts.rel_tol);
    }

    #[test]
    fn empty_sweep() {
        let c = sweep_boundary(&FlowRegime::Laminar, &[], &coarse(), &SearchOptions::default(), Execution::Sequential).unwrap();
        assert!(c.points.is_empty() && c.failures.is_empty());
    }

    #[test]
    fn options_are_validated() {
        let bad = SearchOptions { rel_tol: 0.5, ..SearchOptions::default() };
        let p = PipeProblem::new(3.0, FlowRegime::Laminar).unwrap();
        assert!(find_zeta0(&p, &coarse(), &bad).is_err());
        assert!(sweep_boundary(&FlowRegime::Laminar, &[3.0, 2.0], &coarse(), &SearchOptions::default(), Execution::Sequential).is_err());
    }
}
