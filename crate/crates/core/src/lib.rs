//! Critical conditions for the thermal explosion of a chemically active gas
//! flowing through a cylindrical pipe with heat-conducting walls.
//!
//! The dimensionless excess temperature `u(rho, zeta)` obeys an
//! advection-diffusion-reaction equation with an Arrhenius (`e^u`) source.
//! Below the critical radius parameter `lambda_cr` a slow-reaction regime is
//! reached for any pipe length; above it the solution only exists up to a
//! finite dimensionless length `zeta0(lambda)`, the safe reactor length.
//!
//! Module map:
//! - [`model`]: flow regimes, coefficient functions, dimensional conversions.
//! - [`steady`]: radial steady problem, shooting, and the envelope giving `lambda_cr`.
//! - [`grid`], [`pde`], [`march`]: discretization on the fixed `(rho, xi)` domain,
//!   layer-wise Newton solver, and an adaptive marching cross-check.
//! - [`criticality`]: existence-boundary search in `zeta0` and `lambda`.
//! - [`scaling`]: power-law tail fits and Reynolds-number collapse.

pub mod criticality;
pub mod error;
pub mod exec;
pub mod grid;
pub mod io;
pub mod march;
pub mod model;
pub mod pde;
pub mod scaling;
pub mod steady;
mod tridiag;

pub use criticality::{
    find_zeta0, find_zeta0_with_field, lambda_cr_consistency, sweep_boundary, BoundaryCurve, CriticalityConsistency,
    ExistencePoint, SearchOptions, ZetaSearch,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{Field2D, GridSpec, Stretch};
pub use march::{march_oracle, MarchOptions, MarchOutcome};
pub use model::{FlowRegime, GasSpec, Inlet, PipeProblem, RegimeKind, Turbulence};
pub use pde::{discretize_residual, newton_solve, Failure, NewtonOptions, SolveOutcome};
pub use scaling::{collapse_spread, fit_power_law, PowerLawFit};
pub use steady::{critical_lambda, shoot_steady, solve_steady, Branch, EnvelopeResult, SteadyProfile, SteadySolution};
