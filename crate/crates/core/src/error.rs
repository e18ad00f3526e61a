use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The steady radial integrator could not advance.
    #[error("steady integration failed near rho = {rho:.6e}: {reason}")]
    Stiffness { rho: f64, reason: String },

    /// `lambda` sits on the fold of the steady problem within tolerance, so the
    /// lower and upper branches cannot be separated.
    #[error("lambda = {lambda} is critical within tolerance; u0 bracket [{lo}, {hi}]")]
    AtCriticality { lambda: f64, lo: f64, hi: f64 },

    #[error("lambda(u0) curve is not unimodal: {0}")]
    NonUnimodal(String),

    #[error("no convergent solution for lambda = {lambda} even at zeta0 = {zeta0:e}")]
    TooSupercritical { lambda: f64, zeta0: f64 },

    #[error("non-monotone existence pattern in lambda: {0}")]
    NonMonotone(String),

    #[error("root finding failed: {0}")]
    RootFinding(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
