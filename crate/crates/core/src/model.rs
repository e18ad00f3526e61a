//! Dimensionless formulation: flow regimes, coefficient functions, the
//! turbulent power-law closure and conversions between dimensional gas data
//! and the dimensionless problem.
//!
//! All quantities are SI. The pre-exponential factor `sigma(T0)` follows the
//! convention that `Q * sigma(T0) / c` has units of K/s, which makes the
//! reaction-conduction length `ell` a length.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Prandtl number used when a conversion needs one and no gas data supplies it.
pub const DEFAULT_PRANDTL: f64 = 0.7;

/// Reynolds numbers outside this window are accepted with a warning: the
/// power-law profile describes developed turbulence only.
pub const TURBULENT_RE_WINDOW: (f64, f64) = (2000.0, 1e9);

/// Power-law exponent of the turbulent velocity profile, `3 / (2 ln Re)`.
pub fn alpha_of_re(re: f64) -> Result<f64> {
    if !(re.is_finite() && re > 1.0) {
        return invalid(format!("Reynolds number must exceed 1, got {re}"));
    }
    Ok(3.0 / (2.0 * re.ln()))
}

/// Prefactor of the power-law profile, `(sqrt(3) + 5 alpha) / (2 alpha)`.
pub fn c_of_alpha(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return invalid(format!("power-law exponent must be positive, got {alpha}"));
    }
    Ok((3f64.sqrt() + 5.0 * alpha) / (2.0 * alpha))
}

/// Turbulent closure constants derived from a Reynolds number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Turbulence {
    pub re: f64,
    pub alpha: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FlowRegime {
    Laminar,
    Turbulent(Turbulence),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeKind {
    Laminar,
    Turbulent,
}

impl FlowRegime {
    pub fn turbulent(re: f64) -> Result<Self> {
        let alpha = alpha_of_re(re)?;
        let c = c_of_alpha(alpha)?;
        let (lo, hi) = TURBULENT_RE_WINDOW;
        if !(lo..=hi).contains(&re) {
            log::warn!("Re = {re:e} is outside the developed-turbulence window [{lo:e}, {hi:e}]");
        }
        Ok(FlowRegime::Turbulent(Turbulence { re, alpha, c }))
    }

    pub fn kind(&self) -> RegimeKind {
        match self {
            FlowRegime::Laminar => RegimeKind::Laminar,
            FlowRegime::Turbulent(_) => RegimeKind::Turbulent,
        }
    }

    /// Power-law exponent, `None` for laminar flow.
    pub fn alpha(&self) -> Option<f64> {
        match self {
            FlowRegime::Laminar => None,
            FlowRegime::Turbulent(t) => Some(t.alpha),
        }
    }

    /// Checks that stored turbulent constants agree with their Reynolds number.
    pub fn validate(&self) -> Result<()> {
        if let FlowRegime::Turbulent(t) = self {
            let alpha = alpha_of_re(t.re)?;
            let c = c_of_alpha(alpha)?;
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
            if !close(t.alpha, alpha) || !close(t.c, c) {
                return invalid(format!(
                    "turbulent constants (alpha = {}, C = {}) inconsistent with Re = {}",
                    t.alpha, t.c, t.re
                ));
            }
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        match self {
            FlowRegime::Laminar => "laminar".to_string(),
            FlowRegime::Turbulent(t) => format!("turbulent(Re={:e})", t.re),
        }
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return invalid(format!("radius must lie in [0, 1], got {rho}"));
    }
    Ok(())
}

/// Normalized axial velocity `V(rho) = v / v_mean`: `2 (1 - rho^2)` for laminar
/// flow, `(1 - rho)^alpha` for the turbulent equation.
pub fn advection_coefficient(regime: &FlowRegime, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(match regime {
        FlowRegime::Laminar => 2.0 * (1.0 - rho * rho),
        FlowRegime::Turbulent(t) => (1.0 - rho).powf(t.alpha),
    })
}

/// Coefficient multiplying `d/dzeta u` in the evolution equation that the
/// solvers integrate. For laminar flow `zeta` is rescaled by 2 so that the
/// coefficient is `1 - rho^2`; the turbulent coefficient is unchanged.
pub fn axial_transport_coefficient(regime: &FlowRegime, rho: f64) -> f64 {
    match regime {
        FlowRegime::Laminar => 1.0 - rho * rho,
        FlowRegime::Turbulent(t) => (1.0 - rho).powf(t.alpha),
    }
}

/// Radial flux weight `a(rho)` inside `(1/rho) d/drho [a(rho) du/drho]`.
pub fn diffusion_weight(regime: &FlowRegime, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok(flux_weight(regime, rho))
}

pub(crate) fn flux_weight(regime: &FlowRegime, rho: f64) -> f64 {
    match regime {
        FlowRegime::Laminar => rho,
        FlowRegime::Turbulent(t) => rho * rho * (1.0 - rho).powf(1.0 - t.alpha),
    }
}

/// Friction Reynolds number `v_* d / nu0` consistent with the power-law
/// profile: integrating it over the cross-section gives
/// `Re = C 2^(1-alpha) / ((alpha+1)(alpha+2)) * W^(1+alpha)`, which is
/// inverted in closed form.
pub fn friction_reynolds(re: f64) -> Result<f64> {
    let alpha = alpha_of_re(re)?;
    let c = c_of_alpha(alpha)?;
    Ok(friction_reynolds_with(re, alpha, c))
}

pub(crate) fn friction_reynolds_with(re: f64, alpha: f64, c: f64) -> f64 {
    // In logarithms: 2^(1-alpha) underflows for Re close to 1.
    let ln_k = c.ln() + (1.0 - alpha) * std::f64::consts::LN_2 - (alpha + 1.0).ln() - (alpha + 2.0).ln();
    ((re.ln() - ln_k) / (1.0 + alpha)).exp()
}

/// Radial inlet profile `u(rho, 0)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub enum Inlet {
    #[default]
    Zero,
    /// Piecewise-linear profile through `(rho, u)` samples covering `[0, 1]`.
    Tabulated { rho: Vec<f64>, u: Vec<f64> },
}

impl Inlet {
    pub fn tabulated(rho: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if rho.len() != u.len() || rho.len() < 2 {
            return invalid("inlet profile needs at least two (rho, u) samples of equal length");
        }
        if rho[0] != 0.0 || *rho.last().unwrap() != 1.0 {
            return invalid("inlet profile must span rho = 0 to rho = 1");
        }
        if rho.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("inlet radii must be strictly increasing");
        }
        if u.last().unwrap().abs() > 1e-12 {
            return invalid("inlet profile must vanish at the wall");
        }
        if u.iter().any(|v| !v.is_finite()) {
            return invalid("inlet profile must be finite");
        }
        Ok(Inlet::Tabulated { rho, u })
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Inlet::Zero => 0.0,
            Inlet::Tabulated { rho, u } => {
                let k = rho.partition_point(|&x| x <= r).clamp(1, rho.len() - 1);
                let t = (r - rho[k - 1]) / (rho[k] - rho[k - 1]);
                u[k - 1] + t * (u[k] - u[k - 1])
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Inlet::Zero)
    }
}

/// A dimensionless problem instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipeProblem {
    pub lambda: f64,
    pub regime: FlowRegime,
    pub inlet: Inlet,
}

impl PipeProblem {
    pub fn new(lambda: f64, regime: FlowRegime) -> Result<Self> {
        let p = PipeProblem { lambda, regime, inlet: Inlet::Zero };
        p.validate()?;
        Ok(p)
    }

    pub fn with_inlet(mut self, inlet: Inlet) -> Self {
        self.inlet = inlet;
        self
    }

    /// `lambda = 0` is admitted: it is the source-free limit used in tests.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return invalid(format!("lambda must be finite and nonnegative, got {}", self.lambda));
        }
        self.regime.validate()
    }
}

/// Dimensional gas and reaction properties (SI).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasSpec {
    /// Volumetric heat capacity, J m^-3 K^-1.
    pub heat_capacity: f64,
    /// Molecular temperature diffusivity, m^2/s.
    pub molecular_diffusivity: f64,
    /// Molecular kinematic viscosity, m^2/s.
    pub kinematic_viscosity: f64,
    pub heat_of_reaction: f64,
    pub preexponential: f64,
    /// J/mol.
    pub activation_energy: f64,
    /// J/(mol K).
    pub gas_constant: f64,
    /// K.
    pub wall_temperature: f64,
    /// m.
    pub pipe_radius: f64,
    /// Volumetric discharge, m^3/s.
    pub discharge: f64,
    /// Ratio of turbulent temperature diffusivity to turbulent viscosity.
    pub diffusivity_factor: f64,
}

impl GasSpec {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("heat_capacity", self.heat_capacity),
            ("molecular_diffusivity", self.molecular_diffusivity),
            ("kinematic_viscosity", self.kinematic_viscosity),
            ("heat_of_reaction", self.heat_of_reaction),
            ("preexponential", self.preexponential),
            ("activation_energy", self.activation_energy),
            ("gas_constant", self.gas_constant),
            ("wall_temperature", self.wall_temperature),
            ("pipe_radius", self.pipe_radius),
            ("discharge", self.discharge),
            ("diffusivity_factor", self.diffusivity_factor),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return invalid(format!("{name} must be positive and finite, got {v}"));
            }
        }
        let phi = self.phi();
        if phi <= 1.0 {
            return invalid(format!("E/(R T0) = {phi} must exceed 1"));
        }
        if phi < 10.0 {
            log::warn!("E/(R T0) = {phi:.3} is small for the high-activation-energy approximation");
        }
        Ok(())
    }

    /// Dimensionless activation energy `E / (R T0)`.
    pub fn phi(&self) -> f64 {
        self.activation_energy / (self.gas_constant * self.wall_temperature)
    }

    pub fn prandtl(&self) -> f64 {
        self.kinematic_viscosity / self.molecular_diffusivity
    }

    pub fn mean_velocity(&self) -> f64 {
        self.discharge / (std::f64::consts::PI * self.pipe_radius.powi(2))
    }

    /// `Re = 2 v_mean r0 / nu0`.
    pub fn reynolds(&self) -> f64 {
        2.0 * self.mean_velocity() * self.pipe_radius / self.kinematic_viscosity
    }

    /// Squared laminar reaction-conduction length,
    /// `e^phi kappa0 T0 c / (Q phi sigma(T0))`.
    pub fn laminar_length_sq(&self) -> f64 {
        let phi = self.phi();
        phi.exp() * self.molecular_diffusivity * self.wall_temperature * self.heat_capacity
            / (self.heat_of_reaction * phi * self.preexponential)
    }

    pub fn regime(&self, kind: RegimeKind) -> Result<FlowRegime> {
        match kind {
            RegimeKind::Laminar => Ok(FlowRegime::Laminar),
            RegimeKind::Turbulent => FlowRegime::turbulent(self.reynolds()),
        }
    }
}

/// Factor turning the laminar `ell^2` into the turbulent one:
/// `Pr A / (2^(1-alpha) alpha C) * (v_* d / nu0)^(1-alpha)`.
pub fn turbulent_length_factor(t: &Turbulence, prandtl: f64, diffusivity_factor: f64) -> f64 {
    let w = friction_reynolds_with(t.re, t.alpha, t.c);
    prandtl * diffusivity_factor / (2f64.powf(1.0 - t.alpha) * t.alpha * t.c) * w.powf(1.0 - t.alpha)
}

/// Dimensionless radius `lambda = r0 / ell` together with `ell`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaScale {
    pub lambda: f64,
    pub ell: f64,
}

pub fn lambda_from_gas(gas: &GasSpec, kind: RegimeKind) -> Result<LambdaScale> {
    gas.validate()?;
    let mut ell_sq = gas.laminar_length_sq();
    if let FlowRegime::Turbulent(t) = gas.regime(kind)? {
        ell_sq *= turbulent_length_factor(&t, gas.prandtl(), gas.diffusivity_factor);
    }
    if !(ell_sq.is_finite() && ell_sq > 0.0) {
        return Err(Error::InvalidInput(format!("reaction length squared is {ell_sq}")));
    }
    let ell = ell_sq.sqrt();
    Ok(LambdaScale { lambda: gas.pipe_radius / ell, ell })
}

/// Laminar critical length `z0 = r0 Re Pr zeta0`.
pub fn laminar_critical_length(r0: f64, re: f64, prandtl: f64, zeta0: f64) -> f64 {
    r0 * re * prandtl * zeta0
}

/// Turbulent critical length
/// `z0 = r0 alpha C^2 (v_* d / nu0)^(2 alpha) zeta0 / (2^alpha A)`.
pub fn turbulent_critical_length(r0: f64, t: &Turbulence, friction_re: f64, diffusivity_factor: f64, zeta0: f64) -> f64 {
    r0 * t.alpha * t.c * t.c * friction_re.powf(2.0 * t.alpha) * zeta0
        / (2f64.powf(t.alpha) * diffusivity_factor)
}

/// Dimensional safe length for a gas and a dimensionless critical length.
/// For turbulent flow the regime's own Reynolds number is used.
pub fn dimensional_critical_length(gas: &GasSpec, regime: &FlowRegime, zeta0: f64) -> Result<f64> {
    gas.validate()?;
    if !(zeta0.is_finite() && zeta0 >= 0.0) {
        return invalid(format!("zeta0 must be finite and nonnegative, got {zeta0}"));
    }
    Ok(match regime {
        FlowRegime::Laminar => laminar_critical_length(gas.pipe_radius, gas.reynolds(), gas.prandtl(), zeta0),
        FlowRegime::Turbulent(t) => {
            let w = friction_reynolds_with(t.re, t.alpha, t.c);
            turbulent_critical_length(gas.pipe_radius, t, w, gas.diffusivity_factor, zeta0)
        }
    })
}
