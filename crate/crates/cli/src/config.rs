//! Line-oriented `key = value` run configuration. Command-line flags use the
//! same keys and override the file; `THERMX_JOBS` supplies `jobs` when
//! neither does.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thermx_core::scaling::Weighting;
use thermx_core::{FlowRegime, GasSpec, GridSpec, NewtonOptions, SearchOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("{origin}: {msg}")]
    Bad { origin: Origin, msg: String },
    #[error("missing `{0}`")]
    Missing(&'static str),
}

/// Where a raw value came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Line { file: Option<String>, line: usize, key: String },
    Flag(String),
    Env(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line { file: Some(p), line, key } => write!(f, "{p}:{line}: key `{key}`"),
            Origin::Line { file: None, line, key } => write!(f, "line {line}: key `{key}`"),
            Origin::Flag(k) if k == "command" => write!(f, "command argument"),
            Origin::Flag(k) => write!(f, "flag --{}", k.replace('_', "-")),
            Origin::Env(v) => write!(f, "environment variable {v}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    LambdaCr,
    Zeta0,
    Sweep,
    Fit,
    Collapse,
    Dimensional,
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "steady" => Command::Steady,
            "lambda-cr" => Command::LambdaCr,
            "zeta0" => Command::Zeta0,
            "sweep" => Command::Sweep,
            "fit" => Command::Fit,
            "collapse" => Command::Collapse,
            "dimensional" => Command::Dimensional,
            _ => return Err(format!("unknown command `{s}`")),
        })
    }
}

pub const KEYS: &[&str] = &[
    "command",
    "regime",
    "re",
    "lambda",
    "lambda_start",
    "lambda_stop",
    "lambda_count",
    "lambda_min",
    "weighting",
    "n_rho",
    "n_xi",
    "rel_tol",
    "zeta_start",
    "zeta_cap",
    "zeta_floor",
    "zeta0",
    "newton_tol",
    "jobs",
    "in",
    "out",
    "field_out",
    "gas",
];

pub const GAS_KEYS: &[&str] = &[
    "heat_capacity",
    "molecular_diffusivity",
    "kinematic_viscosity",
    "heat_of_reaction",
    "preexponential",
    "activation_energy",
    "gas_constant",
    "wall_temperature",
    "pipe_radius",
    "discharge",
    "diffusivity_factor",
];

#[derive(Debug, Clone, PartialEq)]
struct RawValue {
    value: String,
    origin: Origin,
}

/// Unvalidated key/value pairs, merged from a file, flags and the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, RawValue>,
}

fn parse_lines(text: &str, file: Option<&str>, allowed: &[&str]) -> Result<BTreeMap<String, RawValue>, ConfigError> {
    let mut values = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let origin = |key: &str| Origin::Line { file: file.map(str::to_string), line, key: key.to_string() };
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Bad { origin: origin(content), msg: "expected `key = value`".into() });
        };
        let key = key.trim();
        let value = value.trim();
        if !allowed.contains(&key) {
            return Err(ConfigError::Bad { origin: origin(key), msg: "unknown key".into() });
        }
        if value.is_empty() {
            return Err(ConfigError::Bad { origin: origin(key), msg: "empty value".into() });
        }
        if values.contains_key(key) {
            return Err(ConfigError::Bad { origin: origin(key), msg: "duplicate key".into() });
        }
        values.insert(key.to_string(), RawValue { value: value.to_string(), origin: origin(key) });
    }
    Ok(values)
}

impl RawConfig {
    pub fn parse(text: &str, file: Option<&str>) -> Result<Self, ConfigError> {
        Ok(RawConfig { values: parse_lines(text, file, KEYS)? })
    }

    /// Sets `key` from a command-line flag, replacing any file value.
    pub fn set_flag(&mut self, key: &str, value: impl Into<String>) {
        debug_assert!(KEYS.contains(&key), "{key}");
        self.values.insert(key.to_string(), RawValue { value: value.into(), origin: Origin::Flag(key.to_string()) });
    }

    /// Uses the environment value for `jobs` unless the key is already set.
    pub fn jobs_fallback(&mut self, env_value: Option<String>) {
        if let Some(v) = env_value {
            self.values
                .entry("jobs".to_string())
                .or_insert(RawValue { value: v, origin: Origin::Env("THERMX_JOBS".into()) });
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<(T, &Origin)>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.values.get(key) {
            None => Ok(None),
            Some(rv) => rv
                .value
                .parse::<T>()
                .map(|v| Some((v, &rv.origin)))
                .map_err(|e| ConfigError::Bad { origin: rv.origin.clone(), msg: format!("`{}`: {e}", rv.value) }),
        }
    }

    fn number(&self, key: &str, check: impl Fn(f64) -> Result<(), String>) -> Result<Option<f64>, ConfigError> {
        match self.get::<f64>(key)? {
            None => Ok(None),
            Some((v, origin)) => {
                let ok = if v.is_finite() { check(v) } else { Err("must be finite".into()) };
                ok.map(|_| Some(v)).map_err(|msg| ConfigError::Bad { origin: origin.clone(), msg })
            }
        }
    }

    fn count(&self, key: &str, min: usize) -> Result<Option<usize>, ConfigError> {
        match self.get::<usize>(key)? {
            Some((v, origin)) if v < min => {
                Err(ConfigError::Bad { origin: origin.clone(), msg: format!("must be at least {min}, got {v}") })
            }
            other => Ok(other.map(|(v, _)| v)),
        }
    }

    fn bad(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        let origin = self.values.get(key).map(|rv| rv.origin.clone()).unwrap_or(Origin::Flag(key.to_string()));
        ConfigError::Bad { origin, msg: msg.into() }
    }

    /// Validates every present key and fills defaults.
    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let positive = |v: f64| if v > 0.0 { Ok(()) } else { Err(format!("must be positive, got {v}")) };

        let command = self
            .get::<String>("command")?
            .map(|(s, origin)| s.parse::<Command>().map_err(|msg| ConfigError::Bad { origin: origin.clone(), msg }))
            .transpose()?;

        let re = self.number("re", |v| if v > 1.0 { Ok(()) } else { Err(format!("must exceed 1, got {v}")) })?;
        let regime = match self.get::<String>("regime")?.map(|(s, _)| s) {
            None => None,
            Some(s) if s == "laminar" => {
                if re.is_some() {
                    return Err(self.bad("re", "only meaningful with `regime = turbulent`"));
                }
                Some(FlowRegime::Laminar)
            }
            Some(s) if s == "turbulent" => match re {
                Some(re) => Some(FlowRegime::turbulent(re).map_err(|e| self.bad("re", e.to_string()))?),
                None => None,
            },
            Some(s) => return Err(self.bad("regime", format!("expected `laminar` or `turbulent`, got `{s}`"))),
        };
        let regime_kind = self.get::<String>("regime")?.map(|(s, _)| s);

        let lambda = self.number("lambda", positive)?;
        let lambda_start = self.number("lambda_start", positive)?;
        let lambda_stop = self.number("lambda_stop", positive)?;
        let lambda_count = self.count("lambda_count", 2)?;
        if let (Some(a), Some(b)) = (lambda_start, lambda_stop) {
            if b <= a {
                return Err(self.bad("lambda_stop", format!("must exceed lambda_start = {a}, got {b}")));
            }
        }
        let lambda_min = self.number("lambda_min", |v| if v >= 0.0 { Ok(()) } else { Err(format!("must be nonnegative, got {v}")) })?;
        let weighting = match self.get::<String>("weighting")?.map(|(s, _)| s) {
            None => Weighting::Unweighted,
            Some(s) if s == "unweighted" => Weighting::Unweighted,
            Some(s) if s == "bracket" => Weighting::Bracket,
            Some(s) => return Err(self.bad("weighting", format!("expected `unweighted` or `bracket`, got `{s}`"))),
        };

        let n_rho = self.count("n_rho", thermx_core::grid::MIN_NODES)?.unwrap_or(DEFAULT_NODES);
        let n_xi = self.count("n_xi", thermx_core::grid::MIN_NODES)?.unwrap_or(DEFAULT_NODES);

        let defaults = SearchOptions::default();
        let search = SearchOptions {
            rel_tol: self.number("rel_tol", positive)?.unwrap_or(defaults.rel_tol),
            zeta_start: self.number("zeta_start", positive)?.unwrap_or(defaults.zeta_start),
            zeta_cap: self.number("zeta_cap", positive)?.unwrap_or(defaults.zeta_cap),
            zeta_floor: self.number("zeta_floor", positive)?.unwrap_or(defaults.zeta_floor),
            newton: NewtonOptions {
                tol: self.number("newton_tol", positive)?.unwrap_or(defaults.newton.tol),
                ..defaults.newton
            },
            ..defaults
        };
        search.validate().map_err(|e| ConfigError::Bad { origin: Origin::Flag("search options".into()), msg: e.to_string() })?;

        let zeta0 = self.number("zeta0", |v| if v >= 0.0 { Ok(()) } else { Err(format!("must be nonnegative, got {v}")) })?;
        let jobs = self.count("jobs", 1)?.unwrap_or(1);

        let path = |key: &str| self.values.get(key).map(|rv| PathBuf::from(&rv.value));
        let inputs = self
            .values
            .get("in")
            .map(|rv| rv.value.split(',').map(|s| PathBuf::from(s.trim())).collect())
            .unwrap_or_default();

        Ok(RunConfig {
            command,
            regime,
            regime_kind,
            lambda,
            lambda_range: match (lambda_start, lambda_stop, lambda_count) {
                (Some(a), Some(b), Some(n)) => Some((a, b, n)),
                (None, None, None) => None,
                _ => return Err(ConfigError::Missing("lambda_start, lambda_stop and lambda_count together")),
            },
            lambda_min: lambda_min.unwrap_or(DEFAULT_LAMBDA_MIN),
            weighting,
            n_rho,
            n_xi,
            search,
            zeta0,
            jobs,
            inputs,
            out: path("out"),
            field_out: path("field_out"),
            gas: path("gas"),
        })
    }
}

pub const DEFAULT_NODES: usize = 256;
pub const DEFAULT_LAMBDA_MIN: f64 = 10.0;

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Option<Command>,
    /// `None` when no regime was given, or `regime = turbulent` without `re`
    /// (the Reynolds number may then come from a gas file).
    pub regime: Option<FlowRegime>,
    regime_kind: Option<String>,
    pub lambda: Option<f64>,
    /// `(start, stop, count)`, log-spaced.
    pub lambda_range: Option<(f64, f64, usize)>,
    pub lambda_min: f64,
    pub weighting: Weighting,
    pub n_rho: usize,
    pub n_xi: usize,
    pub search: SearchOptions,
    pub zeta0: Option<f64>,
    pub jobs: usize,
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub field_out: Option<PathBuf>,
    pub gas: Option<PathBuf>,
}

impl RunConfig {
    pub fn is_turbulent(&self) -> bool {
        self.regime_kind.as_deref() == Some("turbulent")
    }

    pub fn regime(&self) -> Result<FlowRegime, ConfigError> {
        match (self.regime, self.regime_kind.as_deref()) {
            (Some(r), _) => Ok(r),
            (None, Some(_)) => Err(ConfigError::Missing("re (required for the turbulent regime)")),
            (None, None) => Err(ConfigError::Missing("regime")),
        }
    }

    pub fn lambda(&self) -> Result<f64, ConfigError> {
        self.lambda.ok_or(ConfigError::Missing("lambda"))
    }

    pub fn lambdas(&self) -> Result<Vec<f64>, ConfigError> {
        let (a, b, n) = self.lambda_range.ok_or(ConfigError::Missing("lambda_start, lambda_stop, lambda_count"))?;
        Ok((0..n)
            .map(|k| match k {
                0 => a,
                _ if k + 1 == n => b,
                _ => (a.ln() + (b.ln() - a.ln()) * k as f64 / (n - 1) as f64).exp(),
            })
            .collect())
    }

    pub fn grid(&self, regime: &FlowRegime) -> Result<GridSpec, ConfigError> {
        GridSpec::for_regime(regime, self.n_rho, self.n_xi)
            .map_err(|e| ConfigError::Bad { origin: Origin::Flag("n-rho/n-xi".into()), msg: e.to_string() })
    }
}

/// Parses a configuration file and validates it without requiring a command.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RawConfig::parse(text, None)?.resolve()
}

/// Parses a gas description in the same `key = value` format. The
/// `diffusivity_factor` key defaults to 1.
pub fn parse_gas(text: &str, file: Option<&str>) -> Result<GasSpec, ConfigError> {
    let values = parse_lines(text, file, GAS_KEYS)?;
    let get = |key: &'static str| -> Result<f64, ConfigError> {
        let rv = values.get(key).ok_or(ConfigError::Missing(key))?;
        rv.value
            .parse::<f64>()
            .map_err(|e| ConfigError::Bad { origin: rv.origin.clone(), msg: format!("`{}`: {e}", rv.value) })
    };
    let gas = GasSpec {
        heat_capacity: get("heat_capacity")?,
        molecular_diffusivity: get("molecular_diffusivity")?,
        kinematic_viscosity: get("kinematic_viscosity")?,
        heat_of_reaction: get("heat_of_reaction")?,
        preexponential: get("preexponential")?,
        activation_energy: get("activation_energy")?,
        gas_constant: get("gas_constant")?,
        wall_temperature: get("wall_temperature")?,
        pipe_radius: get("pipe_radius")?,
        discharge: get("discharge")?,
        diffusivity_factor: if values.contains_key("diffusivity_factor") { get("diffusivity_factor")? } else { 1.0 },
    };
    gas.validate().map_err(|e| ConfigError::Bad {
        origin: Origin::Line { file: file.map(str::to_string), line: 0, key: "gas".into() },
        msg: e.to_string(),
    })?;
    Ok(gas)
}
