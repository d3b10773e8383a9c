//! Flat `key = value` run descriptions.
//!
//! ```text
//! # single wall in the middle of a 48-site chain
//! sites = 48
//! initial = single_dw(24)
//! gamma = 0
//! t_max = 20
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown and repeated keys are
//! errors so that a typo in a physics parameter never falls back to a
//! default silently.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{build_double_dw, build_single_dw, build_z2, build_z2prime, constrained_dim, SpinConfig};
use crate::mps::SplitMethod;

/// Largest Hilbert-space dimension accepted by the exact engine.
pub const MAX_EXACT_DIM: u64 = 1_000_000;
/// Largest block for the trace distance.
pub const MAX_BLOCK_SITES: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: `{key}` given more than once")]
    DuplicateKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("`{key} = {value}`: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("preset `{name}` is a {found} preset, expected {expected}")]
    WrongPresetKind { name: String, found: &'static str, expected: &'static str },
}

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: reason.into() }
}

/// Product state the chain starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialState {
    Z2,
    Z2prime,
    /// Wall between sites `bond` and `bond + 1`.
    SingleDw { bond: usize },
    /// `|Z2'>` region of `middle_sites` (odd) sites starting after `left_bond`.
    DoubleDw { left_bond: usize, middle_sites: usize },
}

impl InitialState {
    pub fn build(&self, sites: usize) -> Result<SpinConfig, crate::basis::BasisError> {
        match *self {
            Self::Z2 => build_z2(sites),
            Self::Z2prime => build_z2prime(sites),
            Self::SingleDw { bond } => build_single_dw(sites, bond),
            Self::DoubleDw { left_bond, middle_sites } => build_double_dw(sites, left_bond, middle_sites),
        }
    }

    /// Wall positions in inhomogeneity units `k`.
    pub fn wall_ks(&self) -> Vec<usize> {
        match *self {
            Self::Z2 | Self::Z2prime => Vec::new(),
            Self::SingleDw { bond } => vec![bond / 2],
            Self::DoubleDw { left_bond, middle_sites } => vec![left_bond / 2, (left_bond + middle_sites).div_ceil(2)],
        }
    }
}

impl fmt::Display for InitialState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Z2 => write!(f, "z2"),
            Self::Z2prime => write!(f, "z2prime"),
            Self::SingleDw { bond } => write!(f, "single_dw({bond})"),
            Self::DoubleDw { left_bond, middle_sites } => write!(f, "double_dw({left_bond}, {middle_sites})"),
        }
    }
}

impl FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s {
            "z2" => return Ok(Self::Z2),
            "z2prime" => return Ok(Self::Z2prime),
            _ => {}
        }
        let (name, rest) = s.split_once('(').ok_or("expected z2, z2prime, single_dw(b) or double_dw(b, m)")?;
        let args = rest.strip_suffix(')').ok_or("missing closing parenthesis")?;
        let args: Vec<usize> = args
            .split(',')
            .map(|a| a.trim().parse::<usize>().map_err(|e| format!("bad argument `{}`: {e}", a.trim())))
            .collect::<Result<_, _>>()?;
        match (name.trim(), args.as_slice()) {
            ("single_dw", &[bond]) => Ok(Self::SingleDw { bond }),
            ("double_dw", &[left_bond, middle_sites]) => Ok(Self::DoubleDw { left_bond, middle_sites }),
            _ => Err(format!("unrecognised initial state `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Exact,
    Mps,
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "exact" => Ok(Self::Exact),
            "mps" => Ok(Self::Mps),
            _ => Err("expected `exact` or `mps`".into()),
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exact => "exact",
            Self::Mps => "mps",
        })
    }
}

/// Series a run can record. Each maps to one CSV file (two for
/// `Amplitudes`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `<Z_i> / 2` per site.
    Profile,
    /// `Delta_k`.
    Inhomogeneity,
    /// Half-chain entanglement entropy.
    Entropy,
    /// Envelope-weighted wall amplitudes `Delta_+` and `Delta_-`.
    Amplitudes,
    /// `D(t)` of the configured block against `t = 0`.
    TraceDistance,
    Energy,
    /// Largest `<n_i n_{i+1}>`.
    Blockade,
    /// Cumulative discarded weight.
    Discarded,
    /// Largest bond dimension.
    BondDim,
}

impl Observable {
    pub const ALL: [Observable; 9] = [
        Self::Profile,
        Self::Inhomogeneity,
        Self::Entropy,
        Self::Amplitudes,
        Self::TraceDistance,
        Self::Energy,
        Self::Blockade,
        Self::Discarded,
        Self::BondDim,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Profile => "profile",
            Self::Inhomogeneity => "inhomogeneity",
            Self::Entropy => "entropy",
            Self::Amplitudes => "amplitudes",
            Self::TraceDistance => "trace_distance",
            Self::Energy => "energy",
            Self::Blockade => "blockade",
            Self::Discarded => "discarded",
            Self::BondDim => "bond_dim",
        }
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown observable `{s}`"))
    }
}

/// One simulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub sites: usize,
    pub initial: InitialState,
    pub gamma: f64,
    pub engine: EngineKind,
    pub dt: f64,
    pub chi_max: usize,
    pub s_min: f64,
    pub split: SplitMethod,
    pub t_max: f64,
    /// Sampling interval in time units; a multiple of `dt`.
    pub stride: f64,
    /// Sorted, without repeats.
    pub observables: Vec<Observable>,
    pub output: PathBuf,
    /// Inclusive 1-based site range for the trace distance.
    pub block: Option<(usize, usize)>,
    /// Speed of the envelope trackers behind `amplitudes`.
    pub tracker_velocity: f64,
}

impl ScenarioConfig {
    /// Defaults for everything except the chain, initial state and duration.
    pub fn new(sites: usize, initial: InitialState, t_max: f64) -> Self {
        Self {
            sites,
            initial,
            gamma: 0.0,
            engine: EngineKind::Mps,
            dt: 0.05,
            chi_max: 128,
            s_min: 1e-10,
            split: SplitMethod::Gram,
            t_max,
            stride: 0.5,
            observables: vec![Observable::Profile, Observable::Inhomogeneity, Observable::Entropy],
            output: PathBuf::from("results"),
            block: None,
            tracker_velocity: 0.26,
        }
    }

    pub fn records(&self, obs: Observable) -> bool {
        self.observables.contains(&obs)
    }

    pub fn with_observable(mut self, obs: Observable) -> Self {
        if !self.records(obs) {
            self.observables.push(obs);
            self.observables.sort();
        }
        self
    }

    /// Number of `dt` steps in the run and between samples.
    pub fn step_grid(&self) -> Result<(usize, usize), ConfigError> {
        let steps = multiple_of(self.t_max, self.dt).ok_or_else(|| invalid("t_max", &self.t_max.to_string(), "must be a non-negative multiple of dt"))?;
        let stride = multiple_of(self.stride, self.dt)
            .filter(|&n| n > 0)
            .ok_or_else(|| invalid("stride", &self.stride.to_string(), "must be a positive multiple of dt"))?;
        Ok((steps, stride))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sites < 4 {
            return Err(invalid("sites", &self.sites.to_string(), "need at least 4 sites"));
        }
        self.initial
            .build(self.sites)
            .map_err(|e| invalid("initial", &self.initial.to_string(), e.to_string()))?;
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(invalid("gamma", &self.gamma.to_string(), "must be finite and non-negative"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", &self.dt.to_string(), "must be positive"));
        }
        self.step_grid()?;
        if self.chi_max < 2 {
            return Err(invalid("chi_max", &self.chi_max.to_string(), "must be at least 2"));
        }
        if !(self.s_min >= 0.0 && self.s_min < 1.0) {
            return Err(invalid("s_min", &self.s_min.to_string(), "must lie in [0, 1)"));
        }
        if !(self.tracker_velocity.is_finite() && self.tracker_velocity > 0.0) {
            return Err(invalid("tracker_velocity", &self.tracker_velocity.to_string(), "must be positive"));
        }
        if self.observables.is_empty() {
            return Err(ConfigError::Invalid("no observables selected".into()));
        }
        if self.engine == EngineKind::Exact && (self.sites > 60 || constrained_dim(self.sites) > MAX_EXACT_DIM) {
            return Err(ConfigError::Invalid(format!(
                "the exact engine is limited to {MAX_EXACT_DIM} basis states; {} sites is too many",
                self.sites
            )));
        }
        if let Some((first, last)) = self.block {
            if first == 0 || last < first || last > self.sites {
                return Err(invalid("block", &format!("{first}-{last}"), format!("must lie inside 1..={}", self.sites)));
            }
            if last - first + 1 > MAX_BLOCK_SITES {
                return Err(invalid("block", &format!("{first}-{last}"), format!("at most {MAX_BLOCK_SITES} sites")));
            }
        } else if self.records(Observable::TraceDistance) {
            return Err(ConfigError::Invalid("trace_distance needs a `block`".into()));
        }
        if self.records(Observable::Amplitudes) && !matches!(self.initial, InitialState::SingleDw { .. }) {
            return Err(ConfigError::Invalid("amplitudes are defined for a single_dw initial state".into()));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut fields = Fields::parse(text, SCENARIO_KEYS)?;
        let config = Self::from_fields(&mut fields)?;
        config.validate()?;
        Ok(config)
    }

    fn from_fields(fields: &mut Fields) -> Result<Self, ConfigError> {
        let sites = fields.required("sites")?;
        let initial = fields.required("initial")?;
        let t_max = fields.required("t_max")?;
        let mut c = Self::new(sites, initial, t_max);
        fields.optional("gamma", &mut c.gamma)?;
        fields.optional("engine", &mut c.engine)?;
        fields.optional("dt", &mut c.dt)?;
        fields.optional("chi_max", &mut c.chi_max)?;
        fields.optional("s_min", &mut c.s_min)?;
        if let Some(v) = fields.take("split") {
            c.split = match v.as_str() {
                "gram" => SplitMethod::Gram,
                "svd" => SplitMethod::Svd,
                _ => return Err(invalid("split", &v, "expected `gram` or `svd`")),
            };
        }
        fields.optional("stride", &mut c.stride)?;
        if let Some(v) = fields.take("observables") {
            let mut obs: Vec<Observable> = split_list(&v)
                .map(|s| s.parse().map_err(|e: String| invalid("observables", &v, e)))
                .collect::<Result<_, _>>()?;
            obs.sort();
            obs.dedup();
            c.observables = obs;
        }
        if let Some(v) = fields.take("output") {
            c.output = PathBuf::from(v);
        }
        if let Some(v) = fields.take("block") {
            let (a, b) = v.split_once('-').ok_or_else(|| invalid("block", &v, "expected `first-last`"))?;
            let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| invalid("block", &v, e.to_string()));
            c.block = Some((parse(a)?, parse(b)?));
        }
        fields.optional("tracker_velocity", &mut c.tracker_velocity)?;
        Ok(c)
    }

    /// Canonical text form; [`ScenarioConfig::parse`] reads it back to an
    /// equal value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        self.write_fields(&mut s);
        s
    }

    fn write_fields(&self, s: &mut String) {
        use std::fmt::Write;
        let obs: Vec<&str> = self.observables.iter().map(|o| o.name()).collect();
        let _ = writeln!(s, "sites = {}", self.sites);
        let _ = writeln!(s, "initial = {}", self.initial);
        let _ = writeln!(s, "gamma = {:?}", self.gamma);
        let _ = writeln!(s, "engine = {}", self.engine);
        let _ = writeln!(s, "dt = {:?}", self.dt);
        let _ = writeln!(s, "chi_max = {}", self.chi_max);
        let _ = writeln!(s, "s_min = {:?}", self.s_min);
        let _ = writeln!(s, "split = {}", match self.split {
            SplitMethod::Gram => "gram",
            SplitMethod::Svd => "svd",
        });
        let _ = writeln!(s, "t_max = {:?}", self.t_max);
        let _ = writeln!(s, "stride = {:?}", self.stride);
        let _ = writeln!(s, "observables = {}", obs.join(", "));
        let _ = writeln!(s, "output = {}", self.output.display());
        if let Some((a, b)) = self.block {
            let _ = writeln!(s, "block = {a}-{b}");
        }
        let _ = writeln!(s, "tracker_velocity = {:?}", self.tracker_velocity);
    }
}

/// The same scenario at several drive frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: ScenarioConfig,
    /// Strictly increasing.
    pub gammas: Vec<f64>,
    /// Times at which the half-chain entropy is tabulated.
    pub report_times: Vec<f64>,
}

impl SweepConfig {
    pub fn new(base: ScenarioConfig, gammas: Vec<f64>, report_times: Vec<f64>) -> Result<Self, ConfigError> {
        let sweep = Self { base: base.with_observable(Observable::Entropy), gammas, report_times };
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base.validate()?;
        if self.gammas.is_empty() {
            return Err(ConfigError::Invalid("empty gamma grid".into()));
        }
        if self.gammas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ConfigError::Invalid("gamma values must be distinct and sorted".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !g.is_finite() || **g < 0.0) {
            return Err(invalid("gammas", &g.to_string(), "must be finite and non-negative"));
        }
        let (steps, stride) = self.base.step_grid()?;
        for &t in &self.report_times {
            let on_grid = multiple_of(t, self.base.dt).is_some_and(|n| n <= steps && (n % stride == 0 || n == steps));
            if !on_grid {
                return Err(invalid("report_times", &t.to_string(), "must be a sample time of the run"));
            }
        }
        if !self.base.records(Observable::Entropy) {
            return Err(ConfigError::Invalid("a sweep records the entropy".into()));
        }
        Ok(())
    }

    /// The scenario at one grid point, writing below `base.output`.
    pub fn point(&self, gamma: f64) -> ScenarioConfig {
        let mut c = self.base.clone();
        c.gamma = gamma;
        c.output = self.base.output.join(format!("gamma_{gamma:?}"));
        c
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut fields = Fields::parse(text, &[SCENARIO_KEYS, &["gammas", "report_times"]].concat())?;
        let gammas = parse_floats("gammas", &fields.take("gammas").ok_or(ConfigError::MissingKey("gammas"))?)?;
        let report_times = fields.take("report_times").map(|v| parse_floats("report_times", &v)).transpose()?;
        let base = ScenarioConfig::from_fields(&mut fields)?;
        let report_times = report_times.unwrap_or_else(|| vec![base.t_max]);
        Self::new(base, gammas, report_times)
    }

    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let mut s = self.base.to_text();
        s.push_str(&format!("gammas = {}\nreport_times = {}\n", join(&self.gammas), join(&self.report_times)));
        s
    }
}

/// A two-wall run and a one-wall baseline compared through the trace
/// distance of a block between the walls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    /// The two-wall scenario; its `block` must sit between the walls.
    pub base: ScenarioConfig,
    pub baseline: InitialState,
}

impl CollisionConfig {
    pub fn new(base: ScenarioConfig, baseline: InitialState) -> Result<Self, ConfigError> {
        let pair = Self { base: base.with_observable(Observable::TraceDistance), baseline };
        pair.validate()?;
        Ok(pair)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.base.validate()?;
        let InitialState::DoubleDw { left_bond, middle_sites } = self.base.initial else {
            return Err(invalid("initial", &self.base.initial.to_string(), "a collision run starts from double_dw"));
        };
        self.baseline
            .build(self.base.sites)
            .map_err(|e| invalid("baseline", &self.baseline.to_string(), e.to_string()))?;
        // walls sit on bonds left_bond + 1/2 and left_bond + middle_sites + 1/2
        let midpoint = left_bond as f64 + 0.5 + 0.5 * middle_sites as f64;
        let (first, last) = self.base.block.ok_or(ConfigError::MissingKey("block"))?;
        if midpoint < first as f64 - 1.0 || midpoint > last as f64 + 1.0 {
            return Err(invalid(
                "block",
                &format!("{first}-{last}"),
                format!("must cover the midpoint between the walls (site {midpoint})"),
            ));
        }
        Ok(())
    }

    pub fn baseline_config(&self) -> ScenarioConfig {
        let mut c = self.base.clone();
        c.initial = self.baseline;
        c.output = self.base.output.join("baseline");
        c
    }

    pub fn double_config(&self) -> ScenarioConfig {
        let mut c = self.base.clone();
        c.output = self.base.output.join("double");
        c
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut fields = Fields::parse(text, &[SCENARIO_KEYS, &["baseline"]].concat())?;
        let baseline = fields.required("baseline")?;
        let base = ScenarioConfig::from_fields(&mut fields)?;
        Self::new(base, baseline)
    }

    pub fn to_text(&self) -> String {
        format!("{}baseline = {}\n", self.base.to_text(), self.baseline)
    }
}

const SCENARIO_KEYS: &[&str] = &[
    "sites",
    "initial",
    "gamma",
    "engine",
    "dt",
    "chi_max",
    "s_min",
    "split",
    "t_max",
    "stride",
    "observables",
    "output",
    "block",
    "tracker_velocity",
];

/// `x / dt` when it is a whole number of steps.
fn multiple_of(x: f64, dt: f64) -> Option<usize> {
    if !x.is_finite() || x < 0.0 || dt <= 0.0 {
        return None;
    }
    let n = (x / dt).round();
    ((n * dt - x).abs() <= 1e-9 * x.max(1.0)).then_some(n as usize)
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_floats(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    split_list(v)
        .map(|s| s.parse::<f64>().map_err(|e| invalid(key, v, e.to_string())))
        .collect()
}

/// Parsed key/value pairs, consumed by the typed readers.
struct Fields {
    values: BTreeMap<String, String>,
}

impl Fields {
    fn parse(text: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { line, message: format!("expected `key = value`, got `{content}`") })?;
            let key = key.trim();
            if !allowed.contains(&key) {
                return Err(ConfigError::UnknownKey { line, key: key.into() });
            }
            if values.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(ConfigError::DuplicateKey { line, key: key.into() });
            }
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn required<T: FromStr>(&mut self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let v = self.take(key).ok_or(ConfigError::MissingKey(key))?;
        v.parse().map_err(|e: T::Err| invalid(key, &v, e.to_string()))
    }

    fn optional<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<(), ConfigError>
    where
        T::Err: fmt::Display,
    {
        if let Some(v) = self.take(key) {
            *slot = v.parse().map_err(|e: T::Err| invalid(key, &v, e.to_string()))?;
        }
        Ok(())
    }
}
