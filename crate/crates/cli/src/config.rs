//! Run configuration: JSON with a versioned `schema` field, one selector
//! (`scenario`, `history_set` or `automaton`) and per-selector keys.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use chist_core::histories::{Dynamics, HistorySet, ProjectorFamily};
use chist_core::hourglass::DropDistribution;
use chist_core::robot::Automaton;
use chist_core::scenarios::{EstimationMode, ScenarioOptions, Truth};
use chist_core::tensor::{OperatorMatrix, SpaceLayout, StateVector};
use chist_core::C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const CONFIG_SCHEMA: &str = "chist-config/1";
pub const NORMALIZATION_TOL: f64 = 1e-9;

pub const SCENARIOS: [&str; 6] = [
    "canonical-observer",
    "gambling",
    "hourglass",
    "preparation-discrimination",
    "state-estimation",
    "theory-discrimination",
];

const COMMON_KEYS: [&str; 4] = ["schema", "seed", "epsilon", "output"];
const AMPLITUDE_KEYS: [&str; 4] = ["alpha", "beta", "alpha_sq", "beta_sq"];

/// One problem found in a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Key path such as `history_set.families[1]`, or `line 3, column 7`.
    pub location: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{} schema violation(s):\n{}", .0.len(), list(.0))]
    Invalid(Vec<Violation>),
}

fn list(v: &[Violation]) -> String {
    v.iter().map(|x| format!("  - {x}")).collect::<Vec<_>>().join("\n")
}

fn violation(location: impl Into<String>, message: impl Into<String>) -> Violation {
    Violation {
        location: location.into(),
        message: message.into(),
    }
}

/// A complex number written as `[re, im]` or as a plain real.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complex {
    Pair([f64; 2]),
    Real(f64),
}

impl Complex {
    pub fn value(self) -> C64 {
        match self {
            Complex::Pair([re, im]) => C64::new(re, im),
            Complex::Real(re) => C64::new(re, 0.0),
        }
    }
}

pub type Matrix = Vec<Vec<Complex>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: None,
            formats: default_formats(),
        }
    }
}

/// Amplitudes of the two-level system shared by the quantum scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Amplitudes {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
}

impl Amplitudes {
    pub fn alpha(&self) -> C64 {
        C64::new(self.alpha[0], self.alpha[1])
    }

    pub fn beta(&self) -> C64 {
        C64::new(self.beta[0], self.beta[1])
    }
}

#[derive(Debug, Default, Deserialize)]
struct AmplitudeKeys {
    alpha: Option<Complex>,
    beta: Option<Complex>,
    alpha_sq: Option<f64>,
    beta_sq: Option<f64>,
}

impl AmplitudeKeys {
    fn resolve(&self, out: &mut Vec<Violation>) -> Option<Amplitudes> {
        let pair = self.alpha.is_some() || self.beta.is_some();
        let squares = self.alpha_sq.is_some() || self.beta_sq.is_some();
        if pair && squares {
            out.push(violation("alpha", "give either alpha/beta or alpha_sq/beta_sq, not both"));
            return None;
        }
        if pair {
            let (Some(a), Some(b)) = (self.alpha, self.beta) else {
                out.push(violation("alpha, beta", "both amplitudes are required"));
                return None;
            };
            let (a, b) = (a.value(), b.value());
            let total = a.norm_sqr() + b.norm_sqr();
            if !total.is_finite() || (total - 1.0).abs() > NORMALIZATION_TOL {
                out.push(violation(
                    "alpha, beta",
                    format!("|alpha|^2 + |beta|^2 = {total} must equal 1 within {NORMALIZATION_TOL:e}"),
                ));
                return None;
            }
            return Some(Amplitudes {
                alpha: [a.re, a.im],
                beta: [b.re, b.im],
            });
        }
        let Some(a2) = self.alpha_sq else {
            out.push(violation("alpha_sq", "missing amplitude: give alpha_sq or alpha/beta"));
            return None;
        };
        if !(0.0..=1.0).contains(&a2) {
            out.push(violation("alpha_sq", format!("{a2} is outside [0, 1]")));
            return None;
        }
        let b2 = self.beta_sq.unwrap_or(1.0 - a2);
        if !(b2 >= 0.0) || (a2 + b2 - 1.0).abs() > NORMALIZATION_TOL {
            out.push(violation(
                "alpha_sq, beta_sq",
                format!("alpha_sq + beta_sq = {} must equal 1 within {NORMALIZATION_TOL:e}", a2 + b2),
            ));
            return None;
        }
        Some(Amplitudes {
            alpha: [a2.sqrt(), 0.0],
            beta: [b2.sqrt(), 0.0],
        })
    }
}

fn default_copies() -> usize {
    5
}
fn default_samples() -> usize {
    10_000
}
fn default_grid() -> usize {
    101
}
fn default_level() -> f64 {
    0.95
}
fn default_triples() -> usize {
    20
}
fn default_canonical_copies() -> usize {
    2
}
fn default_grains() -> usize {
    100
}
fn default_horizon() -> f64 {
    1.0
}
fn default_trials() -> usize {
    100
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamblingConfig {
    pub odds: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    #[serde(default = "default_copies")]
    pub copies: usize,
    #[serde(default = "default_mode")]
    pub mode: EstimationMode,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "default_level")]
    pub level: f64,
}

fn default_mode() -> EstimationMode {
    EstimationMode::FullQuantum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparationConfig {
    #[serde(default = "default_copies")]
    pub copies: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryConfig {
    #[serde(default = "default_triples")]
    pub triples: usize,
    #[serde(default = "default_truth")]
    pub truth: Truth,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_truth() -> Truth {
    Truth::Quantum
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalConfig {
    #[serde(default = "default_canonical_copies")]
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourglassConfig {
    #[serde(default = "default_grains")]
    pub grains: usize,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub distribution: DropDistribution,
    /// Defaults to 1% of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_scale: Option<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl HourglassConfig {
    pub fn scale(&self) -> f64 {
        self.perturbation_scale.unwrap_or(0.01 * self.horizon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorSpec {
    pub label: String,
    pub dim: usize,
}

/// One projector family of a raw history set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FamilySpec {
    /// Computational-basis values of one factor.
    Factor { factor: String },
    /// Rank-1 projectors onto the given orthonormal vectors.
    Basis {
        basis: Vec<Vec<Complex>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
    /// Explicit projector matrices.
    Projectors {
        projectors: Vec<Matrix>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistorySetSpec {
    pub factors: Vec<FactorSpec>,
    pub psi0: Vec<Complex>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Vec<Matrix>>,
    pub times: Vec<f64>,
    pub families: Vec<FamilySpec>,
    /// Request branch probabilities; an inconsistent set is then refused.
    #[serde(default = "default_true")]
    pub probabilities: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutomatonSpec {
    pub transition: Vec<Vec<usize>>,
    #[serde(default)]
    pub initial_state: usize,
    /// Input sequences to drive through the compiled unitary.
    #[serde(default)]
    pub inputs: Vec<Vec<usize>>,
    #[serde(default = "default_true")]
    pub archive: bool,
}

/// What a config asks to run.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    Gambling {
        amplitudes: Amplitudes,
        #[serde(flatten)]
        params: GamblingConfig,
    },
    StateEstimation {
        amplitudes: Amplitudes,
        #[serde(flatten)]
        params: EstimationConfig,
    },
    PreparationDiscrimination {
        amplitudes: Amplitudes,
        #[serde(flatten)]
        params: PreparationConfig,
    },
    TheoryDiscrimination {
        #[serde(flatten)]
        params: TheoryConfig,
    },
    CanonicalObserver {
        amplitudes: Amplitudes,
        #[serde(flatten)]
        params: CanonicalConfig,
    },
    Hourglass {
        #[serde(flatten)]
        params: HourglassConfig,
    },
    HistorySet {
        spec: HistorySetSpec,
    },
    Automaton {
        spec: AutomatonSpec,
    },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Gambling { .. } => "gambling",
            Task::StateEstimation { .. } => "state-estimation",
            Task::PreparationDiscrimination { .. } => "preparation-discrimination",
            Task::TheoryDiscrimination { .. } => "theory-discrimination",
            Task::CanonicalObserver { .. } => "canonical-observer",
            Task::Hourglass { .. } => "hourglass",
            Task::HistorySet { .. } => "history-set",
            Task::Automaton { .. } => "automaton",
        }
    }
}

/// A fully validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema: String,
    pub seed: u64,
    pub epsilon: f64,
    pub output: OutputConfig,
    pub task: Task,
}

impl RunConfig {
    pub fn scenario_options(&self) -> ScenarioOptions {
        let mut o = ScenarioOptions {
            epsilon: self.epsilon,
            ..ScenarioOptions::default()
        };
        match &self.task {
            Task::Gambling { params, .. } => o.samples = params.samples,
            Task::StateEstimation { params, .. } => {
                o.samples = params.samples;
                o.grid_points = params.grid_points;
                o.level = params.level;
            }
            Task::PreparationDiscrimination { params, .. } => o.samples = params.samples,
            Task::TheoryDiscrimination { params } => o.samples = params.samples,
            _ => {}
        }
        o
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| {
        ConfigError::Invalid(vec![violation(
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )])
    })?;
    parse_value(value)
}

fn typed<T: DeserializeOwned>(value: Value, prefix: &str, out: &mut Vec<Violation>) -> Option<T> {
    match serde_path_to_error::deserialize(value) {
        Ok(v) => Some(v),
        Err(e) => {
            let path = e.path().to_string();
            let location = match (prefix.is_empty(), path.as_str()) {
                (true, _) => path.clone(),
                (false, ".") => prefix.to_string(),
                (false, p) => format!("{prefix}.{p}"),
            };
            out.push(violation(location, e.into_inner().to_string()));
            None
        }
    }
}

fn take(map: &mut Map<String, Value>, keys: &[&str]) -> Map<String, Value> {
    keys.iter()
        .filter_map(|k| map.remove(*k).map(|v| (k.to_string(), v)))
        .collect()
}

pub fn parse_value(value: Value) -> Result<RunConfig, ConfigError> {
    let mut out = Vec::new();
    let Value::Object(mut map) = value else {
        return Err(ConfigError::Invalid(vec![violation("<root>", "config must be a JSON object")]));
    };

    match map.remove("schema") {
        Some(Value::String(s)) if s == CONFIG_SCHEMA => {}
        Some(other) => out.push(violation("schema", format!("expected \"{CONFIG_SCHEMA}\", found {other}"))),
        None => out.push(violation("schema", format!("missing; expected \"{CONFIG_SCHEMA}\""))),
    }
    let seed = match map.remove("seed") {
        None => 0,
        Some(v) => typed::<u64>(v, "seed", &mut out).unwrap_or(0),
    };
    let epsilon = match map.remove("epsilon") {
        None => chist_core::histories::DEFAULT_EPSILON,
        Some(v) => {
            let e = typed::<f64>(v, "epsilon", &mut out).unwrap_or(1e-8);
            if !(e.is_finite() && e > 0.0) {
                out.push(violation("epsilon", format!("{e} must be positive")));
            }
            e
        }
    };
    let output = match map.remove("output") {
        None => OutputConfig::default(),
        Some(v) => typed(v, "output", &mut out).unwrap_or_default(),
    };

    let selectors: Vec<&str> = ["scenario", "history_set", "automaton"]
        .into_iter()
        .filter(|k| map.contains_key(*k))
        .collect();
    if selectors.len() != 1 {
        out.push(violation(
            "<root>",
            format!("exactly one of scenario, history_set, automaton is required; found {selectors:?}"),
        ));
        return Err(ConfigError::Invalid(out));
    }

    let task = match selectors[0] {
        "history_set" => {
            let v = map.remove("history_set").unwrap();
            reject_unknown(&map, &[], &mut out);
            typed::<HistorySetSpec>(v, "history_set", &mut out).map(|spec| {
                check_history_set(&spec, &mut out);
                Task::HistorySet { spec }
            })
        }
        "automaton" => {
            let v = map.remove("automaton").unwrap();
            reject_unknown(&map, &[], &mut out);
            typed::<AutomatonSpec>(v, "automaton", &mut out).map(|spec| {
                check_automaton(&spec, &mut out);
                Task::Automaton { spec }
            })
        }
        _ => {
            let name = match map.remove("scenario") {
                Some(Value::String(s)) => s,
                other => {
                    out.push(violation("scenario", format!("expected a scenario name, found {other:?}")));
                    return Err(ConfigError::Invalid(out));
                }
            };
            scenario_task(&name, map, &mut out)
        }
    };
    match task {
        Some(task) if out.is_empty() => Ok(RunConfig {
            schema: CONFIG_SCHEMA.to_string(),
            seed,
            epsilon,
            output,
            task,
        }),
        _ => Err(ConfigError::Invalid(out)),
    }
}

fn reject_unknown(map: &Map<String, Value>, allowed: &[&str], out: &mut Vec<Violation>) {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) && !COMMON_KEYS.contains(&key.as_str()) {
            out.push(violation(key.clone(), "unknown key"));
        }
    }
}

fn scenario_task(name: &str, mut map: Map<String, Value>, out: &mut Vec<Violation>) -> Option<Task> {
    const GAMBLING: &[&str] = &["odds", "samples"];
    const ESTIMATION: &[&str] = &["copies", "mode", "samples", "grid_points", "level"];
    const PREPARATION: &[&str] = &["copies", "samples"];
    const THEORY: &[&str] = &["triples", "truth", "samples"];
    const CANONICAL: &[&str] = &["copies"];
    const HOURGLASS: &[&str] = &["grains", "horizon", "distribution", "perturbation_scale", "trials"];

    let (keys, amplitudes): (&[&str], bool) = match name {
        "gambling" => (GAMBLING, true),
        "state-estimation" => (ESTIMATION, true),
        "preparation-discrimination" => (PREPARATION, true),
        "theory-discrimination" => (THEORY, false),
        "canonical-observer" => (CANONICAL, true),
        "hourglass" => (HOURGLASS, false),
        other => {
            out.push(violation(
                "scenario",
                format!("unknown scenario \"{other}\"; expected one of {}", SCENARIOS.join(", ")),
            ));
            return None;
        }
    };
    let mut allowed: BTreeSet<&str> = keys.iter().copied().collect();
    if amplitudes {
        allowed.extend(AMPLITUDE_KEYS);
    }
    reject_unknown(&map, &allowed.iter().copied().collect::<Vec<_>>(), out);

    let amps = if amplitudes {
        let raw = take(&mut map, &AMPLITUDE_KEYS);
        typed::<AmplitudeKeys>(Value::Object(raw), "", out)?.resolve(out)
    } else {
        None
    };
    let params = Value::Object(take(&mut map, keys));
    let task = match name {
        "gambling" => {
            let p: GamblingConfig = typed(params, "", out)?;
            if !(p.odds.is_finite() && p.odds > 0.0) {
                out.push(violation("odds", format!("{} must be positive", p.odds)));
            }
            Task::Gambling { amplitudes: amps?, params: p }
        }
        "state-estimation" => {
            let p: EstimationConfig = typed(params, "", out)?;
            if p.copies == 0 {
                out.push(violation("copies", "must be at least 1"));
            }
            if !(p.level > 0.0 && p.level < 1.0) {
                out.push(violation("level", format!("{} must lie in (0, 1)", p.level)));
            }
            if p.grid_points < 2 {
                out.push(violation("grid_points", "must be at least 2"));
            }
            Task::StateEstimation { amplitudes: amps?, params: p }
        }
        "preparation-discrimination" => {
            let p: PreparationConfig = typed(params, "", out)?;
            if p.copies == 0 {
                out.push(violation("copies", "must be at least 1"));
            }
            Task::PreparationDiscrimination { amplitudes: amps?, params: p }
        }
        "theory-discrimination" => {
            let p: TheoryConfig = typed(params, "", out)?;
            if p.triples == 0 {
                out.push(violation("triples", "must be at least 1"));
            }
            Task::TheoryDiscrimination { params: p }
        }
        "canonical-observer" => {
            let p: CanonicalConfig = typed(params, "", out)?;
            if !(1..=3).contains(&p.copies) {
                out.push(violation("copies", format!("{} must be 1 to 3", p.copies)));
            }
            Task::CanonicalObserver { amplitudes: amps?, params: p }
        }
        _ => {
            let p: HourglassConfig = typed(params, "", out)?;
            if p.grains == 0 {
                out.push(violation("grains", "must be at least 1"));
            }
            if !(p.horizon.is_finite() && p.horizon > 0.0) {
                out.push(violation("horizon", format!("{} must be positive", p.horizon)));
            }
            if !(p.scale().is_finite() && p.scale() >= 0.0) {
                out.push(violation("perturbation_scale", format!("{} must be nonnegative", p.scale())));
            }
            Task::Hourglass { params: p }
        }
    };
    Some(task)
}

fn check_automaton(spec: &AutomatonSpec, out: &mut Vec<Violation>) {
    match Automaton::new(&spec.transition, spec.initial_state) {
        Ok(a) => {
            for (i, seq) in spec.inputs.iter().enumerate() {
                if let Some(x) = seq.iter().find(|&&x| x >= a.input_count()) {
                    out.push(violation(
                        format!("automaton.inputs[{i}]"),
                        format!("input {x} is out of range for {} inputs", a.input_count()),
                    ));
                }
            }
        }
        Err(e) => out.push(violation("automaton.transition", e.to_string())),
    }
}

fn check_history_set(spec: &HistorySetSpec, out: &mut Vec<Violation>) {
    if let Err(v) = spec.build() {
        out.push(v);
    }
}

fn matrix(layout: &SpaceLayout, m: &Matrix, location: &str) -> Result<OperatorMatrix, Violation> {
    let rows: Vec<Vec<C64>> = m.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
    OperatorMatrix::from_rows(layout.clone(), &rows).map_err(|e| violation(location, e.to_string()))
}

fn vector(layout: &SpaceLayout, v: &[Complex], location: &str) -> Result<StateVector, Violation> {
    StateVector::new(layout.clone(), v.iter().map(|c| c.value()).collect())
        .map_err(|e| violation(location, e.to_string()))
}

impl HistorySetSpec {
    /// Builds and validates the declared set.
    pub fn build(&self) -> Result<HistorySet, Violation> {
        let layout = SpaceLayout::new(self.factors.iter().map(|f| (f.label.clone(), f.dim)))
            .map_err(|e| violation("history_set.factors", e.to_string()))?;
        let psi0 = vector(&layout, &self.psi0, "history_set.psi0")?;
        let dynamics = match (&self.hamiltonian, &self.steps) {
            (Some(h), None) => Dynamics::Hamiltonian(matrix(&layout, h, "history_set.hamiltonian")?),
            (None, Some(steps)) => Dynamics::Steps(
                steps
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(&layout, m, &format!("history_set.steps[{i}]")))
                    .collect::<Result<_, _>>()?,
            ),
            _ => {
                return Err(violation(
                    "history_set",
                    "give exactly one of hamiltonian, steps",
                ))
            }
        };
        let families = self
            .families
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let loc = format!("history_set.families[{i}]");
                let labels = |n: usize, given: &Option<Vec<String>>| {
                    given.clone().unwrap_or_else(|| (0..n).map(|k| format!("P{k}")).collect())
                };
                let fam = match f {
                    FamilySpec::Factor { factor } => ProjectorFamily::factor_values(&layout, factor),
                    FamilySpec::Basis { basis, labels: l } => {
                        let vs = basis
                            .iter()
                            .enumerate()
                            .map(|(k, v)| vector(&layout, v, &format!("{loc}.basis[{k}]")))
                            .collect::<Result<Vec<_>, _>>()?;
                        ProjectorFamily::from_basis(layout.clone(), &vs, labels(vs.len(), l))
                    }
                    FamilySpec::Projectors { projectors, labels: l } => {
                        let ps = projectors
                            .iter()
                            .enumerate()
                            .map(|(k, m)| matrix(&layout, m, &format!("{loc}.projectors[{k}]")))
                            .collect::<Result<Vec<_>, _>>()?;
                        let n = ps.len();
                        ProjectorFamily::new(layout.clone(), ps, labels(n, l), ProjectorFamily::DEFAULT_TOL)
                    }
                };
                fam.map_err(|e| violation(loc, e.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        HistorySet::new(psi0, dynamics, self.times.clone(), families)
            .map_err(|e| violation("history_set", e.to_string()))
    }
}
