//! End-to-end observer experiments. Each run returns a [`ScenarioResult`]
//! carrying exact tables, optional sampled frequencies, derived quantities,
//! consistency reports and the seed it was run with.

mod canonical;
mod estimation;
mod gambling;
mod preparation;
mod theory;

pub use canonical::{correlated_families, run_canonical_observer, MAX_RECORDED_HISTORIES, RECORDER};
pub use estimation::{full_quantum_dim, full_quantum_set, run_state_estimation, EstimationMode};
pub use gambling::run_gambling;
pub use preparation::run_preparation_discrimination;
pub use theory::{run_theory_discrimination, xzx_paths, Truth};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::histories::{
    ConsistencyReport, FamilyError, History, HistoryError, ProbabilityTable, DEFAULT_EPSILON,
};
use crate::robot::RobotError;
use crate::tensor::TensorError;
use crate::C64;

/// Largest deviation of a table sum from 1.
pub const TABLE_SUM_TOL: f64 = 1e-10;

/// Tolerance on `|α|² + |β|² = 1`.
pub const AMPLITUDE_NORM_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{name}: set is inconsistent (measure {measure:e} > epsilon {epsilon:e})")]
    Inconsistent {
        name: String,
        measure: f64,
        epsilon: f64,
    },
    #[error("{count} histories exceed the limit of {limit}")]
    TooManyHistories { count: usize, limit: usize },
    #[error("result check failed: {0}")]
    Check(String),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

impl ScenarioError {
    /// True for refusals caused by an inconsistent history set.
    pub fn is_consistency_refusal(&self) -> bool {
        matches!(
            self,
            ScenarioError::Inconsistent { .. } | ScenarioError::History(HistoryError::Inconsistent { .. })
        )
    }
}

/// Knobs shared by every scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioOptions {
    pub epsilon: f64,
    /// Monte Carlo draws per sampled table.
    pub samples: usize,
    /// Posterior grid size.
    pub grid_points: usize,
    /// Credible level of the posterior interval.
    pub level: f64,
}

impl Default for ScenarioOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            samples: 10_000,
            grid_points: 101,
            level: 0.95,
        }
    }
}

/// A scalar or small vector reported by a scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Quantity {
    Flag(bool),
    Integer(i64),
    Real(f64),
    Complex([f64; 2]),
    Reals(Vec<f64>),
    Text(String),
}

impl Quantity {
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Quantity::Real(x) => Some(*x),
            Quantity::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Quantity::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_flag(&self) -> Option<bool> {
        match self {
            Quantity::Flag(b) => Some(*b),
            _ => None,
        }
    }
}

impl From<f64> for Quantity {
    fn from(x: f64) -> Self {
        Quantity::Real(x)
    }
}

impl From<usize> for Quantity {
    fn from(x: usize) -> Self {
        Quantity::Integer(x as i64)
    }
}

impl From<u64> for Quantity {
    fn from(x: u64) -> Self {
        Quantity::Integer(x as i64)
    }
}

impl From<bool> for Quantity {
    fn from(x: bool) -> Self {
        Quantity::Flag(x)
    }
}

impl From<&str> for Quantity {
    fn from(x: &str) -> Self {
        Quantity::Text(x.to_string())
    }
}

impl From<C64> for Quantity {
    fn from(z: C64) -> Self {
        Quantity::Complex([z.re, z.im])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub history: History,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactTable {
    pub name: String,
    pub rows: Vec<TableRow>,
}

impl ExactTable {
    pub fn from_probabilities(name: &str, table: &ProbabilityTable) -> Self {
        let rows = table
            .iter()
            .map(|(h, l, p)| TableRow {
                label: l.to_string(),
                history: h.clone(),
                probability: p,
            })
            .collect();
        Self {
            name: name.to_string(),
            rows,
        }
    }

    /// Single-time table with histories `[k]`.
    pub fn from_values(name: &str, labels: &[&str], probabilities: &[f64]) -> Self {
        let rows = labels
            .iter()
            .zip(probabilities)
            .enumerate()
            .map(|(k, (l, &p))| TableRow {
                label: l.to_string(),
                history: vec![k],
                probability: p,
            })
            .collect();
        Self {
            name: name.to_string(),
            rows,
        }
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.probability).collect()
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.probability)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledRow {
    pub label: String,
    pub count: usize,
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledTable {
    pub name: String,
    pub samples: usize,
    pub rows: Vec<SampledRow>,
    /// Total-variation distance to the exact table of the same name.
    pub tv_distance: f64,
}

impl SampledTable {
    /// Tallies `outcomes` (row indices of `exact`).
    pub fn tally(exact: &ExactTable, outcomes: impl IntoIterator<Item = usize>) -> Self {
        let mut counts = vec![0usize; exact.rows.len()];
        let mut samples = 0;
        for o in outcomes {
            counts[o] += 1;
            samples += 1;
        }
        let rows: Vec<SampledRow> = exact
            .rows
            .iter()
            .zip(&counts)
            .map(|(r, &count)| SampledRow {
                label: r.label.clone(),
                count,
                frequency: if samples == 0 { 0.0 } else { count as f64 / samples as f64 },
            })
            .collect();
        let tv_distance = rows
            .iter()
            .zip(&exact.rows)
            .map(|(s, e)| (s.frequency - e.probability).abs())
            .sum::<f64>()
            / 2.0;
        Self {
            name: exact.name.clone(),
            samples,
            rows,
            tv_distance,
        }
    }

    pub fn count(&self, label: &str) -> Option<usize> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedConsistency {
    pub name: String,
    pub report: ConsistencyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub scenario: String,
    pub seed: u64,
    pub parameters: BTreeMap<String, Quantity>,
    pub exact: Vec<ExactTable>,
    pub sampled: Vec<SampledTable>,
    pub derived: BTreeMap<String, Quantity>,
    pub consistency: Vec<NamedConsistency>,
    pub warnings: Vec<String>,
}

impl ScenarioResult {
    pub(crate) fn new(scenario: &str, seed: u64) -> Self {
        Self {
            scenario: scenario.to_string(),
            seed,
            parameters: BTreeMap::new(),
            exact: Vec::new(),
            sampled: Vec::new(),
            derived: BTreeMap::new(),
            consistency: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub(crate) fn param(&mut self, key: &str, value: impl Into<Quantity>) {
        self.parameters.insert(key.to_string(), value.into());
    }

    pub(crate) fn derive(&mut self, key: &str, value: impl Into<Quantity>) {
        self.derived.insert(key.to_string(), value.into());
    }

    pub fn table(&self, name: &str) -> Option<&ExactTable> {
        self.exact.iter().find(|t| t.name == name)
    }

    pub fn sampled_table(&self, name: &str) -> Option<&SampledTable> {
        self.sampled.iter().find(|t| t.name == name)
    }

    pub fn real(&self, key: &str) -> Option<f64> {
        self.derived.get(key).and_then(Quantity::as_real)
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.derived.get(key).and_then(Quantity::as_text)
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.derived.get(key).and_then(Quantity::as_flag)
    }

    /// Every exact probability lies in `[0, 1]` and every table sums to 1.
    pub fn check_tables(&self) -> Result<(), ScenarioError> {
        for t in &self.exact {
            if let Some(r) = t.rows.iter().find(|r| !(-0.0..=1.0 + TABLE_SUM_TOL).contains(&r.probability)) {
                return Err(ScenarioError::Check(format!(
                    "table {} row {} has probability {}",
                    t.name, r.label, r.probability
                )));
            }
            let total = t.total();
            if (total - 1.0).abs() > TABLE_SUM_TOL {
                return Err(ScenarioError::Check(format!("table {} sums to {total}", t.name)));
            }
        }
        Ok(())
    }
}

/// Validates `|α|² + |β|² = 1` and returns `(|α|², |β|²)`.
pub(crate) fn amplitude_weights(alpha: C64, beta: C64) -> Result<(f64, f64), ScenarioError> {
    let (a2, b2) = (alpha.norm_sqr(), beta.norm_sqr());
    if !(a2.is_finite() && b2.is_finite()) || (a2 + b2 - 1.0).abs() > AMPLITUDE_NORM_TOL {
        return Err(ScenarioError::InvalidParameter(format!(
            "|alpha|^2 + |beta|^2 = {} must equal 1",
            a2 + b2
        )));
    }
    Ok((a2, b2))
}

pub(crate) fn require_consistent(
    name: &str,
    report: &ConsistencyReport,
) -> Result<(), ScenarioError> {
    if report.consistent {
        Ok(())
    } else {
        Err(ScenarioError::Inconsistent {
            name: name.to_string(),
            measure: report.max_normalized_offdiag,
            epsilon: report.epsilon,
        })
    }
}
