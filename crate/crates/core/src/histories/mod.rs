//! Projector families, history sets and the decoherence functional.
//!
//! A history is a tuple of alternative indices, one per time. History sets
//! enumerate their histories in mixed-radix order with the earliest time as
//! the most significant digit; that order is also the row order of every
//! [`DecoherenceMatrix`].

mod branches;
mod consistency;
mod decohere;
mod family;
mod functional;
mod measure;
mod set;

pub use branches::{branch_components, BranchNode, BranchTree, PRUNE_NORM_SQR};
pub use consistency::{
    branch_probabilities, check_consistency, coarse_grain, ConsistencyReport, ProbabilityTable,
    DEFAULT_EPSILON, ZERO_PROBABILITY,
};
pub use decohere::decohere;
pub use family::ProjectorFamily;
pub use functional::{
    branch_vector, decoherence_functional, decoherence_functional_with, heisenberg_projector,
    history_operator, DecoherenceMatrix, FunctionalOptions, DEFAULT_HISTORY_CAP,
};
pub use measure::{projective_measure, sample_histories, sample_history, Measurement};
pub use set::{Dynamics, HistorySet};

use thiserror::Error;

use crate::tensor::TensorError;

/// One alternative index per time.
pub type History = Vec<usize>;

/// Validation failures for [`ProjectorFamily`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("family has no projectors")]
    Empty,
    #[error("projector {index} is on a different layout")]
    LayoutMismatch { index: usize },
    #[error("member {index} is not a projector (max deviation {deviation:e})")]
    NotProjector { index: usize, deviation: f64 },
    #[error("members {i} and {j} are not orthogonal (max |P_i P_j| = {deviation:e})")]
    NotOrthogonal { i: usize, j: usize, deviation: f64 },
    #[error("family is not exhaustive (max |ΣP − I| = {deviation:e})")]
    NotExhaustive { deviation: f64 },
    #[error("{labels} labels for {projectors} projectors")]
    LabelCount { labels: usize, projectors: usize },
    #[error("family is not rank-1 (member {index} has rank {rank:.3})")]
    NotRankOne { index: usize, rank: f64 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("history set needs at least one time")]
    NoTimes,
    #[error("times must be strictly increasing (index {index})")]
    NonIncreasingTimes { index: usize },
    #[error("first time must be >= 0 for Hamiltonian dynamics")]
    NegativeFirstTime,
    #[error("{families} families for {times} times")]
    FamilyCountMismatch { families: usize, times: usize },
    #[error("{steps} step unitaries for {times} times")]
    StepCountMismatch { steps: usize, times: usize },
    #[error("layout mismatch in {0}")]
    LayoutMismatch(String),
    #[error("step {index} is not unitary (max deviation {deviation:e})")]
    NonUnitaryStep { index: usize, deviation: f64 },
    #[error("initial state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },
    #[error("invalid history {history:?}")]
    InvalidHistory { history: History },
    #[error("time index {index} out of range ({len} times)")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("{count} histories exceed the cap of {cap}")]
    Capacity { count: usize, cap: usize },
    #[error("set is inconsistent (normalized off-diagonal {measure:e} > epsilon {epsilon:e}); probabilities are undefined")]
    Inconsistent { measure: f64, epsilon: f64 },
    #[error("diagonal entry for {history:?} is {value:e}, below the clamp threshold")]
    NegativeProbability { history: History, value: f64 },
    #[error("grouping is not a partition: {0}")]
    NotPartition(String),
    #[error("invalid density operator: {0}")]
    InvalidDensity(String),
    #[error("every outcome has probability below 1e-15")]
    DegenerateMeasurement,
    #[error("time must be >= 0, got {0}")]
    NegativeTime(f64),
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
