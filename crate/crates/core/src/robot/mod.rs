//! Finite-automaton observers compiled into permutation unitaries, pointer
//! premeasurements and a grid posterior over `|α|²`.
//!
//! A robot is a pointer register `A` (one value per reading, `0` meaning no
//! reading yet), a brain register `B` holding the automaton state, optional
//! per-step archive registers `a_s`, `b_s`, and the measured system
//! registers.

mod automaton;
mod compile;
mod layout;
mod measurement;
mod posterior;

pub use automaton::Automaton;
pub use compile::{automaton_permutation, compile_automaton_step};
pub use layout::RobotLayout;
pub use measurement::{measurement_unitary, premeasurement};
pub use posterior::{bayes_update, posterior_summary, Posterior, PosteriorSummary};

use thiserror::Error;

use crate::histories::FamilyError;
use crate::tensor::TensorError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RobotError {
    #[error("automaton needs at least one state and one input")]
    EmptyAutomaton,
    #[error("transition table has {found} entries, expected {expected}")]
    TableShape { expected: usize, found: usize },
    #[error("transition ({state}, {input}) -> {target} is out of range")]
    TransitionOutOfRange { state: usize, input: usize, target: usize },
    #[error("initial state {0} is out of range")]
    InitialOutOfRange(usize),
    #[error("transition is not injective for input {input}; enable archiving")]
    NotColumnInjective { input: usize },
    #[error("step {step} is outside the step budget of {budget}")]
    StepOutOfBudget { step: usize, budget: usize },
    #[error("archive registers of step {step} are not in their zero state")]
    ArchiveNotClear { step: usize },
    #[error("pointer dimension {pointer} cannot hold {needed} readings")]
    PointerTooSmall { pointer: usize, needed: usize },
    #[error("measured family lives on a space of dimension {found}, system register has {expected}")]
    SystemMismatch { expected: usize, found: usize },
    #[error("posterior grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("invalid posterior: {0}")]
    InvalidPosterior(String),
    #[error("n1 = {n1} exceeds n = {n}")]
    CountOrder { n1: u64, n: u64 },
    #[error("credible level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
