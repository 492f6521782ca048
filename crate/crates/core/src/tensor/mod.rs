//! Dense complex linear algebra over labeled tensor-product spaces.
//!
//! Basis convention: the first listed factor is the most significant
//! mixed-radix digit, so for factors `(A, dA), (B, dB)` the basis vector
//! `|a, b⟩` sits at index `a * dB + b`.

mod kron;
mod layout;
mod operator;
mod permutation;
mod spectral;
mod state;

pub use kron::{kron_operators, kron_states, tensor_product, TensorFactor, TensorProduct};
pub use layout::{Factor, SpaceLayout};
pub use operator::{validate_operator, OperatorKind, OperatorMatrix, ValidationReport};
pub use permutation::LocalPermutation;
pub use spectral::{propagator, Spectrum};
pub use state::{inner_product, StateVector};

use thiserror::Error;

/// Largest total dimension for which dense operators are materialized.
pub const MAX_DENSE_DIM: usize = 4096;

/// Tolerance used when an operation requires a Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("duplicate factor label `{0}`")]
    DuplicateLabel(String),
    #[error("factor `{0}` has dimension 0")]
    ZeroDimension(String),
    #[error("layout has no factors")]
    EmptyLayout,
    #[error("total dimension overflows usize")]
    DimensionOverflow,
    #[error("unknown factor label `{0}`")]
    UnknownLabel(String),
    #[error("expected {expected} entries, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("layouts do not match")]
    LayoutMismatch,
    #[error("tensor product mixes states and operators")]
    MixedKinds,
    #[error("tensor product of an empty list")]
    EmptyProduct,
    #[error("operator is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("dense dimension {dim} exceeds the cap of {cap}")]
    Capacity { dim: usize, cap: usize },
    #[error("digit {digit} out of range for factor of dimension {dim}")]
    DigitOutOfRange { digit: usize, dim: usize },
    #[error("partial map is not injective: {0}")]
    NotInjective(String),
}
