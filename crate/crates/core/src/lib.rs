//! Consistent-histories simulation on small dense Hilbert spaces.
//!
//! The crate is layered bottom-up:
//!
//! * [`tensor`]: labeled tensor-product layouts, dense states and operators,
//!   Kronecker products, Hermitian propagators.
//! * [`histories`]: projector families, history sets, the decoherence
//!   functional, consistency checks, branch decompositions and sampling.
//! * [`robot`]: finite-automaton observers compiled into permutation
//!   unitaries, premeasurement couplings and a grid posterior.
//! * [`scenarios`]: end-to-end observer experiments built on the above.
//! * [`hourglass`]: the classical coarse-graining stability model.
//!
//! Inner loops (branch-vector construction, Gram matrices, dense products,
//! perturbation trials) run on rayon when the `parallel` feature is enabled
//! and fall back to sequential loops otherwise. Both paths use a fixed
//! reduction order, so results are bit-identical.

pub mod exec;
pub mod histories;
pub mod hourglass;
pub mod random;
pub mod robot;
pub mod scenarios;
pub mod tensor;

pub use num_complex::Complex64 as C64;

pub use exec::Execution;
