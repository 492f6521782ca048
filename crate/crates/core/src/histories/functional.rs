use serde::Serialize;

use crate::exec::{self, Execution};
use crate::tensor::{OperatorKind, OperatorMatrix, StateVector};
use crate::C64;

use super::branches::leaf_branches;
use super::{History, HistoryError, HistorySet};

/// Default limit on the number of histories in a dense decoherence matrix.
pub const DEFAULT_HISTORY_CAP: usize = 4096;

#[derive(Debug, Clone, Copy)]
pub struct FunctionalOptions {
    pub history_cap: usize,
    pub execution: Execution,
}

impl Default for FunctionalOptions {
    fn default() -> Self {
        Self {
            history_cap: DEFAULT_HISTORY_CAP,
            execution: Execution::default(),
        }
    }
}

/// `D[α, α′]` over all history pairs, rows in mixed-radix history order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecoherenceMatrix {
    histories: Vec<History>,
    labels: Vec<String>,
    #[serde(skip)]
    entries: Vec<C64>,
}

impl DecoherenceMatrix {
    pub(crate) fn from_parts(histories: Vec<History>, labels: Vec<String>, entries: Vec<C64>) -> Self {
        debug_assert_eq!(entries.len(), histories.len() * histories.len());
        Self {
            histories,
            labels,
            entries,
        }
    }

    /// Number of histories.
    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn histories(&self) -> &[History] {
        &self.histories
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row_of(&self, history: &[usize]) -> Option<usize> {
        self.histories.iter().position(|h| h == history)
    }

    #[inline]
    pub fn entry(&self, a: usize, b: usize) -> C64 {
        self.entries[a * self.len() + b]
    }

    pub fn entry_for(&self, a: &[usize], b: &[usize]) -> Option<C64> {
        Some(self.entry(self.row_of(a)?, self.row_of(b)?))
    }

    /// Real parts of the diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.entry(i, i).re).collect()
    }

    pub fn diagonal_sum(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// `max |D[a,b] − conj(D[b,a])|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.len();
        let mut dev: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                dev = dev.max((self.entry(a, b) - self.entry(b, a).conj()).norm());
            }
        }
        dev
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Smallest eigenvalue of the (Hermitian) matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let n = self.len();
        let m = nalgebra::DMatrix::from_fn(n, n, |i, j| self.entry(i, j));
        nalgebra::SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// `U(t_i)† P^i_k U(t_i)`.
pub fn heisenberg_projector(
    set: &HistorySet,
    i: usize,
    k: usize,
) -> Result<OperatorMatrix, HistoryError> {
    let family = set.family(i)?;
    if k >= family.len() {
        return Err(HistoryError::IndexOutOfRange {
            index: k,
            len: family.len(),
        });
    }
    let u = set.evolution_to_time(i)?;
    Ok(family
        .projector(k)
        .conjugate_by(&u)?
        .with_kind(OperatorKind::Projector))
}

/// `C_α = P^N_{α_N}(t_N) ··· P^1_{α_1}(t_1)`, latest time leftmost.
pub fn history_operator(set: &HistorySet, alpha: &[usize]) -> Result<OperatorMatrix, HistoryError> {
    set.row_of(alpha)?;
    let mut c = OperatorMatrix::identity(set.psi0().layout().clone())?;
    for (i, &a) in alpha.iter().enumerate() {
        c = heisenberg_projector(set, i, a)?.matmul(&c)?;
    }
    Ok(c.with_kind(OperatorKind::General))
}

/// `C_α ψ0`, built in the Schrödinger picture and mapped back with
/// `U(t_N)†`.
pub fn branch_vector(set: &HistorySet, alpha: &[usize]) -> Result<StateVector, HistoryError> {
    set.row_of(alpha)?;
    let mut psi = set.psi0().clone();
    for (i, &a) in alpha.iter().enumerate() {
        psi = set.interval(i).apply(&psi)?;
        psi = set.families()[i].apply(a, &psi);
    }
    let u = set.evolution_to_time(set.len() - 1)?;
    Ok(u.adjoint().apply(&psi)?)
}

pub fn decoherence_functional(set: &HistorySet) -> Result<DecoherenceMatrix, HistoryError> {
    decoherence_functional_with(set, &FunctionalOptions::default())
}

/// `D[α, α′] = ⟨branch_α′ | branch_α⟩` from Schrödinger-picture branch
/// vectors at the final time. The final `U(t_N)†` drops out of every inner
/// product, so it is never applied.
pub fn decoherence_functional_with(
    set: &HistorySet,
    options: &FunctionalOptions,
) -> Result<DecoherenceMatrix, HistoryError> {
    let count = set.history_count();
    if count > options.history_cap {
        return Err(HistoryError::Capacity {
            count,
            cap: options.history_cap,
        });
    }
    let leaves = leaf_branches(set, options.execution)?;
    let zero: Vec<bool> = leaves
        .iter()
        .map(|v| v.amplitudes().iter().all(|a| *a == C64::new(0.0, 0.0)))
        .collect();
    let n = leaves.len();
    let rows = exec::map_indexed(options.execution, n, |a| {
        let mut row = vec![C64::new(0.0, 0.0); n - a];
        if !zero[a] {
            for (b, slot) in (a..n).zip(row.iter_mut()) {
                if !zero[b] {
                    *slot = crate::tensor::inner_product(&leaves[b], &leaves[a]);
                }
            }
        }
        row
    });
    let mut entries = vec![C64::new(0.0, 0.0); n * n];
    for (a, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let b = a + off;
            entries[a * n + b] = v;
            entries[b * n + a] = v.conj();
        }
    }
    let histories: Vec<History> = set.histories().collect();
    let labels = histories.iter().map(|h| set.label(h)).collect();
    Ok(DecoherenceMatrix::from_parts(histories, labels, entries))
}
