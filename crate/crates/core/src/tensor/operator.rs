use serde::Serialize;

use crate::exec::{self, Execution};
use crate::C64;

use super::state::inner_slices;
use super::{SpaceLayout, StateVector, TensorError, MAX_DENSE_DIM};

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Structural claim attached to an operator. Claims are hints only; use
/// [`validate_operator`] before relying on one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    General,
    Hermitian,
    Unitary,
    Projector,
}

/// Dense square matrix on a layout, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    layout: SpaceLayout,
    data: Vec<C64>,
    kind: OperatorKind,
}

fn check_cap(layout: &SpaceLayout) -> Result<usize, TensorError> {
    let n = layout.total_dim();
    if n > MAX_DENSE_DIM {
        return Err(TensorError::Capacity {
            dim: n,
            cap: MAX_DENSE_DIM,
        });
    }
    Ok(n)
}

impl OperatorMatrix {
    pub fn zeros(layout: SpaceLayout) -> Result<Self, TensorError> {
        let n = check_cap(&layout)?;
        Ok(Self {
            layout,
            data: vec![ZERO; n * n],
            kind: OperatorKind::General,
        })
    }

    pub fn identity(layout: SpaceLayout) -> Result<Self, TensorError> {
        let mut m = Self::zeros(layout)?;
        let n = m.dim();
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m.kind = OperatorKind::Unitary;
        Ok(m)
    }

    /// Row-major entries.
    pub fn from_vec(layout: SpaceLayout, data: Vec<C64>) -> Result<Self, TensorError> {
        let n = check_cap(&layout)?;
        if data.len() != n * n {
            return Err(TensorError::LengthMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        Ok(Self {
            layout,
            data,
            kind: OperatorKind::General,
        })
    }

    pub fn from_rows(layout: SpaceLayout, rows: &[Vec<C64>]) -> Result<Self, TensorError> {
        let n = layout.total_dim();
        if rows.len() != n {
            return Err(TensorError::LengthMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(TensorError::LengthMismatch {
                    expected: n,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(layout, data)
    }

    pub fn from_real_rows(layout: SpaceLayout, rows: &[&[f64]]) -> Result<Self, TensorError> {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(layout, &rows)
    }

    pub fn from_fn(
        layout: SpaceLayout,
        f: impl Fn(usize, usize) -> C64,
    ) -> Result<Self, TensorError> {
        let n = check_cap(&layout)?;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self::from_vec(layout, data)
    }

    pub fn diagonal(layout: SpaceLayout, diag: &[C64]) -> Result<Self, TensorError> {
        let n = layout.total_dim();
        if diag.len() != n {
            return Err(TensorError::LengthMismatch {
                expected: n,
                found: diag.len(),
            });
        }
        let mut m = Self::zeros(layout)?;
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        Ok(m)
    }

    /// |ψ⟩⟨φ|.
    pub fn outer(psi: &StateVector, phi: &StateVector) -> Result<Self, TensorError> {
        if psi.layout() != phi.layout() {
            return Err(TensorError::LayoutMismatch);
        }
        let a = psi.amplitudes();
        let b = phi.amplitudes();
        Self::from_fn(psi.layout().clone(), |i, j| a[i] * b[j].conj())
    }

    /// |ψ⟩⟨ψ| for a normalized ψ, tagged as a projector.
    pub fn projector_onto(psi: &StateVector) -> Result<Self, TensorError> {
        Ok(Self::outer(psi, psi)?.with_kind(OperatorKind::Projector))
    }

    /// Matrix with `U|j⟩ = |perm[j]⟩`.
    pub fn permutation(layout: SpaceLayout, perm: &[usize]) -> Result<Self, TensorError> {
        let mut m = Self::zeros(layout)?;
        let n = m.dim();
        if perm.len() != n {
            return Err(TensorError::LengthMismatch {
                expected: n,
                found: perm.len(),
            });
        }
        for (j, &i) in perm.iter().enumerate() {
            m.data[i * n + j] = ONE;
        }
        m.kind = OperatorKind::Unitary;
        Ok(m)
    }

    pub fn with_kind(mut self, kind: OperatorKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let n = self.dim();
        &self.data[i * n..(i + 1) * n]
    }

    /// Same entries relabeled onto another layout of equal dimension.
    pub fn relabel(&self, layout: SpaceLayout) -> Result<Self, TensorError> {
        if layout.total_dim() != self.dim() {
            return Err(TensorError::LayoutMismatch);
        }
        Ok(Self {
            layout,
            data: self.data.clone(),
            kind: self.kind,
        })
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self {
            layout: self.layout.clone(),
            data,
            kind: self.kind,
        }
    }

    pub fn trace(&self) -> C64 {
        let n = self.dim();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            data: self.data.iter().map(|x| x * c).collect(),
            kind: OperatorKind::General,
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, TensorError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self, TensorError> {
        if self.layout != other.layout {
            return Err(TensorError::LayoutMismatch);
        }
        Ok(Self {
            layout: self.layout.clone(),
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
            kind: OperatorKind::General,
        })
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Matrix product `self · other`.
    pub fn matmul(&self, other: &Self) -> Result<Self, TensorError> {
        self.matmul_with(other, Execution::default())
    }

    pub fn matmul_with(&self, other: &Self, exec: Execution) -> Result<Self, TensorError> {
        if self.layout != other.layout {
            return Err(TensorError::LayoutMismatch);
        }
        let n = self.dim();
        let mut data = vec![ZERO; n * n];
        let exec = if n < 64 { Execution::Sequential } else { exec };
        exec::fill_chunks(exec, &mut data, n, |i, out_row| {
            let a_row = &self.data[i * n..(i + 1) * n];
            for (k, &a) in a_row.iter().enumerate() {
                // permutation and projector factors are mostly zeros
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        });
        let kind = match (self.kind, other.kind) {
            (OperatorKind::Unitary, OperatorKind::Unitary) => OperatorKind::Unitary,
            _ => OperatorKind::General,
        };
        Ok(Self {
            layout: self.layout.clone(),
            data,
            kind,
        })
    }

    /// `U† · self · U`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self, TensorError> {
        let kind = self.kind;
        Ok(u.adjoint().matmul(&self.matmul(u)?)?.with_kind(kind))
    }

    /// Matrix-vector product.
    pub fn apply(&self, psi: &StateVector) -> Result<StateVector, TensorError> {
        if &self.layout != psi.layout() {
            return Err(TensorError::LayoutMismatch);
        }
        let n = self.dim();
        let x = psi.amplitudes();
        let mut out = vec![ZERO; n];
        let support: Vec<usize> = (0..n).filter(|&j| x[j] != ZERO).collect();
        if support.len() < n / 4 {
            // branch states are often supported on a few basis vectors
            for (i, o) in out.iter_mut().enumerate() {
                let row = &self.data[i * n..(i + 1) * n];
                let mut acc = ZERO;
                for &j in &support {
                    acc += row[j] * x[j];
                }
                *o = acc;
            }
            return StateVector::new(self.layout.clone(), out);
        }
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = ZERO;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *o = acc;
        }
        StateVector::new(self.layout.clone(), out)
    }

    /// ⟨ψ|A|ψ⟩.
    pub fn expectation(&self, psi: &StateVector) -> Result<C64, TensorError> {
        let a_psi = self.apply(psi)?;
        Ok(inner_slices(psi.amplitudes(), a_psi.amplitudes()))
    }

    /// Diagonal entries if every off-diagonal entry is exactly zero.
    pub fn diagonal_entries(&self) -> Option<Vec<C64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.data[i * n + j] != ZERO {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.data[i * n + i]).collect())
    }

    /// Lifts an operator on the factors `labels` (in that order) to the full
    /// `layout`, acting as the identity on every other factor.
    pub fn embed(&self, layout: &SpaceLayout, labels: &[&str]) -> Result<Self, TensorError> {
        let positions: Vec<usize> = labels
            .iter()
            .map(|l| layout.require(l))
            .collect::<Result<_, _>>()?;
        let sub = layout.select(&positions)?;
        if sub.total_dim() != self.dim() {
            return Err(TensorError::LayoutMismatch);
        }
        let n = check_cap(layout)?;
        // split each full index into (local index, index over the rest)
        let mut local = vec![0usize; n];
        let mut rest = vec![0usize; n];
        let mut digits = vec![0usize; layout.len()];
        for idx in 0..n {
            layout.digits_into(idx, &mut digits);
            let mut l = 0;
            for &p in &positions {
                l = l * layout.factors()[p].dim + digits[p];
            }
            let mut r = 0;
            for (p, f) in layout.factors().iter().enumerate() {
                if !positions.contains(&p) {
                    r = r * f.dim + digits[p];
                }
            }
            local[idx] = l;
            rest[idx] = r;
        }
        let d = self.dim();
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                if rest[i] == rest[j] {
                    data[i * n + j] = self.data[local[i] * d + local[j]];
                }
            }
        }
        Ok(Self {
            layout: layout.clone(),
            data,
            kind: self.kind,
        })
    }
}

/// Outcome of [`validate_operator`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub kind: OperatorKind,
    pub passed: bool,
    pub max_deviation: f64,
}

fn hermitian_deviation(op: &OperatorMatrix) -> f64 {
    let n = op.dim();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((op.get(i, j) - op.get(j, i).conj()).norm());
        }
    }
    dev
}

/// Checks a structural claim about `op` at tolerance `tol`.
///
/// Hermitian: `max|A − A†|`. Unitary: `max|A†A − I|`. Projector: the larger
/// of the Hermitian deviation and `max|A² − A|`. `General` always passes.
pub fn validate_operator(op: &OperatorMatrix, kind: OperatorKind, tol: f64) -> ValidationReport {
    let max_deviation = match kind {
        OperatorKind::General => 0.0,
        OperatorKind::Hermitian => hermitian_deviation(op),
        OperatorKind::Unitary => {
            let prod = op
                .adjoint()
                .matmul_with(op, Execution::Sequential)
                .expect("same layout");
            let n = op.dim();
            let mut dev: f64 = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let target = if i == j { ONE } else { ZERO };
                    dev = dev.max((prod.get(i, j) - target).norm());
                }
            }
            dev
        }
        OperatorKind::Projector => {
            let sq = op.matmul(op).expect("same layout");
            hermitian_deviation(op).max(sq.max_abs_diff(op))
        }
    };
    ValidationReport {
        kind,
        passed: max_deviation <= tol,
        max_deviation,
    }
}
