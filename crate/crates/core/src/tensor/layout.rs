use serde::{Deserialize, Serialize};

use super::TensorError;

/// One tensor factor: a label and its dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered list of labeled factors; the first factor is the most
/// significant digit of a basis index.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpaceLayout {
    factors: Vec<Factor>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl SpaceLayout {
    pub fn new<I, S>(factors: I) -> Result<Self, TensorError>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let factors: Vec<Factor> = factors
            .into_iter()
            .map(|(label, dim)| Factor {
                label: label.into(),
                dim,
            })
            .collect();
        Self::from_factors(factors)
    }

    pub fn from_factors(factors: Vec<Factor>) -> Result<Self, TensorError> {
        if factors.is_empty() {
            return Err(TensorError::EmptyLayout);
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(TensorError::ZeroDimension(f.label.clone()));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(TensorError::DuplicateLabel(f.label.clone()));
            }
        }
        let mut strides = vec![1usize; factors.len()];
        let mut total: usize = 1;
        for i in (0..factors.len()).rev() {
            strides[i] = total;
            total = total
                .checked_mul(factors[i].dim)
                .ok_or(TensorError::DimensionOverflow)?;
        }
        Ok(Self {
            factors,
            strides,
            total_dim: total,
        })
    }

    /// Single-factor layout.
    pub fn single(label: impl Into<String>, dim: usize) -> Result<Self, TensorError> {
        Self::new([(label.into(), dim)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn require(&self, label: &str) -> Result<usize, TensorError> {
        self.position(label)
            .ok_or_else(|| TensorError::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Option<usize> {
        self.position(label).map(|p| self.factors[p].dim)
    }

    /// Mixed-radix digits of a basis index.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.factors.len()];
        self.digits_into(index, &mut out);
        out
    }

    pub fn digits_into(&self, mut index: usize, out: &mut [usize]) {
        debug_assert!(index < self.total_dim);
        for i in (0..self.factors.len()).rev() {
            let d = self.factors[i].dim;
            out[i] = index % d;
            index /= d;
        }
    }

    /// Basis index of a digit tuple.
    pub fn index(&self, digits: &[usize]) -> Result<usize, TensorError> {
        if digits.len() != self.factors.len() {
            return Err(TensorError::LengthMismatch {
                expected: self.factors.len(),
                found: digits.len(),
            });
        }
        let mut idx = 0;
        for ((&d, f), &s) in digits.iter().zip(&self.factors).zip(&self.strides) {
            if d >= f.dim {
                return Err(TensorError::DigitOutOfRange { digit: d, dim: f.dim });
            }
            idx += d * s;
        }
        Ok(idx)
    }

    /// Digit of factor `pos` in basis index `index`.
    #[inline]
    pub fn digit(&self, index: usize, pos: usize) -> usize {
        (index / self.strides[pos]) % self.factors[pos].dim
    }

    /// Layout of `self` followed by `other`.
    pub fn concat(&self, other: &SpaceLayout) -> Result<SpaceLayout, TensorError> {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        Self::from_factors(f)
    }

    /// Sub-layout formed by the factors at `positions`, in the given order.
    pub fn select(&self, positions: &[usize]) -> Result<SpaceLayout, TensorError> {
        Self::from_factors(positions.iter().map(|&p| self.factors[p].clone()).collect())
    }
}

impl std::fmt::Display for SpaceLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| format!("{}:{}", x.label, x.dim))
            .collect();
        write!(f, "[{}]", parts.join(" ⊗ "))
    }
}
