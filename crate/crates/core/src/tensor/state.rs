use std::ops::{Add, Sub};

use crate::C64;

use super::{SpaceLayout, TensorError};

/// Complex amplitudes over a [`SpaceLayout`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: SpaceLayout,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(layout: SpaceLayout, amps: Vec<C64>) -> Result<Self, TensorError> {
        if amps.len() != layout.total_dim() {
            return Err(TensorError::LengthMismatch {
                expected: layout.total_dim(),
                found: amps.len(),
            });
        }
        Ok(Self { layout, amps })
    }

    pub fn from_real(layout: SpaceLayout, amps: &[f64]) -> Result<Self, TensorError> {
        Self::new(layout, amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(layout: SpaceLayout) -> Self {
        let n = layout.total_dim();
        Self {
            layout,
            amps: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn basis(layout: SpaceLayout, index: usize) -> Result<Self, TensorError> {
        if index >= layout.total_dim() {
            return Err(TensorError::DigitOutOfRange {
                digit: index,
                dim: layout.total_dim(),
            });
        }
        let mut s = Self::zeros(layout);
        s.amps[index] = C64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_digits(layout: SpaceLayout, digits: &[usize]) -> Result<Self, TensorError> {
        let idx = layout.index(digits)?;
        Self::basis(layout, idx)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Returns the normalized vector, or `None` for a zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| self.scaled(C64::new(1.0 / n, 0.0)))
    }

    /// Inner product ⟨self|other⟩, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> Result<C64, TensorError> {
        if self.layout != other.layout {
            return Err(TensorError::LayoutMismatch);
        }
        Ok(inner_slices(&self.amps, &other.amps))
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            layout: self.layout.clone(),
            amps: self.amps.iter().map(|a| a * c).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &StateVector) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Probability of the basis vector at `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }
}

/// ⟨a|b⟩ for states on the same layout, summed in index order.
pub fn inner_product(a: &StateVector, b: &StateVector) -> C64 {
    debug_assert_eq!(a.layout, b.layout);
    inner_slices(&a.amps, &b.amps)
}

/// Σ conj(a_i) b_i in index order.
#[inline]
pub(crate) fn inner_slices(a: &[C64], b: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x.conj() * y;
    }
    acc
}

impl Add for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.layout, rhs.layout, "layout mismatch in state addition");
        StateVector {
            layout: self.layout.clone(),
            amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.layout, rhs.layout, "layout mismatch in state subtraction");
        StateVector {
            layout: self.layout.clone(),
            amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a - b).collect(),
        }
    }
}
