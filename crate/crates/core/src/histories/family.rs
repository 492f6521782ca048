use crate::tensor::{
    validate_operator, OperatorKind, OperatorMatrix, SpaceLayout, StateVector,
};
use crate::C64;

use super::FamilyError;

/// Exhaustive set of mutually orthogonal projectors.
#[derive(Debug, Clone)]
pub struct ProjectorFamily {
    layout: SpaceLayout,
    projectors: Vec<OperatorMatrix>,
    labels: Vec<String>,
    // real 0/1-ish diagonals for projectors with no off-diagonal entries
    masks: Vec<Option<Vec<f64>>>,
}

impl ProjectorFamily {
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn new(
        layout: SpaceLayout,
        projectors: Vec<OperatorMatrix>,
        labels: Vec<String>,
        tol: f64,
    ) -> Result<Self, FamilyError> {
        if projectors.is_empty() {
            return Err(FamilyError::Empty);
        }
        if labels.len() != projectors.len() {
            return Err(FamilyError::LabelCount {
                labels: labels.len(),
                projectors: projectors.len(),
            });
        }
        for (index, p) in projectors.iter().enumerate() {
            if p.layout() != &layout {
                return Err(FamilyError::LayoutMismatch { index });
            }
            let r = validate_operator(p, OperatorKind::Projector, tol);
            if !r.passed {
                return Err(FamilyError::NotProjector {
                    index,
                    deviation: r.max_deviation,
                });
            }
        }
        for i in 0..projectors.len() {
            for j in i + 1..projectors.len() {
                let deviation = projectors[i].matmul(&projectors[j])?.max_abs();
                if deviation > tol {
                    return Err(FamilyError::NotOrthogonal { i, j, deviation });
                }
            }
        }
        let deviation = exhaustive_deviation(&layout, &projectors)?;
        if deviation > tol {
            return Err(FamilyError::NotExhaustive { deviation });
        }
        let masks = projectors
            .iter()
            .map(|p| {
                p.diagonal_entries()
                    .map(|d| d.into_iter().map(|c| c.re).collect())
            })
            .collect();
        let projectors = projectors
            .into_iter()
            .map(|p| p.with_kind(OperatorKind::Projector))
            .collect();
        Ok(Self {
            layout,
            projectors,
            labels,
            masks,
        })
    }

    /// Rank-1 family from an orthonormal basis.
    pub fn from_basis(
        layout: SpaceLayout,
        basis: &[StateVector],
        labels: Vec<String>,
    ) -> Result<Self, FamilyError> {
        let groups: Vec<Vec<StateVector>> = basis.iter().map(|v| vec![v.clone()]).collect();
        Self::from_subspaces(layout, &groups, labels)
    }

    /// One projector per group of orthonormal vectors, `Σ_v |v⟩⟨v|`.
    pub fn from_subspaces(
        layout: SpaceLayout,
        groups: &[Vec<StateVector>],
        labels: Vec<String>,
    ) -> Result<Self, FamilyError> {
        let mut projectors = Vec::with_capacity(groups.len());
        for g in groups {
            let mut p = OperatorMatrix::zeros(layout.clone())?;
            for v in g {
                p = p.add(&OperatorMatrix::outer(v, v)?)?;
            }
            projectors.push(p);
        }
        Self::new(layout, projectors, labels, Self::DEFAULT_TOL)
    }

    /// Projectors onto each value of factor `label`, identity elsewhere.
    pub fn factor_values(layout: &SpaceLayout, label: &str) -> Result<Self, FamilyError> {
        let pos = layout.require(label)?;
        let d = layout.factors()[pos].dim;
        let labels = (0..d).map(|v| format!("{label}={v}")).collect();
        Self::from_predicate(layout, d, labels, |digits| digits[pos])
    }

    /// Diagonal family assigning each basis vector to the alternative
    /// `classify(digits)`.
    pub fn from_predicate(
        layout: &SpaceLayout,
        count: usize,
        labels: Vec<String>,
        classify: impl Fn(&[usize]) -> usize,
    ) -> Result<Self, FamilyError> {
        let n = layout.total_dim();
        let mut diags = vec![vec![C64::new(0.0, 0.0); n]; count];
        let mut digits = vec![0; layout.len()];
        for i in 0..n {
            layout.digits_into(i, &mut digits);
            let k = classify(&digits);
            diags[k][i] = C64::new(1.0, 0.0);
        }
        let projectors = diags
            .iter()
            .map(|d| OperatorMatrix::diagonal(layout.clone(), d))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layout.clone(), projectors, labels, Self::DEFAULT_TOL)
    }

    /// Lifts a family defined on the factors `labels` of `layout`.
    pub fn embed(&self, layout: &SpaceLayout, labels: &[&str]) -> Result<Self, FamilyError> {
        let projectors = self
            .projectors
            .iter()
            .map(|p| p.embed(layout, labels))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layout.clone(), projectors, self.labels.clone(), Self::DEFAULT_TOL)
    }

    /// Same projectors relabeled onto a layout of equal dimension.
    pub fn relabel(&self, layout: &SpaceLayout) -> Result<Self, FamilyError> {
        let projectors = self
            .projectors
            .iter()
            .map(|p| p.relabel(layout.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(layout.clone(), projectors, self.labels.clone(), Self::DEFAULT_TOL)
    }

    /// Joint family `{P_i Q_j}` of two commuting families.
    pub fn joint(&self, other: &Self) -> Result<Self, FamilyError> {
        let mut projectors = Vec::new();
        let mut labels = Vec::new();
        for (p, lp) in self.projectors.iter().zip(&self.labels) {
            for (q, lq) in other.projectors.iter().zip(&other.labels) {
                projectors.push(p.matmul(q)?);
                labels.push(format!("{lp}&{lq}"));
            }
        }
        Self::new(self.layout.clone(), projectors, labels, Self::DEFAULT_TOL)
    }

    pub fn layout(&self) -> &SpaceLayout {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    pub fn projector(&self, k: usize) -> &OperatorMatrix {
        &self.projectors[k]
    }

    pub fn projectors(&self) -> &[OperatorMatrix] {
        &self.projectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Rank of each projector (its trace).
    pub fn ranks(&self) -> Vec<f64> {
        self.projectors.iter().map(|p| p.trace().re).collect()
    }

    pub fn require_rank_one(&self) -> Result<(), FamilyError> {
        for (index, rank) in self.ranks().into_iter().enumerate() {
            if (rank - 1.0).abs() > 1e-8 {
                return Err(FamilyError::NotRankOne { index, rank });
            }
        }
        Ok(())
    }

    /// `P_k ψ`.
    pub fn apply(&self, k: usize, psi: &StateVector) -> StateVector {
        assert_eq!(psi.layout(), &self.layout, "family/state layout mismatch");
        match &self.masks[k] {
            Some(mask) => {
                let amps = psi
                    .amplitudes()
                    .iter()
                    .zip(mask)
                    .map(|(a, &m)| if m == 0.0 { C64::new(0.0, 0.0) } else { a * m })
                    .collect();
                StateVector::new(self.layout.clone(), amps).expect("same layout")
            }
            None => self.projectors[k].apply(psi).expect("same layout"),
        }
    }

    /// `‖P_k ψ‖²`.
    pub fn probability(&self, k: usize, psi: &StateVector) -> f64 {
        match &self.masks[k] {
            Some(mask) => psi
                .amplitudes()
                .iter()
                .zip(mask)
                .map(|(a, m)| a.norm_sqr() * m * m)
                .sum(),
            None => self.apply(k, psi).norm_sqr(),
        }
    }
}

fn exhaustive_deviation(
    layout: &SpaceLayout,
    projectors: &[OperatorMatrix],
) -> Result<f64, FamilyError> {
    let mut sum = OperatorMatrix::zeros(layout.clone())?;
    for p in projectors {
        sum = sum.add(p)?;
    }
    Ok(sum.max_abs_diff(&OperatorMatrix::identity(layout.clone())?))
}
