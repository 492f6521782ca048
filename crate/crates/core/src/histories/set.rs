use crate::tensor::{
    validate_operator, OperatorKind, OperatorMatrix, Spectrum, StateVector,
};

use super::{History, HistoryError, ProjectorFamily};

/// Time evolution of a history set.
#[derive(Debug, Clone)]
pub enum Dynamics {
    /// Time-independent Hermitian Hamiltonian (ħ = 1).
    Hamiltonian(OperatorMatrix),
    /// One unitary per interval: entry `i` evolves from `t_{i-1}` to `t_i`
    /// with `t_0 = 0`. Between grid times the state is held fixed.
    Steps(Vec<OperatorMatrix>),
}

/// Initial state, dynamics and one projector family per time.
#[derive(Debug, Clone)]
pub struct HistorySet {
    psi0: StateVector,
    dynamics: Dynamics,
    times: Vec<f64>,
    families: Vec<ProjectorFamily>,
    spectrum: Option<Spectrum>,
    intervals: Vec<OperatorMatrix>,
    identity_interval: Vec<bool>,
}

const STEP_TOL: f64 = 1e-10;

impl HistorySet {
    pub fn new(
        psi0: StateVector,
        dynamics: Dynamics,
        times: Vec<f64>,
        families: Vec<ProjectorFamily>,
    ) -> Result<Self, HistoryError> {
        if times.is_empty() {
            return Err(HistoryError::NoTimes);
        }
        if let Some(index) = (1..times.len()).find(|&i| !(times[i] > times[i - 1])) {
            return Err(HistoryError::NonIncreasingTimes { index });
        }
        if families.len() != times.len() {
            return Err(HistoryError::FamilyCountMismatch {
                families: families.len(),
                times: times.len(),
            });
        }
        let norm = psi0.norm();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(HistoryError::NotNormalized { norm });
        }
        let layout = psi0.layout();
        if let Some(i) = families.iter().position(|f| f.layout() != layout) {
            return Err(HistoryError::LayoutMismatch(format!("family {i}")));
        }
        let (spectrum, intervals) = match &dynamics {
            Dynamics::Hamiltonian(h) => {
                if h.layout() != layout {
                    return Err(HistoryError::LayoutMismatch("Hamiltonian".into()));
                }
                if times[0] < 0.0 {
                    return Err(HistoryError::NegativeFirstTime);
                }
                let spec = Spectrum::new(h)?;
                let mut prev = 0.0;
                let intervals = times
                    .iter()
                    .map(|&t| {
                        let u = spec.propagator(t - prev);
                        prev = t;
                        u
                    })
                    .collect();
                (Some(spec), intervals)
            }
            Dynamics::Steps(steps) => {
                if steps.len() != times.len() {
                    return Err(HistoryError::StepCountMismatch {
                        steps: steps.len(),
                        times: times.len(),
                    });
                }
                for (index, u) in steps.iter().enumerate() {
                    if u.layout() != layout {
                        return Err(HistoryError::LayoutMismatch(format!("step {index}")));
                    }
                    let r = validate_operator(u, OperatorKind::Unitary, STEP_TOL);
                    if !r.passed {
                        return Err(HistoryError::NonUnitaryStep {
                            index,
                            deviation: r.max_deviation,
                        });
                    }
                }
                (None, steps.clone())
            }
        };
        let id = OperatorMatrix::identity(layout.clone())?;
        let identity_interval = intervals.iter().map(|u| u.max_abs_diff(&id) == 0.0).collect();
        Ok(Self {
            psi0,
            dynamics,
            times,
            families,
            spectrum,
            intervals,
            identity_interval,
        })
    }

    pub fn psi0(&self) -> &StateVector {
        &self.psi0
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn families(&self) -> &[ProjectorFamily] {
        &self.families
    }

    pub fn family(&self, i: usize) -> Result<&ProjectorFamily, HistoryError> {
        self.families.get(i).ok_or(HistoryError::IndexOutOfRange {
            index: i,
            len: self.families.len(),
        })
    }

    /// Number of projection times.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn family_sizes(&self) -> Vec<usize> {
        self.families.iter().map(|f| f.len()).collect()
    }

    /// Size of the history index space, saturating on overflow.
    pub fn history_count(&self) -> usize {
        self.families
            .iter()
            .try_fold(1usize, |acc, f| acc.checked_mul(f.len()))
            .unwrap_or(usize::MAX)
    }

    /// The history at mixed-radix position `row`.
    pub fn history_at(&self, mut row: usize) -> History {
        let mut h = vec![0; self.families.len()];
        for i in (0..self.families.len()).rev() {
            let n = self.families[i].len();
            h[i] = row % n;
            row /= n;
        }
        h
    }

    pub fn row_of(&self, history: &[usize]) -> Result<usize, HistoryError> {
        if history.len() != self.families.len()
            || history.iter().zip(&self.families).any(|(&a, f)| a >= f.len())
        {
            return Err(HistoryError::InvalidHistory {
                history: history.to_vec(),
            });
        }
        Ok(history
            .iter()
            .zip(&self.families)
            .fold(0, |acc, (&a, f)| acc * f.len() + a))
    }

    pub fn histories(&self) -> impl Iterator<Item = History> + '_ {
        (0..self.history_count()).map(|r| self.history_at(r))
    }

    /// Display label such as `z0,x+` built from family labels.
    pub fn label(&self, history: &[usize]) -> String {
        history
            .iter()
            .zip(&self.families)
            .map(|(&a, f)| f.labels()[a].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Unitary evolving from `t_{i-1}` to `t_i` (index `i` is zero-based).
    pub fn interval(&self, i: usize) -> &OperatorMatrix {
        &self.intervals[i]
    }

    pub(crate) fn interval_is_identity(&self, i: usize) -> bool {
        self.identity_interval[i]
    }

    /// `U(t_i)`: evolution from 0 to the `i`-th projection time.
    pub fn evolution_to_time(&self, i: usize) -> Result<OperatorMatrix, HistoryError> {
        if i >= self.times.len() {
            return Err(HistoryError::IndexOutOfRange {
                index: i,
                len: self.times.len(),
            });
        }
        if let Some(spec) = &self.spectrum {
            return Ok(spec.propagator(self.times[i]));
        }
        let mut u = self.intervals[0].clone();
        for step in &self.intervals[1..=i] {
            u = step.matmul(&u)?;
        }
        Ok(u)
    }

    /// Evolution from the last projection time before `t` up to `t`, or
    /// `None` when it is the identity. `last` is the number of projection
    /// times strictly before `t`.
    pub(crate) fn evolution_after(&self, last: usize, t: f64) -> Option<OperatorMatrix> {
        match &self.spectrum {
            Some(spec) => {
                let start = if last == 0 { 0.0 } else { self.times[last - 1] };
                Some(spec.propagator(t - start))
            }
            None => (last < self.times.len() && t == self.times[last])
                .then(|| self.intervals[last].clone()),
        }
    }

    /// `U(t)ψ0`.
    pub fn evolve(&self, t: f64) -> Result<StateVector, HistoryError> {
        if t < 0.0 {
            return Err(HistoryError::NegativeTime(t));
        }
        if let Some(spec) = &self.spectrum {
            return Ok(spec.propagator(t).apply(&self.psi0)?);
        }
        let mut psi = self.psi0.clone();
        for (u, &ti) in self.intervals.iter().zip(&self.times) {
            if ti <= t {
                psi = u.apply(&psi)?;
            }
        }
        Ok(psi)
    }

    /// The set restricted to its first `j` times (`1 <= j <= len`).
    pub fn truncated(&self, j: usize) -> Result<Self, HistoryError> {
        if j == 0 || j > self.times.len() {
            return Err(HistoryError::IndexOutOfRange {
                index: j,
                len: self.times.len(),
            });
        }
        let dynamics = match &self.dynamics {
            Dynamics::Hamiltonian(h) => Dynamics::Hamiltonian(h.clone()),
            Dynamics::Steps(s) => Dynamics::Steps(s[..j].to_vec()),
        };
        Self::new(
            self.psi0.clone(),
            dynamics,
            self.times[..j].to_vec(),
            self.families[..j].to_vec(),
        )
    }

    /// Equivalent set with explicit per-interval unitaries.
    pub fn to_steps(&self) -> Result<Self, HistoryError> {
        Self::new(
            self.psi0.clone(),
            Dynamics::Steps(self.intervals.clone()),
            self.times.clone(),
            self.families.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::SpaceLayout;

    fn z_family() -> ProjectorFamily {
        ProjectorFamily::factor_values(&SpaceLayout::single("Q", 2).unwrap(), "Q").unwrap()
    }

    fn psi() -> StateVector {
        StateVector::from_real(SpaceLayout::single("Q", 2).unwrap(), &[0.6, 0.8]).unwrap()
    }

    fn zero_h() -> Dynamics {
        Dynamics::Hamiltonian(OperatorMatrix::zeros(SpaceLayout::single("Q", 2).unwrap()).unwrap())
    }

    #[test]
    fn validates_times_and_counts() {
        let e = HistorySet::new(psi(), zero_h(), vec![1.0, 1.0], vec![z_family(), z_family()]);
        assert_eq!(e.unwrap_err(), HistoryError::NonIncreasingTimes { index: 1 });
        let e = HistorySet::new(psi(), zero_h(), vec![1.0], vec![z_family(), z_family()]);
        assert!(matches!(e, Err(HistoryError::FamilyCountMismatch { .. })));
        let e = HistorySet::new(psi(), zero_h(), vec![], vec![]);
        assert_eq!(e.unwrap_err(), HistoryError::NoTimes);
        let bad = psi().scaled(crate::C64::new(2.0, 0.0));
        let e = HistorySet::new(bad, zero_h(), vec![1.0], vec![z_family()]);
        assert!(matches!(e, Err(HistoryError::NotNormalized { .. })));
    }

    #[test]
    fn rejects_non_unitary_steps() {
        let l = SpaceLayout::single("Q", 2).unwrap();
        let m = OperatorMatrix::from_real_rows(l, &[&[1.0, 1.0], &[0.0, 1.0]]).unwrap();
        let e = HistorySet::new(psi(), Dynamics::Steps(vec![m]), vec![1.0], vec![z_family()]);
        assert!(matches!(e, Err(HistoryError::NonUnitaryStep { index: 0, .. })));
    }

    #[test]
    fn history_index_space_is_cartesian() {
        let l = SpaceLayout::new([("A", 2), ("B", 3)]).unwrap();
        let a = ProjectorFamily::factor_values(&l, "A").unwrap();
        let b = ProjectorFamily::factor_values(&l, "B").unwrap();
        let psi0 = StateVector::basis(l.clone(), 0).unwrap();
        let set = HistorySet::new(
            psi0,
            Dynamics::Hamiltonian(OperatorMatrix::zeros(l).unwrap()),
            vec![0.5, 1.0],
            vec![a, b],
        )
        .unwrap();
        assert_eq!(set.history_count(), 6);
        let all: Vec<_> = set.histories().collect();
        assert_eq!(all[4], vec![1, 1]);
        for (r, h) in all.iter().enumerate() {
            assert_eq!(set.row_of(h).unwrap(), r);
        }
        assert!(set.row_of(&[2, 0]).is_err());
        assert_eq!(set.label(&[1, 2]), "A=1,B=2");
    }
}
