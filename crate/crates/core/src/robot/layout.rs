use crate::tensor::{SpaceLayout, StateVector};

use super::{Automaton, RobotError};

/// Register layout of one robot: pointer `A`, brain `B`, optional archive
/// pairs `a_s`, `b_s` for every step, then the system registers.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotLayout {
    space: SpaceLayout,
    steps: usize,
    archive: bool,
    systems: Vec<String>,
}

pub const POINTER: &str = "A";
pub const BRAIN: &str = "B";

impl RobotLayout {
    /// `systems` lists `(label, dim)` for every measured register.
    pub fn new(
        automaton: &Automaton,
        systems: &[(&str, usize)],
        steps: usize,
        archive: bool,
    ) -> Result<Self, RobotError> {
        let mut factors: Vec<(String, usize)> = vec![
            (POINTER.into(), automaton.input_count()),
            (BRAIN.into(), automaton.state_count()),
        ];
        if archive {
            for s in 1..=steps {
                factors.push((format!("a{s}"), automaton.input_count()));
                factors.push((format!("b{s}"), automaton.state_count()));
            }
        }
        factors.extend(systems.iter().map(|(l, d)| (l.to_string(), *d)));
        Ok(Self {
            space: SpaceLayout::new(factors)?,
            steps,
            archive,
            systems: systems.iter().map(|(l, _)| l.to_string()).collect(),
        })
    }

    pub fn space(&self) -> &SpaceLayout {
        &self.space
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn archives(&self) -> bool {
        self.archive
    }

    pub fn systems(&self) -> &[String] {
        &self.systems
    }

    pub fn pointer_dim(&self) -> usize {
        self.space.factors()[0].dim
    }

    /// Labels of the archive pair for `step` (0-based).
    pub fn archive_labels(&self, step: usize) -> Option<(String, String)> {
        (self.archive && step < self.steps).then(|| (format!("a{}", step + 1), format!("b{}", step + 1)))
    }

    pub(crate) fn check_step(&self, step: usize) -> Result<(), RobotError> {
        if step >= self.steps {
            return Err(RobotError::StepOutOfBudget {
                step,
                budget: self.steps,
            });
        }
        Ok(())
    }

    /// True when every basis vector carrying weight above `1e-28` has both
    /// archive registers of `step` at zero.
    pub fn archive_clear(&self, psi: &StateVector, step: usize) -> Result<bool, RobotError> {
        self.check_step(step)?;
        let Some((a, b)) = self.archive_labels(step) else {
            return Ok(true);
        };
        let pa = self.space.require(&a)?;
        let pb = self.space.require(&b)?;
        Ok(psi.amplitudes().iter().enumerate().all(|(i, z)| {
            z.norm_sqr() <= 1e-28 || (self.space.digit(i, pa) == 0 && self.space.digit(i, pb) == 0)
        }))
    }
}
