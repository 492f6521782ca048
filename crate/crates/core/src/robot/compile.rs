use crate::tensor::{LocalPermutation, OperatorMatrix};

use super::layout::{BRAIN, POINTER};
use super::{Automaton, RobotError, RobotLayout};

/// Basis permutation for automaton step `step`.
///
/// With archiving, `|A, B, a_s = 0, b_s = 0⟩ → |A, T(B, A), A, B⟩`: the
/// pre-step pointer and brain values are copied into the step's fresh
/// archive pair, which makes the map injective for any table. Basis vectors
/// with dirty archives are sent to the remaining targets in ascending order.
///
/// Without archiving, `|A, B⟩ → |A, T(B, A)⟩`, which requires every input
/// column of the table to be injective.
pub fn automaton_permutation(
    automaton: &Automaton,
    layout: &RobotLayout,
    step: usize,
) -> Result<LocalPermutation, RobotError> {
    layout.check_step(step)?;
    let space = layout.space();
    let pa = space.require(POINTER)?;
    let pb = space.require(BRAIN)?;
    if space.factors()[pa].dim != automaton.input_count() || space.factors()[pb].dim != automaton.state_count() {
        return Err(RobotError::TableShape {
            expected: space.factors()[pa].dim * space.factors()[pb].dim,
            found: automaton.input_count() * automaton.state_count(),
        });
    }
    match layout.archive_labels(step) {
        Some((a, b)) => {
            let positions = [pa, pb, space.require(&a)?, space.require(&b)?];
            Ok(LocalPermutation::complete(space, &positions, |d| {
                (d[2] == 0 && d[3] == 0).then(|| vec![d[0], automaton.next(d[1], d[0]), d[0], d[1]])
            })?)
        }
        None => {
            if let Some(input) = automaton.non_injective_input() {
                return Err(RobotError::NotColumnInjective { input });
            }
            Ok(LocalPermutation::complete(space, &[pa, pb], |d| {
                Some(vec![d[0], automaton.next(d[1], d[0])])
            })?)
        }
    }
}

/// Dense permutation unitary of [`automaton_permutation`].
pub fn compile_automaton_step(
    automaton: &Automaton,
    layout: &RobotLayout,
    step: usize,
) -> Result<OperatorMatrix, RobotError> {
    Ok(automaton_permutation(automaton, layout, step)?.to_operator(layout.space())?)
}
