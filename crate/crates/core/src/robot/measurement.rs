use crate::histories::ProjectorFamily;
use crate::tensor::{OperatorKind, OperatorMatrix, SpaceLayout};
use crate::C64;

use super::layout::POINTER;
use super::{RobotError, RobotLayout};

fn check_dim(basis: &ProjectorFamily, dim: usize) -> Result<(), RobotError> {
    if basis.layout().total_dim() != dim {
        return Err(RobotError::SystemMismatch {
            expected: dim,
            found: basis.layout().total_dim(),
        });
    }
    Ok(())
}

fn check_basis(basis: &ProjectorFamily, dim: usize) -> Result<(), RobotError> {
    basis.require_rank_one()?;
    check_dim(basis, dim)
}

/// Controlled pointer shift `Σ_k P_k ⊗ X^{k + offset}`, where `X` shifts
/// the pointer by one mod `d_A` and `P_k` are the members of `family` on
/// the single register `system`. For a rank-1 family with eigenvectors
/// `χ_k` this is `|χ_k⟩|a⟩ → |χ_k⟩|a + k + offset⟩`.
pub fn premeasurement(
    family: &ProjectorFamily,
    space: &SpaceLayout,
    system: &str,
    pointer: &str,
    offset: usize,
) -> Result<OperatorMatrix, RobotError> {
    let ps = space.require(system)?;
    let pp = space.require(pointer)?;
    let dq = space.factors()[ps].dim;
    let da = space.factors()[pp].dim;
    check_dim(family, dq)?;
    let local = space.select(&[ps, pp])?;
    let op = OperatorMatrix::from_fn(local, |r, c| {
        let (q, a) = (r / da, r % da);
        let (q2, a2) = (c / da, c % da);
        (0..family.len())
            .filter(|&k| a == (a2 + k + offset) % da)
            .map(|k| family.projector(k).get(q, q2))
            .sum::<C64>()
    })?;
    Ok(op.embed(space, &[system, pointer])?.with_kind(OperatorKind::Unitary))
}

/// Premeasurement of system register `min(step, K − 1)` into the pointer.
///
/// The pointer uses `0` as its null reading and `k + 1` for outcome `k`. At
/// step 0 the pointer is shifted by `k + 1`. At later steps on a fresh
/// register the shift is `(k + 1) − (j + 1)`, where `j` is the outcome of
/// the previous register in the same basis: the previous reading, still
/// recorded in that register, is uncomputed and the new one written.
/// Repeating a register already read is the identity.
pub fn measurement_unitary(
    basis: &ProjectorFamily,
    layout: &RobotLayout,
    step: usize,
) -> Result<OperatorMatrix, RobotError> {
    layout.check_step(step)?;
    let systems = layout.systems();
    if systems.is_empty() {
        return Err(RobotError::SystemMismatch {
            expected: 0,
            found: basis.layout().total_dim(),
        });
    }
    let needed = basis.len() + 1;
    if layout.pointer_dim() < needed {
        return Err(RobotError::PointerTooSmall {
            pointer: layout.pointer_dim(),
            needed,
        });
    }
    let space = layout.space();
    let cur = &systems[step.min(systems.len() - 1)];
    if step == 0 {
        check_basis(basis, space.dim_of(cur).unwrap_or(0))?;
        return premeasurement(basis, space, cur, POINTER, 1);
    }
    let prev = &systems[(step - 1).min(systems.len() - 1)];
    if prev == cur {
        check_basis(basis, space.dim_of(cur).unwrap_or(0))?;
        return Ok(OperatorMatrix::identity(space.clone())?.with_kind(OperatorKind::Unitary));
    }
    let pp = space.require(prev)?;
    let pc = space.require(cur)?;
    let pa = space.require(POINTER)?;
    let dq = space.factors()[pc].dim;
    check_basis(basis, dq)?;
    check_basis(basis, space.factors()[pp].dim)?;
    let da = space.factors()[pa].dim;
    let local = space.select(&[pp, pc, pa])?;
    let op = OperatorMatrix::from_fn(local, |r, c| {
        let (p, q, a) = (r / (dq * da), (r / da) % dq, r % da);
        let (p2, q2, a2) = (c / (dq * da), (c / da) % dq, c % da);
        let mut z = C64::new(0.0, 0.0);
        for j in 0..basis.len() {
            let pj = basis.projector(j).get(p, p2);
            if pj == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..basis.len() {
                if a == (a2 + da + k - j) % da {
                    z += pj * basis.projector(k).get(q, q2);
                }
            }
        }
        z
    })?;
    Ok(op.embed(space, &[prev, cur, POINTER])?.with_kind(OperatorKind::Unitary))
}
