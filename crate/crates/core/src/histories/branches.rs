use crate::exec::{self, Execution};
use crate::tensor::StateVector;
use crate::C64;

use super::{History, HistoryError, HistorySet};

/// Squared norm below which a branch is hidden from display.
pub const PRUNE_NORM_SQR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct BranchNode {
    pub history: History,
    /// Unnormalized component just after the latest projection.
    pub state: StateVector,
    pub norm_sqr: f64,
    /// `norm_sqr / parent.norm_sqr`, zero under a zero-norm parent.
    pub edge_weight: f64,
}

/// Branch components level by level: level 0 is `ψ0`, level `j` holds the
/// components `P^j U_j ··· P^1 U_1 ψ0` for every partial history of length
/// `j`, zero-norm components included.
#[derive(Debug, Clone)]
pub struct BranchTree {
    levels: Vec<Vec<BranchNode>>,
}

fn is_zero(v: &StateVector) -> bool {
    v.amplitudes().iter().all(|a| *a == C64::new(0.0, 0.0))
}

/// Children of every parent at projection index `i`, in history order.
fn expand(
    set: &HistorySet,
    i: usize,
    parents: &[StateVector],
    exec: Execution,
) -> Result<Vec<StateVector>, HistoryError> {
    let family = &set.families()[i];
    let u = set.interval(i);
    let skip_u = set.interval_is_identity(i);
    let per_parent = exec::map_indexed(exec, parents.len(), |p| {
        let parent = &parents[p];
        if is_zero(parent) {
            return Ok(vec![StateVector::zeros(parent.layout().clone()); family.len()]);
        }
        let evolved = if skip_u {
            parent.clone()
        } else {
            u.apply(parent)?
        };
        Ok((0..family.len()).map(|k| family.apply(k, &evolved)).collect())
    });
    let mut out = Vec::with_capacity(parents.len() * family.len());
    for children in per_parent {
        out.extend(children.map_err(HistoryError::Tensor)?);
    }
    Ok(out)
}

/// Final-time Schrödinger-picture branch vectors in history order.
pub(crate) fn leaf_branches(
    set: &HistorySet,
    exec: Execution,
) -> Result<Vec<StateVector>, HistoryError> {
    let mut level = vec![set.psi0().clone()];
    for i in 0..set.len() {
        level = expand(set, i, &level, exec)?;
    }
    Ok(level)
}

impl BranchTree {
    pub fn build(set: &HistorySet) -> Result<Self, HistoryError> {
        Self::build_with(set, Execution::default())
    }

    pub fn build_with(set: &HistorySet, exec: Execution) -> Result<Self, HistoryError> {
        let root = BranchNode {
            history: vec![],
            state: set.psi0().clone(),
            norm_sqr: set.psi0().norm_sqr(),
            edge_weight: 1.0,
        };
        let mut levels = vec![vec![root]];
        for i in 0..set.len() {
            let parents: Vec<StateVector> =
                levels[i].iter().map(|n| n.state.clone()).collect();
            let children = expand(set, i, &parents, exec)?;
            let k = set.families()[i].len();
            let nodes = children
                .into_iter()
                .enumerate()
                .map(|(c, state)| {
                    let parent = &levels[i][c / k];
                    let mut history = parent.history.clone();
                    history.push(c % k);
                    let norm_sqr = state.norm_sqr();
                    let edge_weight = if parent.norm_sqr > 0.0 {
                        norm_sqr / parent.norm_sqr
                    } else {
                        0.0
                    };
                    BranchNode {
                        history,
                        state,
                        norm_sqr,
                        edge_weight,
                    }
                })
                .collect();
            levels.push(nodes);
        }
        Ok(Self { levels })
    }

    /// Number of levels including the root.
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> &[BranchNode] {
        &self.levels[j]
    }

    pub fn root(&self) -> &BranchNode {
        &self.levels[0][0]
    }

    /// Nodes of level `j` with squared norm at least [`PRUNE_NORM_SQR`].
    pub fn display_nodes(&self, j: usize) -> impl Iterator<Item = &BranchNode> {
        self.levels[j].iter().filter(|n| n.norm_sqr >= PRUNE_NORM_SQR)
    }
}

/// Components of `ψ(t)`: with `t_j < t <= t_{j+1}`, the vectors
/// `E(t) P^j ··· P^1 U_1 ψ0` for every partial history of length `j`, where
/// `E(t)` evolves from `t_j` to `t`. They sum to `U(t) ψ0`.
pub fn branch_components(
    set: &HistorySet,
    t: f64,
) -> Result<Vec<(History, StateVector)>, HistoryError> {
    if t < 0.0 || t.is_nan() {
        return Err(HistoryError::NegativeTime(t));
    }
    let j = set.times().iter().filter(|&&ti| ti < t).count();
    let mut level = vec![(vec![], set.psi0().clone())];
    for i in 0..j {
        let parents: Vec<StateVector> = level.iter().map(|(_, s)| s.clone()).collect();
        let children = expand(set, i, &parents, Execution::default())?;
        let k = set.families()[i].len();
        level = children
            .into_iter()
            .enumerate()
            .map(|(c, s)| {
                let mut h: History = level[c / k].0.clone();
                h.push(c % k);
                (h, s)
            })
            .collect();
    }
    if let Some(e) = set.evolution_after(j, t) {
        for (_, s) in level.iter_mut() {
            *s = e.apply(s)?;
        }
    }
    Ok(level)
}
