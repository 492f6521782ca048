use rand::Rng;

use crate::tensor::StateVector;

use super::{BranchTree, ConsistencyReport, History, HistoryError, HistorySet, ProjectorFamily};

const MIN_TOTAL_PROBABILITY: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct Measurement {
    pub outcome: usize,
    /// `P_k ψ / √p_k`.
    pub state: StateVector,
    pub probability: f64,
}

/// Draws outcome `k` with probability `‖P_k ψ‖²` and collapses onto it.
pub fn projective_measure<R: Rng + ?Sized>(
    psi: &StateVector,
    family: &ProjectorFamily,
    rng: &mut R,
) -> Result<Measurement, HistoryError> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(HistoryError::NotNormalized { norm });
    }
    if psi.layout() != family.layout() {
        return Err(HistoryError::LayoutMismatch("measured state".into()));
    }
    let probs: Vec<f64> = (0..family.len()).map(|k| family.probability(k, psi)).collect();
    if probs.iter().all(|&p| p < MIN_TOTAL_PROBABILITY) {
        return Err(HistoryError::DegenerateMeasurement);
    }
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut outcome = None;
    for (k, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        outcome = Some(k);
        if u < acc {
            break;
        }
    }
    let outcome = outcome.expect("some outcome has positive probability");
    let probability = probs[outcome];
    let state = family
        .apply(outcome, psi)
        .scaled(crate::C64::new(1.0 / probability.sqrt(), 0.0));
    Ok(Measurement {
        outcome,
        state,
        probability,
    })
}

/// Samples one history by evolving and collapsing at each time in turn.
/// Only defined for sets reported consistent.
pub fn sample_history<R: Rng + ?Sized>(
    set: &HistorySet,
    report: &ConsistencyReport,
    rng: &mut R,
) -> Result<History, HistoryError> {
    if !report.consistent {
        return Err(HistoryError::Inconsistent {
            measure: report.max_normalized_offdiag,
            epsilon: report.epsilon,
        });
    }
    let mut psi = set.psi0().clone();
    let mut history = Vec::with_capacity(set.len());
    for (i, family) in set.families().iter().enumerate() {
        if !set.interval_is_identity(i) {
            psi = set.interval(i).apply(&psi)?;
        }
        let m = projective_measure(&psi, family, rng)?;
        history.push(m.outcome);
        psi = m.state;
    }
    Ok(history)
}

/// Draws `count` histories with the same law as repeated [`sample_history`]
/// calls, walking a branch tree built once instead of re-evolving the state
/// for every draw.
pub fn sample_histories<R: Rng + ?Sized>(
    set: &HistorySet,
    report: &ConsistencyReport,
    count: usize,
    rng: &mut R,
) -> Result<Vec<History>, HistoryError> {
    if !report.consistent {
        return Err(HistoryError::Inconsistent {
            measure: report.max_normalized_offdiag,
            epsilon: report.epsilon,
        });
    }
    let tree = BranchTree::build(set)?;
    let sizes = set.family_sizes();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut node = 0;
        let mut history = Vec::with_capacity(sizes.len());
        for (j, &k) in sizes.iter().enumerate() {
            let children = &tree.level(j + 1)[node * k..node * k + k];
            let total: f64 = children.iter().map(|c| c.edge_weight).sum();
            if total <= MIN_TOTAL_PROBABILITY {
                return Err(HistoryError::DegenerateMeasurement);
            }
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (c, child) in children.iter().enumerate() {
                if child.edge_weight <= 0.0 {
                    continue;
                }
                acc += child.edge_weight;
                pick = Some(c);
                if u < acc {
                    break;
                }
            }
            let c = pick.expect("positive total weight");
            history.push(c);
            node = node * k + c;
        }
        out.push(history);
    }
    Ok(out)
}
