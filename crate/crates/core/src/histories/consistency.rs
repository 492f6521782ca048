use std::collections::HashMap;

use serde::Serialize;

use crate::C64;

use super::{DecoherenceMatrix, History, HistoryError};

/// Default tolerance on the normalized off-diagonal measure.
pub const DEFAULT_EPSILON: f64 = 1e-8;

/// Diagonal weight below which a history counts as zero-probability; pairs
/// involving one are judged on the absolute off-diagonal value.
pub const ZERO_PROBABILITY: f64 = 1e-14;

const DENOMINATOR_FLOOR: f64 = 1e-300;
const NEGATIVE_CLAMP: f64 = -1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub epsilon: f64,
    /// `max_{α≠α′} |D[α,α′]| / √(p(α) p(α′))`, absolute for zero-probability pairs.
    pub max_normalized_offdiag: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_pair: Option<(History, History)>,
    pub consistent: bool,
}

/// Medium consistency: every complex off-diagonal must vanish to `epsilon`
/// relative to the geometric mean of the two diagonal entries.
pub fn check_consistency(
    d: &DecoherenceMatrix,
    epsilon: f64,
) -> Result<ConsistencyReport, HistoryError> {
    if !(epsilon > 0.0) {
        return Err(HistoryError::NonPositiveEpsilon(epsilon));
    }
    let n = d.len();
    let diag = d.diagonal();
    let mut worst = 0.0;
    let mut worst_pair = None;
    for a in 0..n {
        for b in a + 1..n {
            let v = d.entry(a, b).norm();
            if v == 0.0 {
                continue;
            }
            let measure = if diag[a].min(diag[b]) < ZERO_PROBABILITY {
                v
            } else {
                v / (diag[a] * diag[b]).sqrt().max(DENOMINATOR_FLOOR)
            };
            if measure > worst {
                worst = measure;
                worst_pair = Some((d.histories()[a].clone(), d.histories()[b].clone()));
            }
        }
    }
    Ok(ConsistencyReport {
        epsilon,
        max_normalized_offdiag: worst,
        worst_pair,
        consistent: worst <= epsilon,
    })
}

/// Probabilities of the histories of a consistent set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityTable {
    pub histories: Vec<History>,
    pub labels: Vec<String>,
    pub probabilities: Vec<f64>,
}

impl ProbabilityTable {
    pub fn get(&self, history: &[usize]) -> Option<f64> {
        self.histories
            .iter()
            .position(|h| h == history)
            .map(|i| self.probabilities[i])
    }

    pub fn by_label(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|i| self.probabilities[i])
    }

    pub fn total(&self) -> f64 {
        self.probabilities.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&History, &str, f64)> {
        self.histories
            .iter()
            .zip(&self.labels)
            .zip(&self.probabilities)
            .map(|((h, l), &p)| (h, l.as_str(), p))
    }

    /// Nonzero probabilities sorted ascending.
    pub fn nonzero_sorted(&self, threshold: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .probabilities
            .iter()
            .copied()
            .filter(|&p| p > threshold)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `p(α) = Re D[α,α]`, refused unless `report` says the set is consistent.
pub fn branch_probabilities(
    d: &DecoherenceMatrix,
    report: &ConsistencyReport,
) -> Result<ProbabilityTable, HistoryError> {
    if !report.consistent {
        return Err(HistoryError::Inconsistent {
            measure: report.max_normalized_offdiag,
            epsilon: report.epsilon,
        });
    }
    let mut probabilities = Vec::with_capacity(d.len());
    for (h, p) in d.histories().iter().zip(d.diagonal()) {
        if p < NEGATIVE_CLAMP {
            return Err(HistoryError::NegativeProbability {
                history: h.clone(),
                value: p,
            });
        }
        probabilities.push(p.max(0.0));
    }
    Ok(ProbabilityTable {
        histories: d.histories().to_vec(),
        labels: d.labels().to_vec(),
        probabilities,
    })
}

/// Block sums `D̄[ᾱ,ᾱ′] = Σ_{α∈ᾱ, α′∈ᾱ′} D[α,α′]` over a partition of the
/// histories. Coarse history `k` is `[k]`, labeled by `labels` or `g{k}`.
pub fn coarse_grain(
    d: &DecoherenceMatrix,
    blocks: &[Vec<History>],
    labels: Option<Vec<String>>,
) -> Result<DecoherenceMatrix, HistoryError> {
    let index: HashMap<&History, usize> =
        d.histories().iter().enumerate().map(|(i, h)| (h, i)).collect();
    let mut owner = vec![usize::MAX; d.len()];
    for (k, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(HistoryError::NotPartition(format!("block {k} is empty")));
        }
        for h in block {
            let &row = index
                .get(h)
                .ok_or_else(|| HistoryError::NotPartition(format!("unknown history {h:?}")))?;
            if owner[row] != usize::MAX {
                return Err(HistoryError::NotPartition(format!(
                    "history {h:?} appears in blocks {} and {k}",
                    owner[row]
                )));
            }
            owner[row] = k;
        }
    }
    if let Some(row) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(HistoryError::NotPartition(format!(
            "history {:?} is not covered",
            d.histories()[row]
        )));
    }
    let labels = match labels {
        Some(l) if l.len() == blocks.len() => l,
        Some(l) => {
            return Err(HistoryError::NotPartition(format!(
                "{} labels for {} blocks",
                l.len(),
                blocks.len()
            )))
        }
        None => (0..blocks.len()).map(|k| format!("g{k}")).collect(),
    };
    let m = blocks.len();
    let n = d.len();
    let mut entries = vec![C64::new(0.0, 0.0); m * m];
    for a in 0..n {
        for b in 0..n {
            entries[owner[a] * m + owner[b]] += d.entry(a, b);
        }
    }
    Ok(DecoherenceMatrix::from_parts(
        (0..m).map(|k| vec![k]).collect(),
        labels,
        entries,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(diag: &[f64], off: &[(usize, usize, C64)]) -> DecoherenceMatrix {
        let n = diag.len();
        let mut e = vec![C64::new(0.0, 0.0); n * n];
        for (i, &p) in diag.iter().enumerate() {
            e[i * n + i] = C64::new(p, 0.0);
        }
        for &(a, b, v) in off {
            e[a * n + b] = v;
            e[b * n + a] = v.conj();
        }
        let h: Vec<History> = (0..n).map(|i| vec![i]).collect();
        let l = (0..n).map(|i| i.to_string()).collect();
        DecoherenceMatrix::from_parts(h, l, e)
    }

    #[test]
    fn diagonal_matrix_is_consistent() {
        let d = matrix(&[0.2, 0.3, 0.5], &[]);
        let r = check_consistency(&d, 1e-8).unwrap();
        assert!(r.consistent);
        assert_eq!(r.max_normalized_offdiag, 0.0);
        assert_eq!(r.worst_pair, None);
    }

    #[test]
    fn quarter_offdiag_with_quarter_diagonals_is_maximal() {
        let d = matrix(&[0.25, 0.25, 0.25, 0.25], &[(0, 1, C64::new(0.25, 0.0))]);
        let r = check_consistency(&d, 0.999).unwrap();
        assert!(!r.consistent);
        assert!((r.max_normalized_offdiag - 1.0).abs() < 1e-15);
        assert_eq!(r.worst_pair, Some((vec![0], vec![1])));
        let err = branch_probabilities(&d, &r).unwrap_err();
        assert!(matches!(err, HistoryError::Inconsistent { .. }));
    }

    #[test]
    fn tiny_offdiag_is_consistent() {
        let d = matrix(&[0.5, 0.5], &[(0, 1, C64::new(1e-14, 0.0))]);
        assert!(check_consistency(&d, 1e-10).unwrap().consistent);
    }

    #[test]
    fn zero_probability_pairs_use_absolute_value() {
        let d = matrix(&[1.0, 0.0], &[(0, 1, C64::new(1e-12, 0.0))]);
        let r = check_consistency(&d, 1e-10).unwrap();
        assert!(r.consistent);
        assert_eq!(r.max_normalized_offdiag, 1e-12);
    }

    #[test]
    fn rejects_non_positive_epsilon() {
        let d = matrix(&[1.0], &[]);
        assert!(check_consistency(&d, 0.0).is_err());
    }

    #[test]
    fn probabilities_clamp_tiny_negatives_only() {
        let d = matrix(&[1.0, -1e-13], &[]);
        let r = check_consistency(&d, 1e-8).unwrap();
        assert_eq!(branch_probabilities(&d, &r).unwrap().probabilities, vec![1.0, 0.0]);
        let d = matrix(&[1.0, -1e-9], &[]);
        let r = check_consistency(&d, 1e-8).unwrap();
        assert!(matches!(
            branch_probabilities(&d, &r),
            Err(HistoryError::NegativeProbability { .. })
        ));
    }

    #[test]
    fn coarse_graining_examples() {
        let d = matrix(
            &[0.1, 0.2, 0.3, 0.4],
            &[(0, 1, C64::new(0.01, 0.02)), (2, 3, C64::new(-0.05, 0.0))],
        );
        let singletons: Vec<Vec<History>> = (0..4).map(|i| vec![vec![i]]).collect();
        let same = coarse_grain(&d, &singletons, None).unwrap();
        assert_eq!(same.entries(), d.entries());

        let all = vec![(0..4).map(|i| vec![i]).collect::<Vec<_>>()];
        let one = coarse_grain(&d, &all, Some(vec!["all".into()])).unwrap();
        assert_eq!(one.len(), 1);
        // brute-force: sum of every entry
        let total: C64 = d.entries().iter().sum();
        assert!((one.entry(0, 0) - total).norm() < 1e-15);
        assert!((one.entry(0, 0).re - (1.0 + 2.0 * 0.01 - 2.0 * 0.05)).abs() < 1e-15);
    }

    #[test]
    fn coarse_graining_rejects_non_partitions() {
        let d = matrix(&[0.5, 0.5], &[]);
        assert!(coarse_grain(&d, &[vec![vec![0]]], None).is_err());
        assert!(coarse_grain(&d, &[vec![vec![0], vec![1]], vec![vec![1]]], None).is_err());
        assert!(coarse_grain(&d, &[vec![vec![0]], vec![vec![1]], vec![]], None).is_err());
        assert!(coarse_grain(&d, &[vec![vec![0], vec![7]], vec![vec![1]]], None).is_err());
    }
}
