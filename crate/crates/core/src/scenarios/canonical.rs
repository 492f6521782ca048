use crate::histories::{
    branch_probabilities, check_consistency, decoherence_functional, Dynamics, HistorySet, ProbabilityTable,
    ProjectorFamily,
};
use crate::robot::{compile_automaton_step, measurement_unitary, Automaton, RobotLayout};
use crate::tensor::{kron_states, OperatorKind, OperatorMatrix, SpaceLayout, StateVector, TensorError, MAX_DENSE_DIM};
use crate::C64;

use super::{
    amplitude_weights, require_consistent, ExactTable, NamedConsistency, ScenarioError, ScenarioOptions,
    ScenarioResult,
};

/// Label of the register added by [`run_canonical_observer`].
pub const RECORDER: &str = "recorder";

/// Largest history count a recorder is built for.
pub const MAX_RECORDED_HISTORIES: usize = 64;

const ZERO: C64 = C64::new(0.0, 0.0);

fn table_deviation(a: &ProbabilityTable, b: &[f64]) -> f64 {
    a.probabilities.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Adds a recorder register of dimension `H` (the history count) to a
/// consistent set. After interval `i` the recorder is shifted by
/// `k · stride_i` when the system lies in `P^i_k`, with strides chosen so
/// that the final recorder value is the history's row index:
/// `U'_i = (Σ_k P^i_k ⊗ X^{k·stride_i}) (U_i ⊗ I)`.
///
/// Reports the original table, the table of the extended set, and the
/// table obtained by asking only for the recorder value at the final time.
pub fn run_canonical_observer(set: &HistorySet, opts: &ScenarioOptions) -> Result<ScenarioResult, ScenarioError> {
    let d = decoherence_functional(set)?;
    let report = check_consistency(&d, opts.epsilon)?;
    require_consistent("original", &report)?;
    let count = set.history_count();
    if count > MAX_RECORDED_HISTORIES {
        return Err(ScenarioError::TooManyHistories {
            count,
            limit: MAX_RECORDED_HISTORIES,
        });
    }
    let original = branch_probabilities(&d, &report)?;

    let layout = set.psi0().layout().clone();
    let rec = SpaceLayout::single(RECORDER, count)?;
    let ext = layout.concat(&rec)?;
    if ext.total_dim() > MAX_DENSE_DIM {
        return Err(TensorError::Capacity {
            dim: ext.total_dim(),
            cap: MAX_DENSE_DIM,
        }
        .into());
    }
    let labels: Vec<&str> = layout.factors().iter().map(|f| f.label.as_str()).collect();

    let sizes = set.family_sizes();
    let mut stride = count;
    let mut steps = Vec::with_capacity(set.len());
    let mut families = Vec::with_capacity(set.len());
    for (i, family) in set.families().iter().enumerate() {
        stride /= sizes[i];
        let u = set.interval(i);
        let pu: Vec<OperatorMatrix> = family
            .projectors()
            .iter()
            .map(|p| p.matmul(u))
            .collect::<Result<_, _>>()?;
        let step = OperatorMatrix::from_fn(ext.clone(), |row, col| {
            let (s, r) = (row / count, row % count);
            let (s2, r2) = (col / count, col % count);
            let mut z = ZERO;
            for (k, m) in pu.iter().enumerate() {
                if r == (r2 + k * stride) % count {
                    z += m.get(s, s2);
                }
            }
            z
        })?
        .with_kind(OperatorKind::Unitary);
        steps.push(step);
        families.push(family.embed(&ext, &labels)?);
    }
    let psi0 = kron_states(&[set.psi0(), &StateVector::basis(rec, 0)?])?;
    let times = set.times().to_vec();

    let extended = HistorySet::new(psi0.clone(), Dynamics::Steps(steps.clone()), times.clone(), families)?;
    let d_ext = decoherence_functional(&extended)?;
    let report_ext = check_consistency(&d_ext, opts.epsilon)?;
    require_consistent("extended", &report_ext)?;
    let ext_table = branch_probabilities(&d_ext, &report_ext)?;

    let trivial = ProjectorFamily::from_predicate(&ext, 1, vec!["*".into()], |_| 0)?;
    let mut rec_families = vec![trivial; set.len() - 1];
    rec_families.push(ProjectorFamily::factor_values(&ext, RECORDER)?);
    let recorder_set = HistorySet::new(psi0, Dynamics::Steps(steps), times, rec_families)?;
    let d_rec = decoherence_functional(&recorder_set)?;
    let report_rec = check_consistency(&d_rec, opts.epsilon)?;
    require_consistent("recorder", &report_rec)?;
    let mut rec_table = branch_probabilities(&d_rec, &report_rec)?;
    rec_table.labels = original.labels.clone();

    let mut result = ScenarioResult::new("canonical-observer", 0);
    result.param("histories", count);
    result.param("times", set.len());
    result.param("dimension", layout.total_dim());
    result.param("epsilon", opts.epsilon);
    result.derive("extended_dimension", ext.total_dim());
    result.derive("max_extended_deviation", table_deviation(&ext_table, &original.probabilities));
    result.derive("max_recorder_deviation", table_deviation(&rec_table, &original.probabilities));
    result.exact.push(ExactTable::from_probabilities("original", &original));
    result.exact.push(ExactTable::from_probabilities("extended", &ext_table));
    result.exact.push(ExactTable::from_probabilities("recorder", &rec_table));
    for (name, report) in [("original", report), ("extended", report_ext), ("recorder", report_rec)] {
        result.consistency.push(NamedConsistency {
            name: name.into(),
            report,
        });
    }
    result.check_tables()?;
    Ok(result)
}

fn sorted_nonzero(t: &ProbabilityTable) -> Vec<f64> {
    t.nonzero_sorted(crate::histories::ZERO_PROBABILITY)
}

fn multiset_difference(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A robot with a sequence-recording brain reads `N ≤ 3` copies of
/// `α|Q_1⟩ + β|Q_2⟩`. Its pointer `A` and brain `B` are perfectly
/// correlated, so histories asking about `A` alone, `B` alone, or both
/// together must carry the same nonzero probabilities.
///
/// At step `s` the brain family separates the `2^s` tree nodes of depth `s`
/// and lumps all other brain states together; the joint family separates
/// every (reading, depth-`s` node) pair.
pub fn correlated_families(
    alpha: C64,
    beta: C64,
    copies: usize,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    amplitude_weights(alpha, beta)?;
    if !(1..=3).contains(&copies) {
        return Err(ScenarioError::InvalidParameter(format!("copies must be 1 to 3, got {copies}")));
    }
    let automaton = Automaton::sequence_recorder(3, copies as u32)?;
    let names: Vec<String> = (1..=copies).map(|i| format!("Q{i}")).collect();
    let systems: Vec<(&str, usize)> = names.iter().map(|l| (l.as_str(), 2)).collect();
    let robot = RobotLayout::new(&automaton, &systems, copies, false)?;
    let space = robot.space().clone();

    let head = StateVector::from_digits(SpaceLayout::new([("A", 3), ("B", automaton.state_count())])?, &[0, 0])?;
    let qs: Vec<StateVector> = names
        .iter()
        .map(|l| StateVector::new(SpaceLayout::single(l.as_str(), 2)?, vec![alpha, beta]))
        .collect::<Result<_, _>>()?;
    let mut parts = vec![&head];
    parts.extend(qs.iter());
    let psi0 = kron_states(&parts)?;
    let z = ProjectorFamily::factor_values(&SpaceLayout::single("Q", 2)?, "Q")?;
    let steps = (0..copies)
        .map(|s| {
            let m = measurement_unitary(&z, &robot, s)?;
            Ok(compile_automaton_step(&automaton, &robot, s)?.matmul(&m)?)
        })
        .collect::<Result<Vec<_>, ScenarioError>>()?;
    let times: Vec<f64> = (1..=copies).map(|t| t as f64).collect();

    let pointer = ProjectorFamily::from_predicate(
        &space,
        3,
        vec!["A=null".into(), "A=Q1".into(), "A=Q2".into()],
        |d| d[0],
    )?;
    let mut brain = Vec::with_capacity(copies);
    let mut joint = Vec::with_capacity(copies);
    for depth in 1..=copies {
        let width = 1usize << depth;
        let first = width - 1;
        let node = move |b: usize| (first..first + width).contains(&b).then(|| b - first);
        let mut labels: Vec<String> = (0..width).map(|n| format!("B=node{}", first + n)).collect();
        labels.push("B=other".into());
        brain.push(ProjectorFamily::from_predicate(&space, width + 1, labels, |d| {
            node(d[1]).unwrap_or(width)
        })?);
        let mut labels: Vec<String> = (1..=2)
            .flat_map(|a| (0..width).map(move |n| format!("A=Q{a}&B=node{}", first + n)))
            .collect();
        labels.push("other".into());
        joint.push(ProjectorFamily::from_predicate(&space, 2 * width + 1, labels, |d| {
            match (d[0], node(d[1])) {
                (a @ 1..=2, Some(n)) => (a - 1) * width + n,
                _ => 2 * width,
            }
        })?);
    }

    let mut result = ScenarioResult::new("correlated-families", 0);
    result.param("alpha", alpha);
    result.param("beta", beta);
    result.param("copies", copies);
    result.param("epsilon", opts.epsilon);
    let mut multisets = Vec::new();
    for (name, families) in [("pointer", vec![pointer; copies]), ("brain", brain), ("joint", joint)] {
        let set = HistorySet::new(psi0.clone(), Dynamics::Steps(steps.clone()), times.clone(), families)?;
        let d = decoherence_functional(&set)?;
        let report = check_consistency(&d, opts.epsilon)?;
        require_consistent(name, &report)?;
        let table = branch_probabilities(&d, &report)?;
        multisets.push(sorted_nonzero(&table));
        result.exact.push(ExactTable::from_probabilities(name, &table));
        result.consistency.push(NamedConsistency {
            name: name.into(),
            report,
        });
    }
    result.derive("nonzero_histories", multisets[0].len());
    result.derive("pointer_vs_brain", multiset_difference(&multisets[0], &multisets[1]));
    result.derive("pointer_vs_joint", multiset_difference(&multisets[0], &multisets[2]));
    result.derive("brain_vs_joint", multiset_difference(&multisets[1], &multisets[2]));
    result.check_tables()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histories::HistoryError;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q() -> SpaceLayout {
        SpaceLayout::single("Q", 2).unwrap()
    }

    fn z_set(psi: StateVector, times: usize) -> HistorySet {
        HistorySet::new(
            psi,
            Dynamics::Hamiltonian(OperatorMatrix::zeros(q()).unwrap()),
            (1..=times).map(|t| t as f64).collect(),
            vec![ProjectorFamily::factor_values(&q(), "Q").unwrap(); times],
        )
        .unwrap()
    }

    #[test]
    fn single_family_recorder_gives_born_weights() {
        let r = run_canonical_observer(
            &z_set(StateVector::from_real(q(), &[0.6, 0.8]).unwrap(), 1),
            &ScenarioOptions::default(),
        )
        .unwrap();
        let rec = r.table("recorder").unwrap().probabilities();
        assert!((rec[0] - 0.36).abs() < 1e-12 && (rec[1] - 0.64).abs() < 1e-12);
    }

    #[test]
    fn repeated_z_on_x_plus_is_unchanged() {
        let plus = StateVector::from_real(q(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let r = run_canonical_observer(&z_set(plus, 2), &ScenarioOptions::default()).unwrap();
        let ext = r.table("extended").unwrap().probabilities();
        for (x, y) in ext.iter().zip([0.5, 0.0, 0.0, 0.5]) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(r.real("max_extended_deviation").unwrap() < 1e-10);
        assert!(r.real("max_recorder_deviation").unwrap() < 1e-10);
        assert_eq!(r.real("extended_dimension"), Some(8.0));
    }

    #[test]
    fn random_consistent_sets_keep_their_probabilities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..5 {
            let set = crate::random::consistent_set(&mut rng, 3, 2, 2);
            let r = run_canonical_observer(&set, &ScenarioOptions::default()).unwrap();
            assert!(r.real("max_extended_deviation").unwrap() < 1e-10);
            assert!(r.real("max_recorder_deviation").unwrap() < 1e-10);
        }
    }

    #[test]
    fn inconsistent_input_is_refused() {
        let plus = StateVector::from_real(q(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let s = FRAC_1_SQRT_2;
        let x = ProjectorFamily::from_basis(
            q(),
            &[
                StateVector::from_real(q(), &[s, s]).unwrap(),
                StateVector::from_real(q(), &[s, -s]).unwrap(),
            ],
            vec!["x+".into(), "x-".into()],
        )
        .unwrap();
        let z = ProjectorFamily::factor_values(&q(), "Q").unwrap();
        let set = HistorySet::new(
            plus,
            Dynamics::Hamiltonian(OperatorMatrix::zeros(q()).unwrap()),
            vec![1.0, 2.0],
            vec![z, x],
        )
        .unwrap();
        let err = run_canonical_observer(&set, &ScenarioOptions::default()).unwrap_err();
        assert!(err.is_consistency_refusal());
        assert!(!matches!(err, ScenarioError::History(HistoryError::Capacity { .. })));
    }

    #[test]
    fn too_many_histories() {
        let set = z_set(StateVector::basis(q(), 0).unwrap(), 7);
        assert!(matches!(
            run_canonical_observer(&set, &ScenarioOptions::default()),
            Err(ScenarioError::TooManyHistories { count: 128, .. })
        ));
    }

    #[test]
    fn pointer_brain_and_joint_tables_agree() {
        let (a, b) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        for copies in 1..=3 {
            let r = correlated_families(a, b, copies, &ScenarioOptions::default()).unwrap();
            assert_eq!(r.real("nonzero_histories"), Some((1usize << copies) as f64));
            for key in ["pointer_vs_brain", "pointer_vs_joint", "brain_vs_joint"] {
                assert!(r.real(key).unwrap() < 1e-10, "{key} at N={copies}");
            }
        }
    }
}
