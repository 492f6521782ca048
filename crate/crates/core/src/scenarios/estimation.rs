use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::histories::{
    branch_probabilities, check_consistency, decoherence_functional, sample_histories, Dynamics,
    History, HistorySet, ProjectorFamily,
};
use crate::robot::{
    bayes_update, compile_automaton_step, measurement_unitary, posterior_summary, Automaton, Posterior,
    RobotLayout,
};
use crate::tensor::{kron_states, SpaceLayout, StateVector, TensorError, MAX_DENSE_DIM};
use crate::C64;

use super::{
    amplitude_weights, require_consistent, ExactTable, NamedConsistency, SampledTable, ScenarioError,
    ScenarioOptions, ScenarioResult, TableRow,
};

/// Largest copy count for which per-sequence tables are produced.
const SEQUENCE_TABLE_MAX: usize = 12;
/// Largest `N · samples` sampled in the shortcut count histogram.
const SHORTCUT_DRAW_BUDGET: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimationMode {
    /// Dense simulation of robot and copies.
    FullQuantum,
    /// Outcome sequences drawn from the product law directly.
    ClassicalShortcut,
}

fn sequence_label(history: &[usize]) -> String {
    history.iter().map(|&k| if k == 0 { "Q1" } else { "Q2" }).collect::<Vec<_>>().join(",")
}

fn xlogy(n: usize, p: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * p.ln()
    }
}

/// `|α|^{2 n1} |β|^{2 (N − n1)}` for every outcome sequence.
fn product_law_table(a2: f64, b2: f64, copies: usize) -> ExactTable {
    let rows = (0..1usize << copies)
        .map(|code| {
            let history: History = (0..copies).map(|i| (code >> (copies - 1 - i)) & 1).collect();
            let n1 = history.iter().filter(|&&k| k == 0).count();
            TableRow {
                label: sequence_label(&history),
                probability: a2.powi(n1 as i32) * b2.powi((copies - n1) as i32),
                history,
            }
        })
        .collect();
    ExactTable {
        name: "sequence".into(),
        rows,
    }
}

/// Binomial law of the number of `Q_1` outcomes.
fn count_table(a2: f64, b2: f64, copies: usize) -> ExactTable {
    let rows = (0..=copies)
        .map(|n1| {
            let lp = ln_binomial(copies as u64, n1 as u64) + xlogy(n1, a2) + xlogy(copies - n1, b2);
            TableRow {
                label: format!("n1={n1}"),
                history: vec![n1],
                probability: lp.exp(),
            }
        })
        .collect();
    ExactTable {
        name: "count".into(),
        rows,
    }
}

fn count_from_sequences(seq: &ExactTable, copies: usize) -> ExactTable {
    let mut probs = vec![0.0; copies + 1];
    for r in &seq.rows {
        probs[r.history.iter().filter(|&&k| k == 0).count()] += r.probability;
    }
    let rows = probs
        .into_iter()
        .enumerate()
        .map(|(n1, probability)| TableRow {
            label: format!("n1={n1}"),
            history: vec![n1],
            probability,
        })
        .collect();
    ExactTable {
        name: "count".into(),
        rows,
    }
}

fn draw_sequence<R: Rng>(rng: &mut R, a2: f64, copies: usize) -> History {
    (0..copies).map(|_| usize::from(rng.random::<f64>() >= a2)).collect()
}

fn row_index(history: &[usize]) -> usize {
    history.iter().fold(0, |acc, &k| acc * 2 + k)
}

/// Dimension of the dense robot-plus-copies space for `copies` copies.
pub fn full_quantum_dim(copies: usize) -> Option<usize> {
    let q = 1usize.checked_shl(copies as u32)?;
    3usize.checked_mul(copies + 1)?.checked_mul(q)
}

/// The robot measures `N` identical copies of `α|Q_1⟩ + β|Q_2⟩` one after
/// another and estimates `|α|²` from the count of `Q_1` readings.
///
/// In full-quantum mode the space is pointer `A` (null, Q1, Q2), a brain
/// counting `Q_1` readings modulo `N + 1`, and the copies `Q1..QN`. The
/// counter is injective per input, so no archive registers are needed.
/// Histories ask at each step whether the pointer reads `Q_1`.
pub fn run_state_estimation(
    alpha: C64,
    beta: C64,
    copies: usize,
    seed: u64,
    mode: EstimationMode,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let (a2, b2) = amplitude_weights(alpha, beta)?;
    if copies == 0 {
        return Err(ScenarioError::InvalidParameter("N must be at least 1".into()));
    }
    let mut result = ScenarioResult::new("state-estimation", seed);
    result.param("alpha", alpha);
    result.param("beta", beta);
    result.param("copies", copies);
    result.param(
        "mode",
        match mode {
            EstimationMode::FullQuantum => "full-quantum",
            EstimationMode::ClassicalShortcut => "classical-shortcut",
        },
    );
    result.param("epsilon", opts.epsilon);
    result.param("samples", opts.samples);
    result.param("grid_points", opts.grid_points);
    result.param("level", opts.level);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let robot_sequence = match mode {
        EstimationMode::FullQuantum => {
            let dim = full_quantum_dim(copies).unwrap_or(usize::MAX);
            if dim > MAX_DENSE_DIM {
                return Err(TensorError::Capacity {
                    dim,
                    cap: MAX_DENSE_DIM,
                }
                .into());
            }
            let set = full_quantum_set(alpha, beta, copies)?;
            let d = decoherence_functional(&set)?;
            let report = check_consistency(&d, opts.epsilon)?;
            require_consistent("sequence", &report)?;
            let table = branch_probabilities(&d, &report)?;
            let mut seq = ExactTable::from_probabilities("sequence", &table);
            for r in &mut seq.rows {
                r.label = sequence_label(&r.history);
            }
            let law = product_law_table(a2, b2, copies);
            let deviation = seq
                .rows
                .iter()
                .zip(&law.rows)
                .map(|(a, b)| (a.probability - b.probability).abs())
                .fold(0.0, f64::max);
            result.derive("max_product_law_deviation", deviation);
            result.derive("all_q1_probability", seq.rows[0].probability);
            let robot = sample_histories(&set, &report, 1, &mut rng)?.remove(0);
            let draws = sample_histories(&set, &report, opts.samples, &mut rng)?;
            result.sampled.push(SampledTable::tally(&seq, draws.iter().map(|h| row_index(h))));
            result.exact.push(count_from_sequences(&seq, copies));
            result.exact.push(seq);
            result.consistency.push(NamedConsistency {
                name: "sequence".into(),
                report,
            });
            robot
        }
        EstimationMode::ClassicalShortcut => {
            let robot = draw_sequence(&mut rng, a2, copies);
            let counts = count_table(a2, b2, copies);
            result.derive("all_q1_probability", a2.powi(copies as i32));
            if copies <= SEQUENCE_TABLE_MAX {
                let seq = product_law_table(a2, b2, copies);
                let draws = (0..opts.samples).map(|_| row_index(&draw_sequence(&mut rng, a2, copies)));
                result.sampled.push(SampledTable::tally(&seq, draws.collect::<Vec<_>>()));
                result.exact.push(counts);
                result.exact.push(seq);
            } else if copies.saturating_mul(opts.samples) <= SHORTCUT_DRAW_BUDGET {
                let draws: Vec<usize> = (0..opts.samples)
                    .map(|_| draw_sequence(&mut rng, a2, copies).iter().filter(|&&k| k == 0).count())
                    .collect();
                result.sampled.push(SampledTable::tally(&counts, draws));
                result.exact.push(counts);
            } else {
                result
                    .warnings
                    .push(format!("sampled count table skipped: N * samples exceeds {SHORTCUT_DRAW_BUDGET}"));
                result.exact.push(counts);
            }
            robot
        }
    };

    let n1 = robot_sequence.iter().filter(|&&k| k == 0).count();
    let prior = Posterior::uniform(opts.grid_points)?;
    let post = bayes_update(&prior, n1 as u64, copies as u64)?;
    let summary = posterior_summary(&post, opts.level)?;
    if post.is_degenerate() {
        result.warnings.push("likelihood vanished on the grid; posterior reset to flat".into());
    }
    result.derive("all_q1_formula", a2.powi(copies as i32));
    if copies <= SEQUENCE_TABLE_MAX {
        result.derive("robot_sequence", sequence_label(&robot_sequence).as_str());
    }
    result.derive("n1", n1);
    result.derive("map", summary.map);
    result.derive("interval_lower", summary.lower);
    result.derive("interval_upper", summary.upper);
    result.derive("interval_mass", summary.mass);
    result.derive("posterior_degenerate", post.is_degenerate());
    result.check_tables()?;
    Ok(result)
}

/// History set of the full-quantum robot: one time per copy, each step a
/// premeasurement followed by a counter update.
pub fn full_quantum_set(alpha: C64, beta: C64, copies: usize) -> Result<HistorySet, ScenarioError> {
    let automaton = Automaton::counter(copies + 1, 3, 1)?;
    let labels: Vec<String> = (1..=copies).map(|i| format!("Q{i}")).collect();
    let systems: Vec<(&str, usize)> = labels.iter().map(|l| (l.as_str(), 2)).collect();
    let robot = RobotLayout::new(&automaton, &systems, copies, false)?;
    let space = robot.space().clone();

    let head = StateVector::from_digits(SpaceLayout::new([("A", 3), ("B", copies + 1)])?, &[0, 0])?;
    let qs: Vec<StateVector> = labels
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
    let reading = ProjectorFamily::from_predicate(&space, 2, vec!["Q1".into(), "Q2".into()], |d| {
        usize::from(d[0] != 1)
    })?;
    let times = (1..=copies).map(|t| t as f64).collect();
    Ok(HistorySet::new(psi0, Dynamics::Steps(steps), times, vec![reading; copies])?)
}
