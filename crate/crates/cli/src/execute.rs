//! Runs a validated config and collects its report payload.

use chist_core::histories::{
    branch_probabilities, check_consistency, decoherence_functional, DecoherenceMatrix, HistoryError,
};
use chist_core::hourglass::{simulate_hourglass, stability_metrics, HourglassError, StabilityReport};
use chist_core::robot::{automaton_permutation, compile_automaton_step, Automaton, RobotError, RobotLayout};
use chist_core::scenarios::{
    correlated_families, full_quantum_set, run_canonical_observer, run_gambling,
    run_preparation_discrimination, run_state_estimation, run_theory_discrimination, ScenarioError,
    ScenarioResult,
};
use chist_core::tensor::{OperatorMatrix, MAX_DENSE_DIM};
use serde::Serialize;
use serde_json::json;

use crate::config::{AutomatonSpec, HistorySetSpec, HourglassConfig, RunConfig, Task};
use crate::report::{to_finite_value, CsvTable, Outcome, ReportError, Status};

/// Largest dimension for which the dense unitarity check of a compiled
/// automaton step is run.
const DENSE_CHECK_DIM: usize = 512;

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Robot(#[from] RobotError),
    #[error(transparent)]
    Hourglass(#[from] HourglassError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Config(String),
}

pub fn execute(config: &RunConfig) -> Result<Outcome, ExecError> {
    let opts = config.scenario_options();
    let seed = config.seed;
    let result = match &config.task {
        Task::Gambling { amplitudes, params } => {
            run_gambling(amplitudes.alpha(), amplitudes.beta(), params.odds, seed, &opts)
        }
        Task::StateEstimation { amplitudes, params } => run_state_estimation(
            amplitudes.alpha(),
            amplitudes.beta(),
            params.copies,
            seed,
            params.mode,
            &opts,
        ),
        Task::PreparationDiscrimination { amplitudes, params } => {
            run_preparation_discrimination(amplitudes.alpha(), amplitudes.beta(), params.copies, seed, &opts)
        }
        Task::TheoryDiscrimination { params } => {
            run_theory_discrimination(params.triples, params.truth, seed, &opts)
        }
        Task::CanonicalObserver { amplitudes, params } => {
            canonical(amplitudes.alpha(), amplitudes.beta(), params.copies, seed, &opts)
        }
        Task::Hourglass { params } => return hourglass(params, seed),
        Task::HistorySet { spec } => return history_set(spec, config.epsilon),
        Task::Automaton { spec } => return automaton(spec),
    };
    match result {
        Ok(r) => scenario_outcome(&r),
        Err(e) if e.is_consistency_refusal() => Ok(refusal(&e)),
        Err(e) => Err(e.into()),
    }
}

fn canonical(
    alpha: chist_core::C64,
    beta: chist_core::C64,
    copies: usize,
    seed: u64,
    opts: &chist_core::scenarios::ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let set = full_quantum_set(alpha, beta, copies)?;
    let mut result = run_canonical_observer(&set, opts)?;
    let correlated = correlated_families(alpha, beta, copies, opts)?;
    result.seed = seed;
    result.parameters.extend(correlated.parameters);
    result.exact.extend(correlated.exact);
    result.sampled.extend(correlated.sampled);
    result.derived.extend(correlated.derived);
    result.consistency.extend(correlated.consistency);
    result.warnings.extend(correlated.warnings);
    Ok(result)
}

fn refusal(e: &ScenarioError) -> Outcome {
    let (name, measure, epsilon) = match e {
        ScenarioError::Inconsistent { name, measure, epsilon } => (name.clone(), *measure, *epsilon),
        ScenarioError::History(HistoryError::Inconsistent { measure, epsilon }) => {
            (String::new(), *measure, *epsilon)
        }
        _ => unreachable!("only consistency refusals reach here"),
    };
    Outcome {
        status: Status::Refused,
        result: json!({
            "refusal": { "set": name, "max_normalized_offdiag": measure, "epsilon": epsilon, "message": e.to_string() }
        }),
        tables: Vec::new(),
    }
}

fn scenario_outcome(r: &ScenarioResult) -> Result<Outcome, ExecError> {
    let mut tables = Vec::new();
    for t in &r.exact {
        let mut csv = CsvTable::new(format!("exact_{}", t.name), &["label", "history", "probability"]);
        for row in &t.rows {
            csv.push(vec![row.label.clone(), history_text(&row.history), fmt(row.probability)]);
        }
        tables.push(csv);
    }
    for t in &r.sampled {
        let mut csv = CsvTable::new(format!("sampled_{}", t.name), &["label", "count", "frequency"]);
        for row in &t.rows {
            csv.push(vec![row.label.clone(), row.count.to_string(), fmt(row.frequency)]);
        }
        tables.push(csv);
    }
    Ok(Outcome {
        status: Status::Ok,
        result: to_finite_value(r)?,
        tables,
    })
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}

fn history_text(h: &[usize]) -> String {
    h.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Serialize)]
struct HourglassSummary<'a> {
    grains: usize,
    horizon: f64,
    drop_times: &'a [f64],
    f_switches: usize,
    g_switches: usize,
    grid_points: usize,
    grid_f_switches: usize,
    grid_g_switches: usize,
    undersampled: bool,
    stability: &'a StabilityReport,
}

fn hourglass(params: &HourglassConfig, seed: u64) -> Result<Outcome, ExecError> {
    let run = simulate_hourglass(params.grains, params.horizon, params.distribution, seed)?;
    // perturbation trials use a seed stream disjoint from the base draw
    let stability = stability_metrics(&run, params.scale(), params.trials, seed.wrapping_add(1))?;
    let summary = HourglassSummary {
        grains: run.grains,
        horizon: run.horizon,
        drop_times: &run.drop_times,
        f_switches: run.f_switches,
        g_switches: run.g_switches,
        grid_points: run.grid.len(),
        grid_f_switches: run.grid_f_switches,
        grid_g_switches: run.grid_g_switches,
        undersampled: run.undersampled,
        stability: &stability,
    };
    let mut traj = CsvTable::new("trajectory", &["t", "top_count", "f", "g"]);
    for (i, &t) in run.grid.iter().enumerate() {
        traj.push(vec![fmt(t), run.top_count(t).to_string(), run.f[i].to_string(), run.g[i].to_string()]);
    }
    let mut trials = CsvTable::new("stability", &["trial", "f_disagreement", "g_disagreement", "f_switches", "g_switches"]);
    for (i, m) in stability.per_trial.iter().enumerate() {
        trials.push(vec![
            i.to_string(),
            fmt(m.f_disagreement),
            fmt(m.g_disagreement),
            m.f_switches.to_string(),
            m.g_switches.to_string(),
        ]);
    }
    Ok(Outcome {
        status: Status::Ok,
        result: to_finite_value(&summary)?,
        tables: vec![traj, trials],
    })
}

fn matrix_json(d: &DecoherenceMatrix) -> serde_json::Value {
    let n = d.len();
    let rows: Vec<Vec<[f64; 2]>> = (0..n)
        .map(|i| (0..n).map(|j| d.entry(i, j)).map(|c| [c.re, c.im]).collect())
        .collect();
    json!({ "labels": d.labels(), "entries": rows })
}

fn history_set(spec: &HistorySetSpec, epsilon: f64) -> Result<Outcome, ExecError> {
    let set = spec.build().map_err(|v| ExecError::Config(v.to_string()))?;
    let d = decoherence_functional(&set)?;
    let report = check_consistency(&d, epsilon)?;
    let mut result = json!({
        "dimension": set.psi0().dim(),
        "history_count": set.history_count(),
        "decoherence": matrix_json(&d),
        "consistency": report,
    });
    let mut tables = Vec::new();
    let mut dtable = CsvTable::new("decoherence", &["row", "column", "re", "im"]);
    for i in 0..d.len() {
        for j in 0..d.len() {
            let c = d.entry(i, j);
            dtable.push(vec![d.labels()[i].clone(), d.labels()[j].clone(), fmt(c.re), fmt(c.im)]);
        }
    }
    tables.push(dtable);
    if !spec.probabilities {
        return Ok(Outcome { status: Status::Ok, result: to_finite_value(&result)?, tables });
    }
    if !report.consistent {
        result["refusal"] = json!({
            "max_normalized_offdiag": report.max_normalized_offdiag,
            "epsilon": epsilon,
            "message": "probabilities requested for an inconsistent set",
        });
        return Ok(Outcome { status: Status::Refused, result: to_finite_value(&result)?, tables });
    }
    let probs = branch_probabilities(&d, &report)?;
    let mut ptable = CsvTable::new("probabilities", &["label", "history", "probability"]);
    for (h, label, p) in probs.iter() {
        ptable.push(vec![label.to_string(), history_text(h), fmt(p)]);
    }
    tables.push(ptable);
    result["probabilities"] = to_finite_value(&probs)?;
    Ok(Outcome { status: Status::Ok, result: to_finite_value(&result)?, tables })
}

#[derive(Serialize)]
struct AutomatonRun {
    inputs: Vec<usize>,
    fold_state: usize,
    compiled_state: usize,
    agrees: bool,
    /// `(a_s, b_s)` archive contents after the run, when archiving.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    archive: Vec<[usize; 2]>,
}

fn max_unitarity_deviation(u: &OperatorMatrix) -> Result<f64, ExecError> {
    let p = u.adjoint().matmul(u).map_err(RobotError::from)?;
    let n = u.dim();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p.get(i, j) - chist_core::C64::new(target, 0.0)).norm());
        }
    }
    Ok(worst)
}

fn automaton(spec: &AutomatonSpec) -> Result<Outcome, ExecError> {
    let a = Automaton::new(&spec.transition, spec.initial_state)?;
    let steps = spec.inputs.iter().map(Vec::len).max().unwrap_or(0).max(1);
    let layout = RobotLayout::new(&a, &[], steps, spec.archive)?;
    let perms = (0..steps)
        .map(|s| automaton_permutation(&a, &layout, s))
        .collect::<Result<Vec<_>, _>>()?;
    let space = layout.space();
    let (pa, pb) = (space.require("A").map_err(RobotError::from)?, space.require("B").map_err(RobotError::from)?);

    let mut runs = Vec::new();
    let mut table = CsvTable::new("runs", &["inputs", "fold_state", "compiled_state", "agrees"]);
    for seq in &spec.inputs {
        let mut digits = vec![0; space.len()];
        digits[pb] = a.initial_state();
        for (s, &x) in seq.iter().enumerate() {
            digits[pa] = x;
            perms[s].apply_digits(&mut digits);
        }
        let archive = if spec.archive {
            (0..seq.len())
                .map(|s| {
                    let (la, lb) = layout.archive_labels(s).expect("archiving layout");
                    [digits[space.position(&la).unwrap()], digits[space.position(&lb).unwrap()]]
                })
                .collect()
        } else {
            Vec::new()
        };
        let fold_state = a.fold(seq);
        let run = AutomatonRun {
            inputs: seq.clone(),
            fold_state,
            compiled_state: digits[pb],
            agrees: fold_state == digits[pb],
            archive,
        };
        table.push(vec![
            history_text(seq),
            run.fold_state.to_string(),
            run.compiled_state.to_string(),
            run.agrees.to_string(),
        ]);
        runs.push(run);
    }

    let dim = space.total_dim();
    let mut result = json!({
        "state_count": a.state_count(),
        "input_count": a.input_count(),
        "initial_state": a.initial_state(),
        "column_injective": a.is_column_injective(),
        "archive": spec.archive,
        "steps": steps,
        "dimension": dim,
        "runs": runs,
    });
    if dim <= DENSE_CHECK_DIM.min(MAX_DENSE_DIM) {
        let mut worst: f64 = 0.0;
        for s in 0..steps {
            worst = worst.max(max_unitarity_deviation(&compile_automaton_step(&a, &layout, s)?)?);
        }
        result["max_unitarity_deviation"] = json!(worst);
    }
    Ok(Outcome {
        status: Status::Ok,
        result: to_finite_value(&result)?,
        tables: vec![table],
    })
}
