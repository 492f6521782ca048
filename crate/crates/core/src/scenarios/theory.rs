use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::histories::{
    branch_probabilities, check_consistency, decoherence_functional, projective_measure, Dynamics, History,
    HistorySet, ProjectorFamily,
};
use crate::robot::premeasurement;
use crate::tensor::{kron_states, SpaceLayout, StateVector};
use crate::C64;

use super::{require_consistent, ExactTable, NamedConsistency, SampledTable, ScenarioError, ScenarioOptions, ScenarioResult, TableRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truth {
    Quantum,
    Classical,
}

fn spin() -> SpaceLayout {
    SpaceLayout::single("S", 2).expect("static layout")
}

fn y_plus() -> StateVector {
    StateVector::new(spin(), vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(0.0, FRAC_1_SQRT_2)])
        .expect("static state")
}

fn x_family(layout: SpaceLayout) -> ProjectorFamily {
    let s = FRAC_1_SQRT_2;
    let plus = StateVector::from_real(layout.clone(), &[s, s]).expect("static state");
    let minus = StateVector::from_real(layout.clone(), &[s, -s]).expect("static state");
    ProjectorFamily::from_basis(layout, &[plus, minus], vec!["x+".into(), "x-".into()]).expect("orthonormal")
}

fn z_family(layout: SpaceLayout) -> ProjectorFamily {
    let up = StateVector::basis(layout.clone(), 0).expect("static state");
    let down = StateVector::basis(layout.clone(), 1).expect("static state");
    ProjectorFamily::from_basis(layout, &[up, down], vec!["z+".into(), "z-".into()]).expect("orthonormal")
}

fn path_label(h: &[usize]) -> String {
    let s = |axis: &str, k: usize| format!("{axis}{}", if k == 0 { "+" } else { "-" });
    format!("{},{},{}", s("x", h[0]), s("z", h[1]), s("x", h[2]))
}

/// Exact probabilities of the 8 outcome paths of an x, z, x measurement
/// sequence on `|y+⟩`, each the squared norm of the collapsed chain
/// `P_k P_j P_i ψ0`.
pub fn xzx_paths() -> Vec<(History, f64)> {
    let (x, z) = (x_family(spin()), z_family(spin()));
    let psi = y_plus();
    let mut out = Vec::with_capacity(8);
    for i in 0..2 {
        let a = x.apply(i, &psi);
        for j in 0..2 {
            let b = z.apply(j, &a);
            for k in 0..2 {
                out.push((vec![i, j, k], x.apply(k, &b).norm_sqr()));
            }
        }
    }
    out
}

/// The same experiment as a history set: the spin is premeasured into
/// three record qubits and histories are taken on the records.
fn record_set() -> Result<HistorySet, ScenarioError> {
    let space = SpaceLayout::new([("S", 2), ("r1", 2), ("r2", 2), ("r3", 2)])?;
    let records = StateVector::from_digits(SpaceLayout::new([("r1", 2), ("r2", 2), ("r3", 2)])?, &[0, 0, 0])?;
    let psi0 = kron_states(&[&y_plus(), &records])?;
    let (x, z) = (x_family(spin()), z_family(spin()));
    let steps = vec![
        premeasurement(&x, &space, "S", "r1", 0)?,
        premeasurement(&z, &space, "S", "r2", 0)?,
        premeasurement(&x, &space, "S", "r3", 0)?,
    ];
    let families = ["r1", "r2", "r3"]
        .iter()
        .map(|r| ProjectorFamily::factor_values(&space, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HistorySet::new(psi0, Dynamics::Steps(steps), vec![1.0, 2.0, 3.0], families)?)
}

/// A robot measures x, z, x on each of `N` spins and calls the world
/// "classical" iff the first and last results agree on every triple.
///
/// Quantum truth collapses `|y+⟩` at each measurement, so first and last
/// agree with probability 1/2. Classical truth gives each spin fixed,
/// independently drawn x and z signs that measurements read without
/// disturbance, so first and last always agree.
pub fn run_theory_discrimination(
    triples: usize,
    truth: Truth,
    seed: u64,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    if triples == 0 {
        return Err(ScenarioError::InvalidParameter("N must be at least 1".into()));
    }
    let paths = xzx_paths();
    let agreement: f64 = paths.iter().filter(|(h, _)| h[0] == h[2]).map(|(_, p)| p).sum();

    let set = record_set()?;
    let d = decoherence_functional(&set)?;
    let report = check_consistency(&d, opts.epsilon)?;
    require_consistent("records", &report)?;
    let records = branch_probabilities(&d, &report)?;
    let cross_check = paths
        .iter()
        .map(|(h, p)| (records.get(h).unwrap_or(f64::NAN) - p).abs())
        .fold(0.0, f64::max);

    let model_rows: Vec<TableRow> = paths
        .iter()
        .map(|(h, p)| TableRow {
            label: path_label(h),
            history: h.clone(),
            probability: match truth {
                Truth::Quantum => *p,
                Truth::Classical => {
                    if h[0] == h[2] {
                        0.25
                    } else {
                        0.0
                    }
                }
            },
        })
        .collect();
    let model = ExactTable {
        name: "paths".into(),
        rows: model_rows,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (x, z) = (x_family(spin()), z_family(spin()));
    let psi0 = y_plus();
    let mut outcomes = Vec::with_capacity(triples);
    for _ in 0..triples {
        let h = match truth {
            Truth::Quantum => {
                let m1 = projective_measure(&psi0, &x, &mut rng)?;
                let m2 = projective_measure(&m1.state, &z, &mut rng)?;
                let m3 = projective_measure(&m2.state, &x, &mut rng)?;
                [m1.outcome, m2.outcome, m3.outcome]
            }
            Truth::Classical => {
                let sx = usize::from(rng.random::<bool>());
                let sz = usize::from(rng.random::<bool>());
                [sx, sz, sx]
            }
        };
        outcomes.push(h);
    }
    let agreements = outcomes.iter().filter(|h| h[0] == h[2]).count();
    let verdict = if agreements == triples { "classical" } else { "quantum" };
    let correct = matches!(
        (truth, verdict),
        (Truth::Quantum, "quantum") | (Truth::Classical, "classical")
    );
    let misclassification = match truth {
        Truth::Quantum => agreement.powi(triples as i32),
        Truth::Classical => 0.0,
    };

    let mut result = ScenarioResult::new("theory-discrimination", seed);
    result.param("triples", triples);
    result.param(
        "truth",
        match truth {
            Truth::Quantum => "quantum",
            Truth::Classical => "classical",
        },
    );
    result.param("epsilon", opts.epsilon);
    result.derive("agreement_probability", agreement);
    result.derive("record_set_agreement", records.iter().filter(|(h, _, _)| h[0] == h[2]).map(|(_, _, p)| p).sum::<f64>());
    result.derive("record_set_max_deviation", cross_check);
    result.derive("agreements", agreements);
    result.derive("sampled_agreement_rate", agreements as f64 / triples as f64);
    result.derive("verdict", verdict);
    result.derive("correct", correct);
    result.derive("misclassification_probability", misclassification);
    result.sampled.push(SampledTable::tally(
        &model,
        outcomes.iter().map(|h| 4 * h[0] + 2 * h[1] + h[2]).collect::<Vec<_>>(),
    ));
    result.exact.push(model);
    result.exact.push(ExactTable::from_probabilities("records", &records));
    result.consistency.push(NamedConsistency {
        name: "records".into(),
        report,
    });
    result.check_tables()?;
    Ok(result)
}
