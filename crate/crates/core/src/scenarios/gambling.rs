use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::histories::{
    branch_probabilities, check_consistency, decoherence_functional, sample_histories, Dynamics,
    HistorySet, ProjectorFamily,
};
use crate::robot::{compile_automaton_step, measurement_unitary, Automaton, RobotError, RobotLayout};
use crate::tensor::{SpaceLayout, StateVector};
use crate::C64;

use super::{
    amplitude_weights, require_consistent, ExactTable, NamedConsistency, SampledTable, ScenarioError,
    ScenarioOptions, ScenarioResult,
};

const TIE_TOL: f64 = 1e-12;

/// A robot reads which of `Q_1`, `Q_2` the system is found in and bets at
/// odds `O` on `Q_1`: it wins `O` on `Q_1` and loses 1 on `Q_2`.
///
/// The robot has pointer `A ∈ {null, Q_1, Q_2}`, a brain that latches its
/// first reading, and one archive pair. The initial state is
/// `|A=0, B=ready⟩ ⊗ (α|Q_1⟩ + β|Q_2⟩)`; one premeasurement and one
/// automaton step follow, and histories are taken on the brain.
pub fn run_gambling(
    alpha: C64,
    beta: C64,
    odds: f64,
    seed: u64,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let (a2, b2) = amplitude_weights(alpha, beta)?;
    if !(odds.is_finite() && odds > 0.0) {
        return Err(ScenarioError::InvalidParameter(format!("odds must be positive, got {odds}")));
    }
    let automaton = Automaton::first_reading(3)?;
    let robot = RobotLayout::new(&automaton, &[("Q", 2)], 1, true)?;
    let space = robot.space().clone();

    let q = StateVector::new(SpaceLayout::single("Q", 2)?, vec![alpha, beta])?;
    let mut amps = vec![C64::new(0.0, 0.0); space.total_dim()];
    for (k, &z) in q.amplitudes().iter().enumerate() {
        amps[space.index(&[0, 0, 0, 0, k])?] = z;
    }
    let psi0 = StateVector::new(space.clone(), amps)?;

    let z_basis = ProjectorFamily::factor_values(q.layout(), "Q")?;
    let measure = measurement_unitary(&z_basis, &robot, 0)?;
    let after_reading = measure.apply(&psi0)?;
    if !robot.archive_clear(&after_reading, 0)? {
        return Err(RobotError::ArchiveNotClear { step: 0 }.into());
    }
    let step = compile_automaton_step(&automaton, &robot, 0)?.matmul(&measure)?;

    let brain = ProjectorFamily::from_predicate(
        &space,
        3,
        vec!["ready".into(), "saw Q1".into(), "saw Q2".into()],
        |d| d[1],
    )?;
    let set = HistorySet::new(psi0, Dynamics::Steps(vec![step]), vec![1.0], vec![brain])?;
    let d = decoherence_functional(&set)?;
    let report = check_consistency(&d, opts.epsilon)?;
    require_consistent("brain", &report)?;
    let table = branch_probabilities(&d, &report)?;
    let p1 = table.probabilities[1];
    let p2 = table.probabilities[2];

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws = sample_histories(&set, &report, opts.samples, &mut rng)?;
    let exact = ExactTable::from_probabilities("brain", &table);
    let sampled = SampledTable::tally(&exact, draws.iter().map(|h| h[0]));
    let sampled_winnings = if opts.samples == 0 {
        0.0
    } else {
        (odds * sampled.rows[1].count as f64 - sampled.rows[2].count as f64) / opts.samples as f64
    };

    let margin = odds * a2 - b2;
    let mut result = ScenarioResult::new("gambling", seed);
    result.param("alpha", alpha);
    result.param("beta", beta);
    result.param("odds", odds);
    result.param("epsilon", opts.epsilon);
    result.param("samples", opts.samples);
    result.derive("p_q1", p1);
    result.derive("p_q2", p2);
    result.derive("expected_winnings", odds * p1 - p2);
    result.derive("expected_winnings_formula", margin);
    result.derive("sampled_winnings", sampled_winnings);
    result.derive("decision", if margin >= 0.0 { "accept" } else { "decline" });
    result.derive("tie", margin.abs() <= TIE_TOL);
    result.exact.push(exact);
    result.sampled.push(sampled);
    result.consistency.push(NamedConsistency {
        name: "brain".into(),
        report,
    });
    result.check_tables()?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(a2: f64, odds: f64) -> ScenarioResult {
        let alpha = C64::new(a2.sqrt(), 0.0);
        let beta = C64::new((1.0 - a2).sqrt(), 0.0);
        run_gambling(alpha, beta, odds, 42, &ScenarioOptions::default()).unwrap()
    }

    #[test]
    fn reference_bet() {
        let r = run(0.36, 2.0);
        assert!((r.real("expected_winnings").unwrap() - 0.08).abs() < 1e-12);
        assert_eq!(r.text("decision"), Some("accept"));
        assert_eq!(r.flag("tie"), Some(false));
        let t = r.table("brain").unwrap();
        assert!((t.get("saw Q1").unwrap() - 0.36).abs() < 1e-12);
        assert!(t.get("ready").unwrap().abs() < 1e-15);
        assert!(r.sampled[0].tv_distance < 0.05);
    }

    #[test]
    fn certain_outcome_wins_the_odds() {
        let r = run(1.0, 3.5);
        assert!((r.real("expected_winnings").unwrap() - 3.5).abs() < 1e-12);
        assert_eq!(r.text("decision"), Some("accept"));
    }

    #[test]
    fn break_even_is_accepted_and_flagged() {
        let r = run(0.5, 1.0);
        assert!(r.real("expected_winnings").unwrap().abs() < 1e-12);
        assert_eq!(r.text("decision"), Some("accept"));
        assert_eq!(r.flag("tie"), Some(true));
    }

    #[test]
    fn zero_alpha_declines() {
        let r = run_gambling(C64::new(0.0, 0.0), C64::new(1.0, 0.0), 5.0, 1, &ScenarioOptions::default()).unwrap();
        assert_eq!(r.text("decision"), Some("decline"));
        assert!((r.real("expected_winnings").unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn decision_ignores_global_phase() {
        let (alpha, beta) = (C64::new(0.6, 0.0), C64::new(0.0, 0.8));
        let base = run_gambling(alpha, beta, 1.7, 3, &ScenarioOptions::default()).unwrap();
        for phi in [0.3, 1.9, -2.4] {
            let ph = C64::from_polar(1.0, phi);
            let r = run_gambling(alpha * ph, beta * ph, 1.7, 3, &ScenarioOptions::default()).unwrap();
            assert_eq!(r.text("decision"), base.text("decision"));
            let diff = r.real("expected_winnings").unwrap() - base.real("expected_winnings").unwrap();
            assert!(diff.abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let opts = ScenarioOptions::default();
        assert!(run_gambling(C64::new(0.6, 0.0), C64::new(0.7, 0.0), 2.0, 0, &opts).is_err());
        assert!(run_gambling(C64::new(0.6, 0.0), C64::new(0.8, 0.0), 0.0, 0, &opts).is_err());
    }
}
