use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::histories::{projective_measure, ProjectorFamily};
use crate::tensor::{SpaceLayout, StateVector};
use crate::C64;

use super::{amplitude_weights, ExactTable, SampledTable, ScenarioError, ScenarioOptions, ScenarioResult};

const SIGNIFICANCE: f64 = 3.0;

/// Two-sample z statistic for equal proportions; zero when the pooled
/// proportion is 0 or 1.
fn two_sample_z(c1: usize, c2: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (f1, f2) = (c1 as f64 / n as f64, c2 as f64 / n as f64);
    let p = (c1 + c2) as f64 / (2 * n) as f64;
    let se = (p * (1.0 - p) * 2.0 / n as f64).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (f1 - f2).abs() / se
}

/// Can the robot tell `N` copies of `α|Q_1⟩ + β|Q_2⟩` from a shuffled pool
/// of `round(|α|² N)` copies of `|Q_1⟩` and the rest `|Q_2⟩`?
///
/// Two strategies are compared: measuring `{Q_1, Q_2}`, where both
/// preparations give the same statistics, and measuring the rotated basis
/// `{χ_1 = αQ_1 + βQ_2, χ_2 = β*Q_1 − α*Q_2}`, where the pure preparation
/// always yields `χ_1`. Each sampled table holds `samples` draws; mixture
/// draws pick a copy from the pool uniformly at random.
pub fn run_preparation_discrimination(
    alpha: C64,
    beta: C64,
    copies: usize,
    seed: u64,
    opts: &ScenarioOptions,
) -> Result<ScenarioResult, ScenarioError> {
    let (a2, b2) = amplitude_weights(alpha, beta)?;
    if copies == 0 {
        return Err(ScenarioError::InvalidParameter("N must be at least 1".into()));
    }
    let q = SpaceLayout::single("Q", 2)?;
    let pure = StateVector::new(q.clone(), vec![alpha, beta])?;
    let chi2 = StateVector::new(q.clone(), vec![beta.conj(), -alpha.conj()])?;
    let z_basis = ProjectorFamily::factor_values(&q, "Q")?;
    let rotated = ProjectorFamily::from_basis(
        q.clone(),
        &[pure.clone(), chi2],
        vec!["chi1".into(), "chi2".into()],
    )?;

    let exact_n1 = a2 * copies as f64;
    let n1 = exact_n1.round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<StateVector> = (0..copies)
        .map(|i| StateVector::basis(q.clone(), usize::from(i >= n1)))
        .collect::<Result<_, _>>()?;
    pool.shuffle(&mut rng);

    let mut result = ScenarioResult::new("preparation-discrimination", seed);
    result.param("alpha", alpha);
    result.param("beta", beta);
    result.param("copies", copies);
    result.param("samples", opts.samples);
    result.derive("mixture_q1_copies", n1);
    result.derive("rounding", exact_n1 - n1 as f64);

    let strategies = [("z", &z_basis, ["Q1", "Q2"]), ("rotated", &rotated, ["chi1", "chi2"])];
    for (strategy, family, labels) in strategies {
        let p_pure: Vec<f64> = (0..2).map(|k| family.probability(k, &pure)).collect();
        let p_mix: Vec<f64> = (0..2)
            .map(|k| pool.iter().map(|s| family.probability(k, s)).sum::<f64>() / copies as f64)
            .collect();
        let pure_table = ExactTable::from_values(&format!("pure/{strategy}"), &labels, &p_pure);
        let mix_table = ExactTable::from_values(&format!("mixture/{strategy}"), &labels, &p_mix);

        let mut pure_draws = Vec::with_capacity(opts.samples);
        let mut mix_draws = Vec::with_capacity(opts.samples);
        for _ in 0..opts.samples {
            pure_draws.push(projective_measure(&pure, family, &mut rng)?.outcome);
        }
        for _ in 0..opts.samples {
            let copy = &pool[rng.random_range(0..copies)];
            mix_draws.push(projective_measure(copy, family, &mut rng)?.outcome);
        }
        let pure_sampled = SampledTable::tally(&pure_table, pure_draws);
        let mix_sampled = SampledTable::tally(&mix_table, mix_draws);
        let z = two_sample_z(pure_sampled.rows[0].count, mix_sampled.rows[0].count, opts.samples);
        let verdict = if z > SIGNIFICANCE { "distinguishable" } else { "indistinguishable" };
        let exact_gap = (p_pure[0] - p_mix[0]).abs();

        result.derive(&format!("{strategy}_pure_outcome1"), p_pure[0]);
        result.derive(&format!("{strategy}_mixture_outcome1"), p_mix[0]);
        result.derive(&format!("{strategy}_z_score"), z);
        result.derive(&format!("{strategy}_verdict"), verdict);
        result.derive(&format!("{strategy}_exact_gap"), exact_gap);
        result.exact.push(pure_table);
        result.exact.push(mix_table);
        result.sampled.push(pure_sampled);
        result.sampled.push(mix_sampled);
    }
    result.derive("rotated_mixture_ideal", a2 * a2 + b2 * b2);
    result.check_tables()?;
    Ok(result)
}
