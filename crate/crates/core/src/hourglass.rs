//! Classical hourglass: grains fall at random times and two coarse-grained
//! variables are tracked on a time grid. `f(t)` asks whether more than half
//! the sand is on top; `g(t)` asks whether an odd number of grains is on
//! top. Jittering the drop times barely moves `f` but scrambles `g`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::{self, Execution};

/// Grid size used by [`simulate_hourglass`].
pub const GRID_POINTS: usize = 1000;

/// Drop times lie in `(0, DROP_FRACTION · horizon]`.
pub const DROP_FRACTION: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HourglassError {
    #[error("need at least one grain")]
    NoGrains,
    #[error("horizon must be positive and finite, got {0}")]
    BadHorizon(f64),
    #[error("perturbation scale must be nonnegative and finite, got {0}")]
    BadScale(f64),
    #[error("drop time {0} is not a positive finite number")]
    BadDropTime(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DropDistribution {
    /// i.i.d. uniform on `(0, 0.9 h]`.
    #[default]
    Uniform,
    /// Mean of two uniforms on `(0, 0.9 h]`: a triangular law peaked at
    /// `0.45 h`.
    Clustered,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HourglassRun {
    pub grains: usize,
    pub horizon: f64,
    /// Sorted ascending.
    pub drop_times: Vec<f64>,
    pub grid: Vec<f64>,
    /// `f` on the grid: 1 iff more than half the grains are on top.
    pub f: Vec<u8>,
    /// `g` on the grid: 1 iff the number of grains on top is odd.
    pub g: Vec<u8>,
    /// Transitions of `f` counted on the exact drop times.
    pub f_switches: usize,
    /// Transitions of `g` counted on the exact drop times.
    pub g_switches: usize,
    pub grid_f_switches: usize,
    pub grid_g_switches: usize,
    /// The grid misses transitions that happen between grid points.
    pub undersampled: bool,
}

fn f_of(top: usize, grains: usize) -> u8 {
    u8::from(2 * top > grains)
}

fn g_of(top: usize) -> u8 {
    (top % 2) as u8
}

fn transitions(xs: &[u8]) -> usize {
    xs.windows(2).filter(|w| w[0] != w[1]).count()
}

impl HourglassRun {
    /// Builds the trajectories for given drop times on a `points`-point grid
    /// over `[0, horizon]`.
    pub fn from_drop_times(
        mut drop_times: Vec<f64>,
        horizon: f64,
        points: usize,
    ) -> Result<Self, HourglassError> {
        if drop_times.is_empty() {
            return Err(HourglassError::NoGrains);
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(HourglassError::BadHorizon(horizon));
        }
        if let Some(&t) = drop_times.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(HourglassError::BadDropTime(t));
        }
        drop_times.sort_by(f64::total_cmp);
        let m = drop_times.len();
        let points = points.max(2);
        let grid: Vec<f64> = (0..points).map(|k| horizon * k as f64 / (points - 1) as f64).collect();

        // top(t) = #{drops > t}; both sequences are sorted
        let mut fallen = 0;
        let (mut f, mut g) = (Vec::with_capacity(points), Vec::with_capacity(points));
        for &t in &grid {
            while fallen < m && drop_times[fallen] <= t {
                fallen += 1;
            }
            f.push(f_of(m - fallen, m));
            g.push(g_of(m - fallen));
        }

        // exact switches: walk the distinct drop times
        let (mut f_switches, mut g_switches) = (0, 0);
        let (mut prev_f, mut prev_g) = (f_of(m, m), g_of(m));
        let mut i = 0;
        while i < m {
            let mut j = i;
            while j < m && drop_times[j] == drop_times[i] {
                j += 1;
            }
            let top = m - j;
            let (nf, ng) = (f_of(top, m), g_of(top));
            f_switches += usize::from(nf != prev_f);
            g_switches += usize::from(ng != prev_g);
            (prev_f, prev_g) = (nf, ng);
            i = j;
        }
        let grid_f_switches = transitions(&f);
        let grid_g_switches = transitions(&g);
        Ok(Self {
            grains: m,
            horizon,
            undersampled: grid_f_switches != f_switches || grid_g_switches != g_switches,
            drop_times,
            grid,
            f,
            g,
            f_switches,
            g_switches,
            grid_f_switches,
            grid_g_switches,
        })
    }

    /// Grains on top at time `t`.
    pub fn top_count(&self, t: f64) -> usize {
        self.grains - self.drop_times.partition_point(|&d| d <= t)
    }
}

fn draw<R: Rng>(rng: &mut R, dist: DropDistribution, span: f64) -> f64 {
    // 1 − u lies in (0, 1], so every drop time is positive
    let mut u = || 1.0 - rng.random::<f64>();
    match dist {
        DropDistribution::Uniform => span * u(),
        DropDistribution::Clustered => span * (u() + u()) / 2.0,
    }
}

pub fn simulate_hourglass(
    grains: usize,
    horizon: f64,
    distribution: DropDistribution,
    seed: u64,
) -> Result<HourglassRun, HourglassError> {
    if grains == 0 {
        return Err(HourglassError::NoGrains);
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(HourglassError::BadHorizon(horizon));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = DROP_FRACTION * horizon;
    let times = (0..grains).map(|_| draw(&mut rng, distribution, span)).collect();
    HourglassRun::from_drop_times(times, horizon, GRID_POINTS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub f_disagreement: f64,
    pub g_disagreement: f64,
    pub f_switches: usize,
    pub g_switches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub perturbation_scale: f64,
    pub trials: usize,
    pub seed: u64,
    /// Mean fraction of grid points where the perturbed `f` differs.
    pub f_disagreement: f64,
    pub g_disagreement: f64,
    pub f_switches_min: usize,
    pub f_switches_max: usize,
    pub g_switches_min: usize,
    pub g_switches_max: usize,
    pub per_trial: Vec<TrialMetrics>,
}

fn disagreement(a: &[u8], b: &[u8]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
}

/// Jitters every drop time by uniform `±scale` (reflected at 0 so times
/// stay positive) and compares the perturbed trajectories with `base`.
/// Trial `i` draws from its own generator seeded with `seed + i`, so the
/// result does not depend on execution order.
pub fn stability_metrics(
    base: &HourglassRun,
    scale: f64,
    trials: usize,
    seed: u64,
) -> Result<StabilityReport, HourglassError> {
    stability_metrics_with(base, scale, trials, seed, Execution::default())
}

pub fn stability_metrics_with(
    base: &HourglassRun,
    scale: f64,
    trials: usize,
    seed: u64,
    exec: Execution,
) -> Result<StabilityReport, HourglassError> {
    if !(scale.is_finite() && scale >= 0.0) {
        return Err(HourglassError::BadScale(scale));
    }
    let points = base.grid.len();
    let per_trial = exec::map_indexed(exec, trials, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
        let times: Vec<f64> = base
            .drop_times
            .iter()
            .map(|&t| {
                let jitter = if scale > 0.0 { rng.random_range(-scale..=scale) } else { 0.0 };
                let x = (t + jitter).abs();
                if x > 0.0 { x } else { t }
            })
            .collect();
        let run = HourglassRun::from_drop_times(times, base.horizon, points)?;
        Ok(TrialMetrics {
            f_disagreement: disagreement(&base.f, &run.f),
            g_disagreement: disagreement(&base.g, &run.g),
            f_switches: run.f_switches,
            g_switches: run.g_switches,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, HourglassError>>()?;
    let mean = |sel: fn(&TrialMetrics) -> f64| {
        if per_trial.is_empty() {
            0.0
        } else {
            per_trial.iter().map(sel).sum::<f64>() / per_trial.len() as f64
        }
    };
    let range = |sel: fn(&TrialMetrics) -> usize| {
        (
            per_trial.iter().map(sel).min().unwrap_or(0),
            per_trial.iter().map(sel).max().unwrap_or(0),
        )
    };
    let (f_switches_min, f_switches_max) = range(|t| t.f_switches);
    let (g_switches_min, g_switches_max) = range(|t| t.g_switches);
    Ok(StabilityReport {
        perturbation_scale: scale,
        trials,
        seed,
        f_disagreement: mean(|t| t.f_disagreement),
        g_disagreement: mean(|t| t.g_disagreement),
        f_switches_min,
        f_switches_max,
        g_switches_min,
        g_switches_max,
        per_trial,
    })
}
