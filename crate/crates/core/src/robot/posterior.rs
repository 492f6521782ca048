use serde::Serialize;

use super::RobotError;

const NORM_TOL: f64 = 1e-12;
const WINDOW_SLACK: f64 = 1e-12;

/// Weights over the grid `p_i = i / (G − 1)` for the parameter `|α|²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Posterior {
    grid: Vec<f64>,
    weights: Vec<f64>,
    /// Set when an update had zero likelihood everywhere on the support and
    /// fell back to a flat posterior.
    degenerate: bool,
}

impl Posterior {
    pub fn uniform(points: usize) -> Result<Self, RobotError> {
        if points < 2 {
            return Err(RobotError::GridTooSmall(points));
        }
        let grid = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
        Ok(Self {
            grid,
            weights: vec![1.0 / points as f64; points],
            degenerate: false,
        })
    }

    /// Custom prior on the standard grid; weights are renormalized.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self, RobotError> {
        let mut post = Self::uniform(weights.len())?;
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(RobotError::InvalidPosterior("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(RobotError::InvalidPosterior("weights sum to zero".into()));
        }
        post.weights = weights.iter().map(|w| w / total).collect();
        Ok(post)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn is_normalized(&self) -> bool {
        (self.weights.iter().sum::<f64>() - 1.0).abs() <= NORM_TOL
    }
}

/// `n ln p` with `0 ln 0 = 0`.
fn xlogy(n: u64, p: f64) -> f64 {
    if n == 0 {
        0.0
    } else {
        n as f64 * p.ln()
    }
}

/// Multiplies by the likelihood `p^{n1} (1 − p)^{n − n1}` and renormalizes.
/// Works in log space so large counts do not underflow.
pub fn bayes_update(post: &Posterior, n1: u64, n: u64) -> Result<Posterior, RobotError> {
    if n1 > n {
        return Err(RobotError::CountOrder { n1, n });
    }
    let logs: Vec<f64> = post
        .grid
        .iter()
        .zip(&post.weights)
        .map(|(&p, &w)| w.ln() + xlogy(n1, p) + xlogy(n - n1, 1.0 - p))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = post.clone();
    if max == f64::NEG_INFINITY {
        let g = post.grid.len();
        out.weights = vec![1.0 / g as f64; g];
        out.degenerate = true;
        return Ok(out);
    }
    let unnorm: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = unnorm.iter().sum();
    out.weights = unnorm.iter().map(|w| w / total).collect();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub map: f64,
    pub map_index: usize,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_index: usize,
    pub upper_index: usize,
    /// Weight inside `[lower, upper]`.
    pub mass: f64,
}

/// MAP grid point (leftmost on ties) and the shortest contiguous window of
/// grid points holding at least `level` of the weight (leftmost on ties).
pub fn posterior_summary(post: &Posterior, level: f64) -> Result<PosteriorSummary, RobotError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(RobotError::InvalidLevel(level));
    }
    let w = &post.weights;
    let mut map_index = 0;
    for (i, &x) in w.iter().enumerate() {
        if x > w[map_index] {
            map_index = i;
        }
    }
    let mut prefix = vec![0.0; w.len() + 1];
    for (i, &x) in w.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x;
    }
    let g = w.len();
    let (lo, hi) = (1..=g)
        .find_map(|width| {
            (0..=g - width)
                .find(|&s| prefix[s + width] - prefix[s] >= level - WINDOW_SLACK)
                .map(|s| (s, s + width - 1))
        })
        .unwrap_or((0, g - 1));
    Ok(PosteriorSummary {
        map: post.grid[map_index],
        map_index,
        level,
        lower: post.grid[lo],
        upper: post.grid[hi],
        lower_index: lo,
        upper_index: hi,
        mass: prefix[hi + 1] - prefix[lo],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_data_keeps_the_prior() {
        let prior = Posterior::from_weights((1..=11).map(|i| i as f64).collect()).unwrap();
        let post = bayes_update(&prior, 0, 0).unwrap();
        for (a, b) in post.weights().iter().zip(prior.weights()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn all_successes_give_increasing_weights() {
        let post = bayes_update(&Posterior::uniform(101).unwrap(), 5, 5).unwrap();
        let w = post.weights();
        assert!(w.windows(2).all(|p| p[0] < p[1]));
        let s = posterior_summary(&post, 0.95).unwrap();
        // the likelihood p^5 peaks on the grid endpoint p = 1
        assert_eq!(s.map_index, 100);
    }

    #[test]
    fn map_matches_brute_force_grid_maximum() {
        let post = bayes_update(&Posterior::uniform(101).unwrap(), 36, 100).unwrap();
        let s = posterior_summary(&post, 0.95).unwrap();
        let lik = |p: f64| p.powi(36) * (1.0 - p).powi(64);
        let best = (0..101).max_by(|&a, &b| lik(a as f64 / 100.0).total_cmp(&lik(b as f64 / 100.0))).unwrap();
        assert_eq!(s.map_index, best);
        assert!((s.map - 0.36).abs() < 1e-15);
    }

    #[test]
    fn point_mass_has_zero_width_interval() {
        let mut w = vec![0.0; 21];
        w[7] = 1.0;
        let s = posterior_summary(&Posterior::from_weights(w).unwrap(), 0.9).unwrap();
        assert_eq!((s.lower_index, s.upper_index, s.map_index), (7, 7, 7));
        assert_eq!(s.lower, s.upper);
    }

    #[test]
    fn uniform_interval_is_leftmost_shortest_window() {
        let s = posterior_summary(&Posterior::uniform(101).unwrap(), 0.95).unwrap();
        // oracle: smallest k with k/101 >= 0.95
        let k = (1..=101).find(|&k| k as f64 / 101.0 >= 0.95).unwrap();
        assert_eq!(k, 96);
        assert_eq!((s.lower_index, s.upper_index), (0, 95));
        assert_eq!(s.map_index, 0);
    }

    #[test]
    fn interval_contains_truth_and_shrinks_with_data() {
        let prior = Posterior::uniform(101).unwrap();
        let s100 = posterior_summary(&bayes_update(&prior, 36, 100).unwrap(), 0.95).unwrap();
        let s400 = posterior_summary(&bayes_update(&prior, 144, 400).unwrap(), 0.95).unwrap();
        for s in [s100, s400] {
            assert!(s.lower <= 0.36 && 0.36 <= s.upper);
            assert!(s.mass >= 0.95 - 1e-12);
        }
        assert!(s400.upper - s400.lower < s100.upper - s100.lower);
    }

    #[test]
    fn excluded_support_falls_back_to_flat() {
        let mut w = vec![0.0; 11];
        w[0] = 1.0;
        let post = bayes_update(&Posterior::from_weights(w).unwrap(), 1, 1).unwrap();
        assert!(post.is_degenerate());
        assert!(post.weights().iter().all(|&x| (x - 1.0 / 11.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_bad_arguments() {
        let prior = Posterior::uniform(5).unwrap();
        assert!(bayes_update(&prior, 3, 2).is_err());
        assert!(posterior_summary(&prior, 1.0).is_err());
        assert!(Posterior::uniform(1).is_err());
    }

    proptest! {
        #[test]
        fn updates_compose(a in 0u64..40, b_extra in 0u64..40, c in 0u64..40, d_extra in 0u64..40) {
            let prior = Posterior::uniform(101).unwrap();
            let (b, d) = (a + b_extra, c + d_extra);
            let two = bayes_update(&bayes_update(&prior, a, b).unwrap(), c, d).unwrap();
            let one = bayes_update(&prior, a + c, b + d).unwrap();
            for (x, y) in two.weights().iter().zip(one.weights()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!(two.is_normalized());
            prop_assert!(two.weights().iter().all(|&w| w >= 0.0));
        }
    }
}
