//! Catalog of the built-in scenarios.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub default: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub name: String,
    /// Topic of the source discussion the scenario reproduces.
    pub anchor: String,
    pub summary: String,
    pub parameters: Vec<Parameter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Catalog {
    pub schema: String,
    pub scenarios: Vec<Entry>,
}

fn p(name: &str, kind: &str, default: &str, description: &str) -> Parameter {
    Parameter {
        name: name.into(),
        kind: kind.into(),
        default: default.into(),
        description: description.into(),
    }
}

fn amplitudes() -> Vec<Parameter> {
    vec![
        p("alpha_sq", "real", "required", "|alpha|^2 with zero phase; or give alpha and beta"),
        p("beta_sq", "real", "1 - alpha_sq", "|beta|^2"),
        p("alpha", "[re, im]", "none", "complex amplitude of Q1"),
        p("beta", "[re, im]", "none", "complex amplitude of Q2"),
    ]
}

fn with(mut base: Vec<Parameter>, rest: Vec<Parameter>) -> Vec<Parameter> {
    base.extend(rest);
    base
}

fn entry(name: &str, anchor: &str, summary: &str, parameters: Vec<Parameter>) -> Entry {
    Entry {
        name: name.into(),
        anchor: anchor.into(),
        summary: summary.into(),
        parameters,
    }
}

/// Alphabetized catalog.
pub fn catalog() -> Catalog {
    let samples = p("samples", "integer", "10000", "Monte Carlo draws");
    Catalog {
        schema: crate::config::CONFIG_SCHEMA.into(),
        scenarios: vec![
            entry(
                "canonical-observer",
                "an imaginary recorder added to a consistent set",
                "Recorder extension of the full-quantum estimation set plus the correlated pointer/brain families",
                with(amplitudes(), vec![p("copies", "integer", "2", "copies measured, 1 to 3")]),
            ),
            entry(
                "gambling",
                "a robot betting on a quantum measurement",
                "Expected winnings of a bet at odds O and the robot's accept/decline decision",
                with(
                    amplitudes(),
                    vec![p("odds", "real", "required", "payout O per unit stake"), samples.clone()],
                ),
            ),
            entry(
                "hourglass",
                "more sand on top versus an odd number of grains on top",
                "Switch counts and perturbation stability of a coarse and a parity-like variable",
                vec![
                    p("grains", "integer", "100", "grain count M"),
                    p("horizon", "real", "1.0", "simulated time span"),
                    p("distribution", "uniform | clustered", "uniform", "drop-time law"),
                    p("perturbation_scale", "real", "0.01 * horizon", "jitter half-width"),
                    p("trials", "integer", "100", "perturbed reruns"),
                ],
            ),
            entry(
                "preparation-discrimination",
                "telling a pure product from a mixture of copies",
                "Outcome statistics of z-basis and rotated-basis strategies on both preparations",
                with(
                    amplitudes(),
                    vec![p("copies", "integer", "5", "copies per preparation"), samples.clone()],
                ),
            ),
            entry(
                "state-estimation",
                "estimating the microscopic state with a confidence limit",
                "Product-law branch probabilities and the robot's grid posterior over |alpha|^2",
                with(
                    amplitudes(),
                    vec![
                        p("copies", "integer", "5", "copies measured N"),
                        p("mode", "full-quantum | classical-shortcut", "full-quantum", "simulation path"),
                        samples.clone(),
                        p("grid_points", "integer", "101", "posterior grid size"),
                        p("level", "real", "0.95", "credible level"),
                    ],
                ),
            ),
            entry(
                "theory-discrimination",
                "deciding between quantum and classical spin theories",
                "Agreement of first and third readings in x-z-x triples and the misclassification risk",
                vec![
                    p("triples", "integer", "20", "triples per run N"),
                    p("truth", "quantum | classical", "quantum", "which theory generates data"),
                    samples,
                ],
            ),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_the_six_scenarios_in_order() {
        let names: Vec<String> = catalog().scenarios.into_iter().map(|e| e.name).collect();
        assert_eq!(names, crate::config::SCENARIOS);
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn every_entry_has_an_anchor() {
        assert!(catalog().scenarios.iter().all(|e| !e.anchor.is_empty()));
    }

    #[test]
    fn catalog_round_trips_through_the_serializer() {
        let c = catalog();
        let v = crate::report::to_finite_value(&c).unwrap();
        let back: Catalog = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
