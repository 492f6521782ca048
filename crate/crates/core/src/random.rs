//! Seeded generators for random states, operators and projector families.
//! Used by the property tests, the acceptance suite and the benches.

use rand::Rng;

use crate::histories::{Dynamics, HistorySet, ProjectorFamily};
use crate::robot::premeasurement;
use crate::tensor::{kron_states, OperatorKind, OperatorMatrix, SpaceLayout, Spectrum, StateVector};
use crate::C64;

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    // Box–Muller
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let th = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * th.cos(), r * th.sin())
}

/// Normalized state with i.i.d. complex Gaussian amplitudes.
pub fn state<R: Rng + ?Sized>(rng: &mut R, layout: SpaceLayout) -> StateVector {
    let amps = (0..layout.total_dim()).map(|_| gaussian_pair(rng)).collect();
    StateVector::new(layout, amps)
        .expect("length matches")
        .normalized()
        .expect("nonzero with probability one")
}

/// Hermitian matrix with entries of magnitude roughly `scale`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, layout: SpaceLayout, scale: f64) -> OperatorMatrix {
    let n = layout.total_dim();
    let mut data = vec![C64::new(0.0, 0.0); n * n];
    for i in 0..n {
        data[i * n + i] = C64::new(scale * gaussian_pair(rng).re, 0.0);
        for j in i + 1..n {
            let z = gaussian_pair(rng) * (scale / std::f64::consts::SQRT_2);
            data[i * n + j] = z;
            data[j * n + i] = z.conj();
        }
    }
    OperatorMatrix::from_vec(layout, data)
        .expect("dimension checked")
        .with_kind(OperatorKind::Hermitian)
}

/// Unitary `exp(−iH)` for a random Hermitian `H`.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, layout: SpaceLayout) -> OperatorMatrix {
    let h = hermitian(rng, layout, 2.0);
    Spectrum::new(&h).expect("Hermitian by construction").propagator(1.0)
}

/// Orthonormal basis from the columns of a random unitary.
pub fn basis<R: Rng + ?Sized>(rng: &mut R, layout: SpaceLayout) -> Vec<StateVector> {
    let u = unitary(rng, layout.clone());
    let n = layout.total_dim();
    (0..n)
        .map(|j| {
            StateVector::new(layout.clone(), (0..n).map(|i| u.get(i, j)).collect())
                .expect("length matches")
        })
        .collect()
}

/// Family of `parts` projectors whose ranges partition a random basis.
pub fn family<R: Rng + ?Sized>(rng: &mut R, layout: SpaceLayout, parts: usize) -> ProjectorFamily {
    let n = layout.total_dim();
    let parts = parts.clamp(1, n);
    let vectors = basis(rng, layout.clone());
    // every part gets at least one vector; the rest land uniformly
    let mut owner: Vec<usize> = (0..n).map(|i| if i < parts { i } else { rng.random_range(0..parts) }).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        owner.swap(i, j);
    }
    let groups: Vec<Vec<StateVector>> = (0..parts)
        .map(|p| {
            vectors
                .iter()
                .zip(&owner)
                .filter(|(_, o)| **o == p)
                .map(|(v, _)| v.clone())
                .collect()
        })
        .collect();
    let labels = (0..parts).map(|p| p.to_string()).collect();
    ProjectorFamily::from_subspaces(layout, &groups, labels).expect("valid by construction")
}

/// Consistent set on a system `S` of dimension `system_dim` plus one
/// record register `R_i` per time. Interval `i` applies a random unitary
/// to `S` and then premeasures a random `parts`-member family into `R_i`;
/// the history families are those same system families. The records keep
/// distinct branches orthogonal, so the set is consistent by construction.
pub fn consistent_set<R: Rng + ?Sized>(
    rng: &mut R,
    system_dim: usize,
    times: usize,
    parts: usize,
) -> HistorySet {
    let s = SpaceLayout::single("S", system_dim).expect("positive dimension");
    let records: Vec<String> = (1..=times).map(|i| format!("R{i}")).collect();
    let parts = parts.clamp(1, system_dim);
    let layout = SpaceLayout::new(
        std::iter::once(("S".to_string(), system_dim)).chain(records.iter().map(|r| (r.clone(), parts))),
    )
    .expect("distinct labels");
    let blank = StateVector::basis(layout.select(&(1..=times).collect::<Vec<_>>()).expect("in range"), 0)
        .expect("nonempty");
    let psi0 = kron_states(&[&state(rng, s.clone()), &blank]).expect("disjoint labels");
    let mut steps = Vec::with_capacity(times);
    let mut families = Vec::with_capacity(times);
    for r in &records {
        let fam = family(rng, s.clone(), parts);
        let u = unitary(rng, s.clone()).embed(&layout, &["S"]).expect("S is a factor");
        let record = premeasurement(&fam, &layout, "S", r, 0).expect("valid registers");
        steps.push(record.matmul(&u).expect("same layout").with_kind(OperatorKind::Unitary));
        families.push(fam.embed(&layout, &["S"]).expect("S is a factor"));
    }
    let times: Vec<f64> = (1..=times).map(|t| t as f64).collect();
    HistorySet::new(psi0, Dynamics::Steps(steps), times, families).expect("valid by construction")
}
