use nalgebra::{DMatrix, SymmetricEigen};

use crate::C64;

use super::{
    validate_operator, OperatorKind, OperatorMatrix, SpaceLayout, TensorError, HERMITIAN_TOL,
};

/// Eigendecomposition `H = V diag(λ) V†` of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct Spectrum {
    layout: SpaceLayout,
    eigenvalues: Vec<f64>,
    vectors: DMatrix<C64>,
}

impl Spectrum {
    pub fn new(h: &OperatorMatrix) -> Result<Self, TensorError> {
        let report = validate_operator(h, OperatorKind::Hermitian, HERMITIAN_TOL);
        if !report.passed {
            return Err(TensorError::NotHermitian {
                deviation: report.max_deviation,
            });
        }
        let n = h.dim();
        // symmetrize so the solver sees an exactly Hermitian input
        let m = DMatrix::from_fn(n, n, |i, j| (h.get(i, j) + h.get(j, i).conj()) * 0.5);
        let eig = SymmetricEigen::new(m);
        Ok(Self {
            layout: h.layout().clone(),
            eigenvalues: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `exp(−i H dt)`.
    pub fn propagator(&self, dt: f64) -> OperatorMatrix {
        let phases: Vec<C64> = self
            .eigenvalues
            .iter()
            .map(|&e| C64::from_polar(1.0, -e * dt))
            .collect();
        self.reconstruct(&phases)
            .with_kind(OperatorKind::Unitary)
    }

    /// `V diag(values) V†`.
    fn reconstruct(&self, values: &[C64]) -> OperatorMatrix {
        let n = self.eigenvalues.len();
        let v = &self.vectors;
        let mut data = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += v[(i, k)] * values[k] * v[(j, k)].conj();
                }
                data[i * n + j] = acc;
            }
        }
        OperatorMatrix::from_vec(self.layout.clone(), data).expect("dimension checked")
    }
}

/// `exp(−i H dt)` for a Hermitian `H` (ħ = 1).
pub fn propagator(h: &OperatorMatrix, dt: f64) -> Result<OperatorMatrix, TensorError> {
    Ok(Spectrum::new(h)?.propagator(dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn q() -> SpaceLayout {
        SpaceLayout::single("Q", 2).unwrap()
    }

    /// Truncated power series Σ_{k<40} (−i H dt)^k / k!.
    fn series_oracle(h: &OperatorMatrix, dt: f64) -> Vec<C64> {
        let n = h.dim();
        let a: Vec<C64> = h.as_slice().iter().map(|x| x * C64::new(0.0, -dt)).collect();
        let mut term: Vec<C64> = (0..n * n)
            .map(|i| if i % (n + 1) == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
            .collect();
        let mut sum = term.clone();
        for k in 1..40 {
            let mut next = vec![C64::new(0.0, 0.0); n * n];
            for i in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        next[i * n + j] += term[i * n + l] * a[l * n + j];
                    }
                }
            }
            term = next.iter().map(|x| x / k as f64).collect();
            for (s, t) in sum.iter_mut().zip(&term) {
                *s += t;
            }
        }
        sum
    }

    fn max_diff(a: &[C64], b: &[C64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let h = OperatorMatrix::zeros(q()).unwrap();
        let u = propagator(&h, 3.7).unwrap();
        assert!(u.max_abs_diff(&OperatorMatrix::identity(q()).unwrap()) < 1e-15);
    }

    #[test]
    fn sign_diagonal_at_pi() {
        let h = OperatorMatrix::from_real_rows(q(), &[&[1.0, 0.0], &[0.0, -1.0]]).unwrap();
        let u = propagator(&h, PI).unwrap();
        let oracle = series_oracle(&h, PI);
        assert!(max_diff(u.as_slice(), &oracle) < 1e-12);
        let minus_id = [-1.0, 0.0, 0.0, -1.0].map(|x| C64::new(x, 0.0));
        assert!(max_diff(u.as_slice(), &minus_id) < 1e-12);
    }

    #[test]
    fn pauli_x_quarter_turn() {
        let h = OperatorMatrix::from_real_rows(q(), &[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let u = propagator(&h, PI / 2.0).unwrap();
        assert!(max_diff(u.as_slice(), &series_oracle(&h, PI / 2.0)) < 1e-12);
        // cos(π/2) I − i sin(π/2) X = −i X
        let expected = [0.0, -1.0, -1.0, 0.0].map(|x| C64::new(0.0, x));
        assert!(max_diff(u.as_slice(), &expected) < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = OperatorMatrix::from_real_rows(q(), &[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(propagator(&h, 1.0), Err(TensorError::NotHermitian { .. })));
    }

    #[test]
    fn group_law_and_unitarity_on_random_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dim in [2usize, 3, 4, 8] {
            let l = SpaceLayout::single("S", dim).unwrap();
            let h = random::hermitian(&mut rng, l.clone(), 1.5);
            let spec = Spectrum::new(&h).unwrap();
            let (t1, t2) = (0.37, 1.21);
            let u1 = spec.propagator(t1);
            let u2 = spec.propagator(t2);
            let u12 = spec.propagator(t1 + t2);
            assert!(u1.matmul(&u2).unwrap().max_abs_diff(&u12) < 1e-10);
            assert!(validate_operator(&u12, OperatorKind::Unitary, 1e-10).passed);
            assert!(max_diff(u1.as_slice(), &series_oracle(&h, t1)) < 1e-10);
        }
    }
}
