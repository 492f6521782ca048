use crate::tensor::{validate_operator, OperatorKind, OperatorMatrix, Spectrum};

use super::{HistoryError, ProjectorFamily};

const DENSITY_TOL: f64 = 1e-10;

/// `Σ_k P_k ρ P_k`: the density operator with every coherence between
/// different family subspaces removed.
pub fn decohere(rho: &OperatorMatrix, family: &ProjectorFamily) -> Result<OperatorMatrix, HistoryError> {
    if rho.layout() != family.layout() {
        return Err(HistoryError::LayoutMismatch("density operator".into()));
    }
    let herm = validate_operator(rho, OperatorKind::Hermitian, DENSITY_TOL);
    if !herm.passed {
        return Err(HistoryError::InvalidDensity(format!(
            "not Hermitian (deviation {:e})",
            herm.max_deviation
        )));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(HistoryError::InvalidDensity(format!("trace is {tr}")));
    }
    let min_eig = Spectrum::new(rho)?
        .eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if min_eig < -DENSITY_TOL {
        return Err(HistoryError::InvalidDensity(format!(
            "negative eigenvalue {min_eig:e}"
        )));
    }
    let mut out = OperatorMatrix::zeros(rho.layout().clone())?;
    for p in family.projectors() {
        out = out.add(&p.matmul(rho)?.matmul(p)?)?;
    }
    Ok(out.with_kind(OperatorKind::Hermitian))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{SpaceLayout, StateVector};
    use crate::C64;
    use rand::SeedableRng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn q() -> SpaceLayout {
        SpaceLayout::single("Q", 2).unwrap()
    }

    #[test]
    fn x_plus_becomes_even_mixture() {
        let plus = StateVector::from_real(q(), &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        let rho = OperatorMatrix::outer(&plus, &plus).unwrap();
        let z = ProjectorFamily::factor_values(&q(), "Q").unwrap();
        let out = decohere(&rho, &z).unwrap();
        let expected = OperatorMatrix::from_real_rows(q(), &[&[0.5, 0.0], &[0.0, 0.5]]).unwrap();
        assert!(out.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn block_diagonal_input_is_a_fixed_point() {
        let rho = OperatorMatrix::from_real_rows(q(), &[&[0.3, 0.0], &[0.0, 0.7]]).unwrap();
        let z = ProjectorFamily::factor_values(&q(), "Q").unwrap();
        assert_eq!(decohere(&rho, &z).unwrap().max_abs_diff(&rho), 0.0);
    }

    #[test]
    fn pure_state_becomes_weighted_mixture_of_collapsed_states() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let l = SpaceLayout::single("S", 4).unwrap();
        let psi = crate::random::state(&mut rng, l.clone());
        let fam = crate::random::family(&mut rng, l.clone(), 4);
        let rho = OperatorMatrix::outer(&psi, &psi).unwrap();
        let out = decohere(&rho, &fam).unwrap();
        let mut expected = OperatorMatrix::zeros(l).unwrap();
        for k in 0..fam.len() {
            let pk = fam.probability(k, &psi);
            let collapsed = fam.apply(k, &psi).normalized().unwrap();
            let term = OperatorMatrix::outer(&collapsed, &collapsed).unwrap().scaled(C64::new(pk, 0.0));
            expected = expected.add(&term).unwrap();
        }
        assert!(out.max_abs_diff(&expected) < 1e-12);
        assert!((out.trace().re - 1.0).abs() < 1e-12);
        // coherences between different family subspaces vanish
        for i in 0..fam.len() {
            for j in 0..fam.len() {
                if i != j {
                    let block = fam.projector(i).matmul(&out).unwrap().matmul(fam.projector(j)).unwrap();
                    assert!(block.max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_invalid_density_operators() {
        let z = ProjectorFamily::factor_values(&q(), "Q").unwrap();
        let bad_trace = OperatorMatrix::from_real_rows(q(), &[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!(matches!(decohere(&bad_trace, &z), Err(HistoryError::InvalidDensity(_))));
        let negative = OperatorMatrix::from_real_rows(q(), &[&[1.5, 0.0], &[0.0, -0.5]]).unwrap();
        assert!(matches!(decohere(&negative, &z), Err(HistoryError::InvalidDensity(_))));
        let skew = OperatorMatrix::from_real_rows(q(), &[&[0.5, 1.0], &[0.0, 0.5]]).unwrap();
        assert!(matches!(decohere(&skew, &z), Err(HistoryError::InvalidDensity(_))));
    }
}
