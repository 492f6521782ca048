use crate::C64;

use super::{OperatorKind, OperatorMatrix, SpaceLayout, StateVector, TensorError};

/// One input to [`tensor_product`].
#[derive(Debug, Clone, Copy)]
pub enum TensorFactor<'a> {
    State(&'a StateVector),
    Operator(&'a OperatorMatrix),
}

/// Result of [`tensor_product`]; same kind as the inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorProduct {
    State(StateVector),
    Operator(OperatorMatrix),
}

/// Kronecker product of same-kind factors in the given order.
pub fn tensor_product(factors: &[TensorFactor<'_>]) -> Result<TensorProduct, TensorError> {
    match factors.first() {
        None => Err(TensorError::EmptyProduct),
        Some(TensorFactor::State(_)) => {
            let states = factors
                .iter()
                .map(|f| match f {
                    TensorFactor::State(s) => Ok(*s),
                    TensorFactor::Operator(_) => Err(TensorError::MixedKinds),
                })
                .collect::<Result<Vec<_>, _>>()?;
            kron_states(&states).map(TensorProduct::State)
        }
        Some(TensorFactor::Operator(_)) => {
            let ops = factors
                .iter()
                .map(|f| match f {
                    TensorFactor::Operator(o) => Ok(*o),
                    TensorFactor::State(_) => Err(TensorError::MixedKinds),
                })
                .collect::<Result<Vec<_>, _>>()?;
            kron_operators(&ops).map(TensorProduct::Operator)
        }
    }
}

fn concat_layouts<'a>(
    layouts: impl Iterator<Item = &'a SpaceLayout>,
) -> Result<SpaceLayout, TensorError> {
    let mut factors = Vec::new();
    for l in layouts {
        factors.extend(l.factors().iter().cloned());
    }
    SpaceLayout::from_factors(factors)
}

pub fn kron_states(states: &[&StateVector]) -> Result<StateVector, TensorError> {
    if states.is_empty() {
        return Err(TensorError::EmptyProduct);
    }
    let layout = concat_layouts(states.iter().map(|s| s.layout()))?;
    let mut amps = vec![C64::new(1.0, 0.0)];
    for s in states {
        let mut next = Vec::with_capacity(amps.len() * s.dim());
        for a in &amps {
            for b in s.amplitudes() {
                next.push(a * b);
            }
        }
        amps = next;
    }
    StateVector::new(layout, amps)
}

pub fn kron_operators(ops: &[&OperatorMatrix]) -> Result<OperatorMatrix, TensorError> {
    if ops.is_empty() {
        return Err(TensorError::EmptyProduct);
    }
    let layout = concat_layouts(ops.iter().map(|o| o.layout()))?;
    if layout.total_dim() > super::MAX_DENSE_DIM {
        return Err(TensorError::Capacity {
            dim: layout.total_dim(),
            cap: super::MAX_DENSE_DIM,
        });
    }
    let mut data = vec![C64::new(1.0, 0.0)];
    let mut n = 1usize;
    for op in ops {
        let d = op.dim();
        let m = n * d;
        let mut next = vec![C64::new(0.0, 0.0); m * m];
        for i in 0..n {
            for j in 0..n {
                let a = data[i * n + j];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for k in 0..d {
                    let row = (i * d + k) * m + j * d;
                    for l in 0..d {
                        next[row + l] = a * op.get(k, l);
                    }
                }
            }
        }
        data = next;
        n = m;
    }
    let first = ops[0].kind();
    let kind = if first != OperatorKind::General && ops.iter().all(|o| o.kind() == first) {
        first
    } else {
        OperatorKind::General
    };
    Ok(OperatorMatrix::from_vec(layout, data)?.with_kind(kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn layout(label: &str, d: usize) -> SpaceLayout {
        SpaceLayout::single(label, d).unwrap()
    }

    /// Brute-force Kronecker oracle over all index pairs.
    fn kron_oracle(a: &[Vec<C64>], b: &[Vec<C64>]) -> Vec<Vec<C64>> {
        let (n, m) = (a.len(), b.len());
        let mut out = vec![vec![C64::new(0.0, 0.0); n * m]; n * m];
        for i in 0..n {
            for j in 0..n {
                for k in 0..m {
                    for l in 0..m {
                        out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                    }
                }
            }
        }
        out
    }

    fn rows(op: &OperatorMatrix) -> Vec<Vec<C64>> {
        (0..op.dim()).map(|i| op.row(i).to_vec()).collect()
    }

    #[test]
    fn identity_kron_identity() {
        let a = OperatorMatrix::identity(layout("A", 2)).unwrap();
        let b = OperatorMatrix::identity(layout("B", 2)).unwrap();
        let p = kron_operators(&[&a, &b]).unwrap();
        let id4 = OperatorMatrix::identity(p.layout().clone()).unwrap();
        assert_eq!(p, id4);
    }

    #[test]
    fn pointer_times_superposition() {
        // |A_0⟩ ⊗ (0.6|Q_1⟩ + 0.8|Q_2⟩), A outer
        let a0 = StateVector::basis(layout("A", 2), 0).unwrap();
        let q = StateVector::from_real(layout("Q", 2), &[0.6, 0.8]).unwrap();
        let s = kron_states(&[&a0, &q]).unwrap();
        // oracle: enumerate (a, q) pairs with index a*2 + q
        let mut expected = vec![C64::new(0.0, 0.0); 4];
        for a in 0..2 {
            for k in 0..2 {
                expected[a * 2 + k] = a0.amplitudes()[a] * q.amplitudes()[k];
            }
        }
        assert_eq!(s.amplitudes(), expected.as_slice());
        assert_eq!(
            s.amplitudes(),
            &[0.6, 0.8, 0.0, 0.0].map(|x| C64::new(x, 0.0))
        );
    }

    #[test]
    fn sign_diagonals() {
        let z = OperatorMatrix::from_real_rows(layout("A", 2), &[&[1.0, 0.0], &[0.0, -1.0]])
            .unwrap();
        let z2 = z.relabel(layout("B", 2)).unwrap();
        let p = kron_operators(&[&z, &z2]).unwrap();
        assert_eq!(rows(&p), kron_oracle(&rows(&z), &rows(&z2)));
        let d = p.diagonal_entries().unwrap();
        assert_eq!(d, [1.0, -1.0, -1.0, 1.0].map(|x| C64::new(x, 0.0)));
    }

    #[test]
    fn rejects_mixed_kinds_and_duplicates() {
        let s = StateVector::basis(layout("A", 2), 0).unwrap();
        let o = OperatorMatrix::identity(layout("B", 2)).unwrap();
        assert_eq!(
            tensor_product(&[TensorFactor::State(&s), TensorFactor::Operator(&o)]),
            Err(TensorError::MixedKinds)
        );
        assert_eq!(
            tensor_product(&[TensorFactor::State(&s), TensorFactor::State(&s)]),
            Err(TensorError::DuplicateLabel("A".into()))
        );
        assert_eq!(tensor_product(&[]), Err(TensorError::EmptyProduct));
    }

    fn mat(label: &'static str, d: usize) -> impl Strategy<Value = OperatorMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d).prop_map(move |v| {
            OperatorMatrix::from_vec(
                layout(label, d),
                v.into_iter().map(|(r, i)| C64::new(r, i)).collect(),
            )
            .unwrap()
        })
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in mat("a", 2), b in mat("b", 3), c in mat("c", 2)) {
            let bc = kron_operators(&[&b, &c]).unwrap();
            let ab = kron_operators(&[&a, &b]).unwrap();
            let left = kron_operators(&[&a, &bc]).unwrap();
            let right = kron_operators(&[&ab, &c]).unwrap();
            prop_assert!(left.max_abs_diff(&right) <= 1e-14);
            let flat = kron_operators(&[&a, &b, &c]).unwrap();
            prop_assert!(flat.max_abs_diff(&left) <= 1e-14);
        }

        #[test]
        fn kron_matches_oracle(a in mat("a", 3), b in mat("b", 2)) {
            let p = kron_operators(&[&a, &b]).unwrap();
            prop_assert_eq!(rows(&p), kron_oracle(&rows(&a), &rows(&b)));
        }
    }
}
