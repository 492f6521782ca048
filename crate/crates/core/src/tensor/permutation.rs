use super::{OperatorKind, OperatorMatrix, SpaceLayout, TensorError};

/// A bijection on the joint basis of a subset of factors, acting as the
/// identity elsewhere. Applied to digit tuples it never needs the dense
/// matrix, so it also works on layouts far above the dense cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalPermutation {
    positions: Vec<usize>,
    dims: Vec<usize>,
    map: Vec<usize>,
}

impl LocalPermutation {
    /// Builds a permutation from a partial injective map over the local
    /// digits of `positions`. Local states where `partial` returns `None`
    /// are sent, in ascending order, to the unused targets in ascending
    /// order.
    pub fn complete(
        layout: &SpaceLayout,
        positions: &[usize],
        partial: impl Fn(&[usize]) -> Option<Vec<usize>>,
    ) -> Result<Self, TensorError> {
        let dims: Vec<usize> = positions.iter().map(|&p| layout.factors()[p].dim).collect();
        let size: usize = dims.iter().product();
        let mut map = vec![usize::MAX; size];
        let mut used = vec![false; size];
        let mut digits = vec![0usize; dims.len()];
        for (src, slot) in map.iter_mut().enumerate() {
            decode(src, &dims, &mut digits);
            if let Some(target) = partial(&digits) {
                let t = encode(&target, &dims)?;
                if used[t] {
                    return Err(TensorError::NotInjective(format!(
                        "local state {digits:?} collides on target {target:?}"
                    )));
                }
                used[t] = true;
                *slot = t;
            }
        }
        let mut free = used.iter().enumerate().filter(|(_, u)| !**u).map(|(i, _)| i);
        for slot in map.iter_mut().filter(|s| **s == usize::MAX) {
            *slot = free.next().expect("equal counts of free sources and targets");
        }
        Ok(Self {
            positions: positions.to_vec(),
            dims,
            map,
        })
    }

    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Image of a local digit tuple.
    pub fn map_local(&self, local: &[usize]) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        let src = encode(local, &self.dims).expect("local digits in range");
        decode(self.map[src], &self.dims, &mut out);
        out
    }

    /// Applies the permutation in place to a full digit tuple.
    pub fn apply_digits(&self, digits: &mut [usize]) {
        let mut src = 0;
        for (&p, &d) in self.positions.iter().zip(&self.dims) {
            src = src * d + digits[p];
        }
        let mut t = self.map[src];
        for i in (0..self.dims.len()).rev() {
            digits[self.positions[i]] = t % self.dims[i];
            t /= self.dims[i];
        }
    }

    /// Image of every full basis index.
    pub fn full_map(&self, layout: &SpaceLayout) -> Vec<usize> {
        let mut digits = vec![0; layout.len()];
        (0..layout.total_dim())
            .map(|i| {
                layout.digits_into(i, &mut digits);
                self.apply_digits(&mut digits);
                layout.index(&digits).expect("digits stay in range")
            })
            .collect()
    }

    /// Dense permutation matrix on `layout`.
    pub fn to_operator(&self, layout: &SpaceLayout) -> Result<OperatorMatrix, TensorError> {
        if layout.total_dim() > super::MAX_DENSE_DIM {
            return Err(TensorError::Capacity {
                dim: layout.total_dim(),
                cap: super::MAX_DENSE_DIM,
            });
        }
        Ok(OperatorMatrix::permutation(layout.clone(), &self.full_map(layout))?
            .with_kind(OperatorKind::Unitary))
    }
}

fn decode(mut idx: usize, dims: &[usize], out: &mut [usize]) {
    for i in (0..dims.len()).rev() {
        out[i] = idx % dims[i];
        idx /= dims[i];
    }
}

fn encode(digits: &[usize], dims: &[usize]) -> Result<usize, TensorError> {
    let mut idx = 0;
    for (&d, &n) in digits.iter().zip(dims) {
        if d >= n {
            return Err(TensorError::DigitOutOfRange { digit: d, dim: n });
        }
        idx = idx * n + d;
    }
    Ok(idx)
}
