use crate::error::{Error, Result};

/// A bijection on `[0, n)`.
///
/// `perm[new] = old` and `inv_perm[old] = new`, so the permuted matrix is
/// `B[k, l] = A[perm[k], perm[l]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            inv_perm: (0..n).collect(),
        }
    }

    /// Validates that `perm` is a bijection and builds its inverse.
    pub fn from_vec(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut inv_perm = vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n || inv_perm[old] != usize::MAX {
                return Err(Error::InvalidMatrix(format!(
                    "not a permutation: index {old} at position {new}"
                )));
            }
            inv_perm[old] = new;
        }
        Ok(Self { perm, inv_perm })
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// New position to old index.
    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Old index to new position.
    pub fn inv_perm(&self) -> &[usize] {
        &self.inv_perm
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }

    /// `out[new] = x[perm[new]]`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.perm.iter().map(|&old| x[old]).collect()
    }

    /// Inverse of [`Permutation::apply`].
    pub fn apply_inverse(&self, y: &[f64]) -> Vec<f64> {
        self.inv_perm.iter().map(|&new| y[new]).collect()
    }
}
