use crate::error::{Error, Result};
use crate::sparse::SparseMatrixCsc;

use super::Permutation;

/// Quotient pattern over nodes of `d` consecutive dofs: node `(I, J)` is
/// stored whenever any entry of the `d × d` block `(I, J)` is stored. All
/// stored values are `1.0`.
pub fn group_dofs(a: &SparseMatrixCsc, d: usize) -> Result<SparseMatrixCsc> {
    if d == 0 || a.n() % d != 0 {
        return Err(Error::InvalidMatrix(format!(
            "dimension {} is not divisible into nodes of {d} dofs",
            a.n()
        )));
    }
    let t: Vec<_> = a.triplets().map(|(i, j, _)| (i / d, j / d, 0.0)).collect();
    let mut q = SparseMatrixCsc::from_triplets(a.n() / d, &t)?;
    let ones = vec![1.0; q.nnz()];
    q = SparseMatrixCsc::try_from_parts(q.n(), q.col_ptr().to_vec(), q.row_idx().to_vec(), ones)?;
    Ok(q)
}

/// Expands a node ordering to dofs: new node `k` occupies dof positions
/// `k*d .. (k+1)*d`, filled by the dofs of old node `p.perm()[k]` in order.
pub fn expand_ordering(p: &Permutation, d: usize) -> Permutation {
    let perm = p
        .perm()
        .iter()
        .flat_map(|&node| (0..d).map(move |c| node * d + c))
        .collect();
    Permutation::from_vec(perm).expect("expansion of a bijection is a bijection")
}

/// Node ordering recovered from a node-consecutive dof ordering.
pub fn contract_ordering(p: &Permutation, d: usize) -> Result<Permutation> {
    if d == 0 || p.len() % d != 0 {
        return Err(Error::InvalidMatrix(format!(
            "ordering of length {} is not divisible into nodes of {d} dofs",
            p.len()
        )));
    }
    let mut nodes = Vec::with_capacity(p.len() / d);
    for block in p.perm().chunks(d) {
        let node = block[0] / d;
        if block.iter().enumerate().any(|(c, &dof)| dof != node * d + c) {
            return Err(Error::InvalidMatrix("dofs of a node are not consecutive".into()));
        }
        nodes.push(node);
    }
    Permutation::from_vec(nodes)
}
