use crate::sparse::SparseMatrixCsc;

use super::Permutation;

/// Elimination forest of the Cholesky pattern of `P (A + Aᵀ) Pᵀ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationTree {
    /// `parent[j] > j`, or `None` for a root.
    pub parent: Vec<Option<usize>>,
    /// Children before parents; siblings in increasing index order.
    pub postorder: Vec<usize>,
    /// Stored entries of each column of `L`, diagonal included.
    pub col_counts: Vec<usize>,
}

impl EliminationTree {
    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn nnz_l(&self) -> usize {
        self.col_counts.iter().sum()
    }

    pub fn children(&self) -> Vec<Vec<usize>> {
        let mut children = vec![Vec::new(); self.len()];
        for (j, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                children[p].push(j);
            }
        }
        children
    }
}

/// Strictly-lower neighbours of every column of the permuted symmetric
/// pattern, in permuted indices and sorted.
pub(crate) fn permuted_lower_adjacency(a: &SparseMatrixCsc, p: &Permutation) -> Vec<Vec<usize>> {
    let adj = a.symmetric_adjacency();
    let inv = p.inv_perm();
    let mut lower = vec![Vec::new(); a.n()];
    for (old, list) in adj.iter().enumerate() {
        let k = inv[old];
        lower[k] = list.iter().map(|&o| inv[o]).filter(|&i| i < k).collect();
        lower[k].sort_unstable();
    }
    lower
}

pub fn build_etree(a: &SparseMatrixCsc, p: &Permutation) -> EliminationTree {
    let n = a.n();
    let lower = permuted_lower_adjacency(a, p);

    let mut parent = vec![None; n];
    let mut ancestor: Vec<Option<usize>> = vec![None; n];
    for k in 0..n {
        for &i in &lower[k] {
            let mut r = i;
            loop {
                match ancestor[r] {
                    Some(anc) if anc == k => break,
                    Some(anc) => {
                        ancestor[r] = Some(k);
                        r = anc;
                    }
                    None => {
                        ancestor[r] = Some(k);
                        parent[r] = Some(k);
                        break;
                    }
                }
            }
        }
    }

    let col_counts = row_subtree_walk(&lower, &parent, |_, _| {});
    let postorder = postorder(&parent);
    EliminationTree {
        parent,
        postorder,
        col_counts,
    }
}

/// Walks the row subtree of every row `k` and reports each structural entry
/// `L[k, j]` with `j < k` through `visit(j, k)`. Returns exact column counts.
fn row_subtree_walk(
    lower: &[Vec<usize>],
    parent: &[Option<usize>],
    mut visit: impl FnMut(usize, usize),
) -> Vec<usize> {
    let n = lower.len();
    let mut counts = vec![1usize; n];
    let mut mark = vec![usize::MAX; n];
    for k in 0..n {
        mark[k] = k;
        for &i in &lower[k] {
            let mut j = i;
            while mark[j] != k {
                mark[j] = k;
                counts[j] += 1;
                visit(j, k);
                j = parent[j].expect("row subtree reaches its row");
            }
        }
    }
    counts
}

fn postorder(parent: &[Option<usize>]) -> Vec<usize> {
    let n = parent.len();
    let mut children = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (j, p) in parent.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(j),
            None => roots.push(j),
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut stack: Vec<(usize, usize)> = Vec::new();
    for &root in &roots {
        stack.push((root, 0));
        while let Some((node, next)) = stack.pop() {
            if next < children[node].len() {
                stack.push((node, next + 1));
                stack.push((children[node][next], 0));
            } else {
                order.push(node);
            }
        }
    }
    order
}

/// Structure of `L` (and, by symmetry of the analysed pattern, of `Uᵀ`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FillPattern {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
}

impl FillPattern {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted rows of column `j` of `L`, diagonal first.
    pub fn col(&self, j: usize) -> &[usize] {
        &self.row_idx[self.col_ptr[j]..self.col_ptr[j + 1]]
    }

    pub fn nnz_l(&self) -> usize {
        self.row_idx.len()
    }

    pub fn nnz_u(&self) -> usize {
        self.row_idx.len()
    }

    pub fn l_col_counts(&self) -> Vec<usize> {
        (0..self.n).map(|j| self.col_ptr[j + 1] - self.col_ptr[j]).collect()
    }

    /// Column counts of `U`, which equal the row counts of `L`.
    pub fn u_col_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for &r in &self.row_idx {
            counts[r] += 1;
        }
        counts
    }

    /// True if `L[i, j]` (for `i >= j`) or `U[j, i]` is structurally nonzero.
    pub fn contains(&self, i: usize, j: usize) -> bool {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        self.col(j).binary_search(&i).is_ok()
    }
}

/// Exact structure of `L + U` for elimination without pivoting.
pub fn symbolic_fill(a: &SparseMatrixCsc, p: &Permutation, etree: &EliminationTree) -> FillPattern {
    let n = a.n();
    let lower = permuted_lower_adjacency(a, p);
    let mut cols: Vec<Vec<usize>> = (0..n).map(|j| vec![j]).collect();
    row_subtree_walk(&lower, &etree.parent, |j, k| cols[j].push(k));

    let mut col_ptr = Vec::with_capacity(n + 1);
    col_ptr.push(0);
    let mut row_idx = Vec::with_capacity(cols.iter().map(Vec::len).sum());
    for c in cols {
        row_idx.extend(c);
        col_ptr.push(row_idx.len());
    }
    FillPattern { n, col_ptr, row_idx }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_boolean_elimination(a: &SparseMatrixCsc, p: &Permutation) -> Vec<Vec<bool>> {
        let n = a.n();
        let b = a.permute_symmetric(p.perm()).unwrap();
        let mut m = vec![vec![false; n]; n];
        for (i, j, _) in b.triplets() {
            m[i][j] = true;
            m[j][i] = true;
        }
        for k in 0..n {
            m[k][k] = true;
            for i in k + 1..n {
                if m[i][k] {
                    for j in k + 1..n {
                        if m[k][j] {
                            m[i][j] = true;
                        }
                    }
                }
            }
        }
        m
    }

    fn tridiagonal(n: usize) -> SparseMatrixCsc {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i + 1, i, -1.0));
                t.push((i, i + 1, -1.0));
            }
        }
        SparseMatrixCsc::from_triplets(n, &t).unwrap()
    }

    fn five_point(nx: usize) -> SparseMatrixCsc {
        let mut t = Vec::new();
        for i in 0..nx {
            for j in 0..nx {
                let k = i * nx + j;
                t.push((k, k, 4.0));
                if i + 1 < nx {
                    t.push((k, k + nx, -1.0));
                    t.push((k + nx, k, -1.0));
                }
                if j + 1 < nx {
                    t.push((k, k + 1, -1.0));
                    t.push((k + 1, k, -1.0));
                }
            }
        }
        SparseMatrixCsc::from_triplets(nx * nx, &t).unwrap()
    }

    #[test]
    fn diagonal_is_forest_of_roots() {
        let a = SparseMatrixCsc::from_diagonal(&[1.0; 5]);
        let et = build_etree(&a, &Permutation::identity(5));
        assert!(et.parent.iter().all(Option::is_none));
        assert_eq!(et.col_counts, vec![1; 5]);
    }

    #[test]
    fn tridiagonal_is_a_path() {
        let a = tridiagonal(5);
        let et = build_etree(&a, &Permutation::identity(5));
        for j in 0..4 {
            assert_eq!(et.parent[j], Some(j + 1));
        }
        assert_eq!(et.parent[4], None);
        assert_eq!(et.postorder, vec![0, 1, 2, 3, 4]);
        let fill = symbolic_fill(&a, &Permutation::identity(5), &et);
        assert_eq!(fill.nnz_l(), 9);
    }

    #[test]
    fn arrow_matrix_points_to_last() {
        let n = 6;
        let mut t: Vec<_> = (0..n).map(|i| (i, i, 10.0)).collect();
        for i in 0..n - 1 {
            t.push((n - 1, i, 1.0));
            t.push((i, n - 1, 1.0));
        }
        let a = SparseMatrixCsc::from_triplets(n, &t).unwrap();
        let p = Permutation::identity(n);
        let et = build_etree(&a, &p);
        let dense = dense_boolean_elimination(&a, &p);
        for j in 0..n - 1 {
            let first = (j + 1..n).find(|&i| dense[i][j]);
            assert_eq!(et.parent[j], first);
            assert_eq!(et.parent[j], Some(5));
        }
    }

    #[test]
    fn dense_has_full_lower_triangle() {
        let t: Vec<_> = (0..4).flat_map(|i| (0..4).map(move |j| (i, j, 1.0))).collect();
        let a = SparseMatrixCsc::from_triplets(4, &t).unwrap();
        let p = Permutation::identity(4);
        let et = build_etree(&a, &p);
        assert_eq!(symbolic_fill(&a, &p, &et).nnz_l(), 10);
    }

    #[test]
    fn grid_matches_boolean_elimination() {
        let a = five_point(6);
        let p = Permutation::identity(36);
        let et = build_etree(&a, &p);
        let fill = symbolic_fill(&a, &p, &et);
        let dense = dense_boolean_elimination(&a, &p);
        let mut count = 0;
        for j in 0..36 {
            for i in j..36 {
                assert_eq!(fill.contains(i, j), dense[i][j], "({i},{j})");
                count += dense[i][j] as usize;
            }
        }
        assert_eq!(fill.nnz_l(), count);
        assert_eq!(et.nnz_l(), count);
        assert_eq!(fill.l_col_counts(), et.col_counts);
    }

    #[test]
    fn postorder_visits_children_first() {
        let a = five_point(5);
        let p = crate::symbolic::amd_order(&a);
        let et = build_etree(&a, &p);
        let mut pos = vec![0; 25];
        for (k, &j) in et.postorder.iter().enumerate() {
            pos[j] = k;
        }
        for j in 0..25 {
            if let Some(par) = et.parent[j] {
                assert!(par > j);
                assert!(pos[par] > pos[j]);
            }
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::seq::SliceRandom;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn random_case(n: usize, seed: u64) -> (SparseMatrixCsc, Permutation) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
            for _ in 0..2 * n {
                t.push((rng.gen_range(0..n), rng.gen_range(0..n), 1.0));
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            (
                SparseMatrixCsc::from_triplets(n, &t).unwrap(),
                Permutation::from_vec(perm).unwrap(),
            )
        }

        proptest! {
            #[test]
            fn fill_matches_oracle(n in 1usize..40, seed in 0u64..500) {
                let (a, p) = random_case(n, seed);
                let et = build_etree(&a, &p);
                let fill = symbolic_fill(&a, &p, &et);
                let dense = dense_boolean_elimination(&a, &p);
                let b = a.permute_symmetric(p.perm()).unwrap();
                for (i, j, _) in b.triplets() {
                    prop_assert!(fill.contains(i, j));
                }
                for j in 0..n {
                    let first = (j + 1..n).find(|&i| dense[i][j]);
                    prop_assert_eq!(et.parent[j], first);
                    for i in j..n {
                        prop_assert_eq!(fill.contains(i, j), dense[i][j]);
                    }
                }
            }
        }
    }
}
