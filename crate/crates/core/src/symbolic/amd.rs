//! Approximate minimum degree ordering on the quotient graph.
//!
//! Eliminated variables become elements; a variable's degree is bounded by
//! its remaining variable neighbours plus the sizes of its adjacent elements
//! outside the current pivot element. Elements whose variables are all
//! covered by the new element are absorbed. Ties go to the lowest index.

use std::collections::BTreeSet;

use crate::sparse::SparseMatrixCsc;

use super::Permutation;

/// Fill-reducing ordering of the pattern of `A + Aᵀ`.
pub fn amd_order(a: &SparseMatrixCsc) -> Permutation {
    let order = minimum_degree(&a.symmetric_adjacency());
    Permutation::from_vec(order).expect("elimination visits every vertex once")
}

/// Elimination order for an undirected graph given as sorted adjacency lists
/// without self loops.
pub fn minimum_degree(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut alive = vec![true; n];
    let mut var_adj: Vec<Vec<usize>> = adj.to_vec();
    let mut elem_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut elem_vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut absorbed = vec![false; n];
    let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();

    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();
    let mut mark = vec![0usize; n];
    let mut ext = vec![0usize; n];
    let mut ext_stamp = vec![0usize; n];
    let mut order = Vec::with_capacity(n);

    for k in 0..n {
        let stamp = k + 1;
        let (_, p) = queue.pop_first().expect("queue holds every live variable");
        order.push(p);
        alive[p] = false;

        // Variables of the new element p.
        let mut lp = Vec::new();
        for &v in &var_adj[p] {
            if alive[v] && mark[v] != stamp {
                mark[v] = stamp;
                lp.push(v);
            }
        }
        for e in std::mem::take(&mut elem_adj[p]) {
            if absorbed[e] {
                continue;
            }
            for &v in &elem_vars[e] {
                if alive[v] && mark[v] != stamp {
                    mark[v] = stamp;
                    lp.push(v);
                }
            }
            absorbed[e] = true;
            elem_vars[e] = Vec::new();
        }
        var_adj[p] = Vec::new();

        // ext[e] = |L_e \ L_p| for elements touching L_p.
        for &i in &lp {
            for &e in &elem_adj[i] {
                if absorbed[e] {
                    continue;
                }
                if ext_stamp[e] != stamp {
                    ext_stamp[e] = stamp;
                    elem_vars[e].retain(|&v| alive[v]);
                    ext[e] = elem_vars[e].len();
                }
                ext[e] -= 1;
            }
        }

        let remaining = n - k - 1;
        let lp_ext = lp.len().saturating_sub(1);
        for &i in &lp {
            queue.remove(&(degree[i], i));
            elem_adj[i].retain(|&e| !absorbed[e]);
            let mut deg = lp_ext;
            for &e in &elem_adj[i] {
                if ext[e] == 0 {
                    absorbed[e] = true;
                    elem_vars[e] = Vec::new();
                } else {
                    deg += ext[e];
                }
            }
            elem_adj[i].retain(|&e| !absorbed[e]);
            elem_adj[i].push(p);
            var_adj[i].retain(|&v| alive[v] && mark[v] != stamp);
            deg += var_adj[i].len();
            let deg = deg.min(remaining).min(degree[i] + lp_ext);
            degree[i] = deg;
            queue.insert((deg, i));
        }
        elem_vars[p] = lp;
    }
    order
}
