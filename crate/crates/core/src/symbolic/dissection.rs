use super::{expand_ordering, Permutation};

/// Nested dissection of the structured `n_flux × n_tht` node grid used by the
/// problem generator, periodic in the `tht` direction.
///
/// Nodes are numbered `i_flux * n_tht + i_tht`. The periodic ring is first cut
/// open along `i_tht = 0`; the resulting rectangle is bisected recursively
/// across its longer side with single-line separators, which suffice for a
/// 9-point stencil. Separators are ordered after both halves. The node order
/// is then expanded to `dofs_per_node` consecutive dofs per node.
pub fn grid_nested_dissection(n_flux: usize, n_tht: usize, dofs_per_node: usize) -> Permutation {
    let mut order = Vec::with_capacity(n_flux * n_tht);
    let node = |i: usize, j: usize| i * n_tht + j;

    if n_tht >= 3 {
        dissect(&mut order, n_tht, 0, n_flux, 1, n_tht);
        order.extend((0..n_flux).map(|i| node(i, 0)));
    } else {
        dissect(&mut order, n_tht, 0, n_flux, 0, n_tht);
    }

    let nodes = Permutation::from_vec(order).expect("dissection covers every node once");
    expand_ordering(&nodes, dofs_per_node.max(1))
}

fn dissect(order: &mut Vec<usize>, n_tht: usize, i0: usize, i1: usize, j0: usize, j1: usize) {
    let (h, w) = (i1 - i0, j1 - j0);
    if h == 0 || w == 0 {
        return;
    }
    if h.max(w) <= 2 {
        for i in i0..i1 {
            for j in j0..j1 {
                order.push(i * n_tht + j);
            }
        }
        return;
    }
    if w >= h {
        let jm = j0 + w / 2;
        dissect(order, n_tht, i0, i1, j0, jm);
        dissect(order, n_tht, i0, i1, jm + 1, j1);
        order.extend((i0..i1).map(|i| i * n_tht + jm));
    } else {
        let im = i0 + h / 2;
        dissect(order, n_tht, i0, im, j0, j1);
        dissect(order, n_tht, im + 1, i1, j0, j1);
        order.extend((j0..j1).map(|j| im * n_tht + j));
    }
}
