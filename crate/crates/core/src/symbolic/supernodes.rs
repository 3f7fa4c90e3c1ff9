use std::ops::Range;

use super::{EliminationTree, FillPattern};

/// Contiguous column ranges factorised as dense panels, with the off-diagonal
/// row structure of each range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupernodePartition {
    boundaries: Vec<usize>,
    rows: Vec<Vec<usize>>,
}

impl SupernodePartition {
    /// Partition without row structure; call [`SupernodePartition::with_structure`]
    /// before numeric factorisation.
    pub fn from_boundaries(boundaries: Vec<usize>) -> Self {
        debug_assert!(boundaries.first() == Some(&0));
        debug_assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
        let count = boundaries.len().saturating_sub(1);
        Self {
            boundaries,
            rows: vec![Vec::new(); count],
        }
    }

    /// Row structure of each supernode: union of the `L` patterns of its
    /// columns, restricted to rows after its last column.
    pub fn with_structure(mut self, fill: &FillPattern) -> Self {
        let mut mark = vec![usize::MAX; fill.n()];
        for s in 0..self.len() {
            let cols = self.cols(s);
            let mut rows = Vec::new();
            for j in cols.clone() {
                for &r in fill.col(j) {
                    if r >= cols.end && mark[r] != s {
                        mark[r] = s;
                        rows.push(r);
                    }
                }
            }
            rows.sort_unstable();
            self.rows[s] = rows;
        }
        self
    }

    /// Splits every supernode wider than `max_width` into near-equal chunks.
    /// Each chunk's rows are the remaining columns of its supernode followed
    /// by the supernode's off-diagonal rows.
    pub fn split(&self, max_width: usize) -> Self {
        let max_width = max_width.max(1);
        let mut boundaries = vec![0];
        let mut rows = Vec::new();
        for s in 0..self.len() {
            let cols = self.cols(s);
            let width = cols.len();
            let pieces = width.div_ceil(max_width);
            let mut start = cols.start;
            for k in 0..pieces {
                let end = cols.start + width * (k + 1) / pieces;
                let mut r: Vec<usize> = (end..cols.end).collect();
                r.extend_from_slice(&self.rows[s]);
                rows.push(r);
                boundaries.push(end);
                start = end;
            }
            debug_assert_eq!(start, cols.end);
        }
        Self { boundaries, rows }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn cols(&self, s: usize) -> Range<usize> {
        self.boundaries[s]..self.boundaries[s + 1]
    }

    pub fn rows(&self, s: usize) -> &[usize] {
        &self.rows[s]
    }

    pub fn width(&self, s: usize) -> usize {
        self.boundaries[s + 1] - self.boundaries[s]
    }

    /// Supernode owning each column.
    pub fn column_owner(&self) -> Vec<usize> {
        let n = *self.boundaries.last().unwrap_or(&0);
        let mut owner = vec![0; n];
        for s in 0..self.len() {
            owner[self.cols(s)].fill(s);
        }
        owner
    }

    /// Supernode tree: parent of `s` is the owner of its first off-diagonal row.
    pub fn parents(&self) -> Vec<Option<usize>> {
        let owner = self.column_owner();
        (0..self.len())
            .map(|s| self.rows[s].first().map(|&r| owner[r]))
            .collect()
    }

    /// Entries of `L` stored by the dense supernodal layout, diagonal included.
    pub fn stored_lower_entries(&self) -> usize {
        (0..self.len())
            .map(|s| {
                let w = self.width(s);
                w * (w + 1) / 2 + w * self.rows[s].len()
            })
            .sum()
    }
}

/// Merges chains `j → j+1` of the elimination tree into supernodes.
///
/// A column is appended while it is the parent of the previous one and the
/// merge introduces at most `relax` explicit zeros into the dense layout.
/// With matching column counts a merge introduces none.
pub fn detect_supernodes(etree: &EliminationTree, col_counts: &[usize], relax: usize) -> SupernodePartition {
    let n = etree.len();
    let mut boundaries = vec![0];
    if n == 0 {
        return SupernodePartition::from_boundaries(boundaries);
    }
    let mut start = 0;
    for e in 0..n - 1 {
        let chained = etree.parent[e] == Some(e + 1);
        let width = e - start + 1;
        // Zeros added by growing [start, e] to [start, e+1].
        let added = width * (col_counts[e + 1] + 1 - col_counts[e].min(col_counts[e + 1] + 1));
        if !(chained && added <= relax) {
            boundaries.push(e + 1);
            start = e + 1;
        }
    }
    boundaries.push(n);
    SupernodePartition::from_boundaries(boundaries)
}
