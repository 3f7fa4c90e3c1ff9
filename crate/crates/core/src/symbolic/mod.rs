//! Analysis phase: ordering, elimination tree, fill and supernodes.
//!
//! The pattern of `A + Aᵀ` is used throughout, so the analysis is valid for
//! structurally nonsymmetric input at the cost of some extra stored zeros.

mod amd;
mod dissection;
mod etree;
mod grouping;
mod permutation;
mod supernodes;

pub use amd::{amd_order, minimum_degree};
pub use dissection::grid_nested_dissection;
pub use etree::{build_etree, symbolic_fill, EliminationTree, FillPattern};
pub use grouping::{contract_ordering, expand_ordering, group_dofs};
pub use permutation::Permutation;
pub use supernodes::{detect_supernodes, SupernodePartition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrixCsc;

/// Fill-reducing ordering strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OrderingKind {
    Natural,
    /// Minimum degree on the node quotient graph, expanded to dofs.
    Amd,
    /// Structured nested dissection; needs the grid shape.
    GridNd { n_flux: usize, n_tht: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisOptions {
    pub ordering: OrderingKind,
    /// Consecutive dofs forming one graph node.
    pub dofs_per_node: usize,
    /// Extra zeros allowed per supernode merge.
    pub relax: usize,
    /// Supernodes wider than this are split into column blocks.
    pub max_width: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            ordering: OrderingKind::Amd,
            dofs_per_node: 1,
            relax: 8,
            max_width: 64,
        }
    }
}

/// Everything the numeric phase needs from the analysis.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub perm: Permutation,
    pub etree: EliminationTree,
    pub fill: FillPattern,
    pub partition: SupernodePartition,
}

impl Analysis {
    pub fn n(&self) -> usize {
        self.perm.len()
    }
}

pub fn compute_ordering(a: &SparseMatrixCsc, opts: &AnalysisOptions) -> Result<Permutation> {
    let d = opts.dofs_per_node.max(1);
    match &opts.ordering {
        OrderingKind::Natural => Ok(Permutation::identity(a.n())),
        OrderingKind::Amd => {
            let quotient = group_dofs(a, d)?;
            Ok(expand_ordering(&amd_order(&quotient), d))
        }
        OrderingKind::GridNd { n_flux, n_tht } => {
            if n_flux * n_tht * d != a.n() {
                return Err(Error::Config(format!(
                    "grid {n_flux}x{n_tht} with {d} dofs does not match dimension {}",
                    a.n()
                )));
            }
            Ok(grid_nested_dissection(*n_flux, *n_tht, d))
        }
    }
}

/// Runs the full analysis with an ordering chosen by `opts`.
pub fn analyse(a: &SparseMatrixCsc, opts: &AnalysisOptions) -> Result<Analysis> {
    let perm = compute_ordering(a, opts)?;
    analyse_with_permutation(a, perm, opts)
}

pub fn analyse_with_permutation(
    a: &SparseMatrixCsc,
    perm: Permutation,
    opts: &AnalysisOptions,
) -> Result<Analysis> {
    if perm.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: perm.len(),
        });
    }
    let etree = build_etree(a, &perm);
    let fill = symbolic_fill(a, &perm, &etree);
    let partition = detect_supernodes(&etree, &etree.col_counts, opts.relax)
        .with_structure(&fill)
        .split(opts.max_width);
    Ok(Analysis {
        perm,
        etree,
        fill,
        partition,
    })
}
