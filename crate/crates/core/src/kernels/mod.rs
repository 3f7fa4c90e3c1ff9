//! Dense panel kernels, low-rank compression and flop accounting.
//!
//! Flop counts follow a fixed cost model rather than hardware counters:
//! `2 m n p` for a product, `n² p` for a triangular solve, `(2/3) n³` for an
//! LU, plus the low-rank variants documented on each kernel.

mod dense;
mod lowrank;

pub use dense::{
    apply_pivots, apply_pivots_rows, dense_lu_inplace, dense_lu_threshold, gemm_flops, gemm_update,
    lu_flops, trsm, trsm_flops, Diagonal, Side, Triangle, PIVOT_FLOOR,
};
pub use lowrank::{
    compress, decompress, lossless_cutoff, lr_gemm_update, lr_trsm, lr_trsm_flops, panel_gemm_update,
    singular_values, svd_flops, Compression, LowRankBlock, Operand, TruncationMode,
};

pub(crate) use dense::{matmul_nt, solve_left_column};
#[cfg(test)]
pub(crate) use dense::matmul;

use serde::{Deserialize, Serialize};

/// Model flop counts per phase. Each worker owns one; merge at joins.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopCounter {
    pub factorisation_flops: u64,
    pub solve_flops: u64,
    pub compression_flops: u64,
}

impl FlopCounter {
    pub fn merge(&mut self, other: &FlopCounter) {
        self.factorisation_flops += other.factorisation_flops;
        self.solve_flops += other.solve_flops;
        self.compression_flops += other.compression_flops;
    }

    pub fn total(&self) -> u64 {
        self.factorisation_flops + self.solve_flops + self.compression_flops
    }
}
