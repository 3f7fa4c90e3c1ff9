//! Low-rank block representation `B ≈ U Vᵀ` and its arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::DenseBlock;

use super::dense::{self, gemm_flops, solve_left_column, Diagonal, Side, Triangle, PIVOT_FLOOR};

/// How the truncation threshold is derived from `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationMode {
    /// Drop singular values at or below `epsilon · σ_max`.
    #[default]
    Relative,
    /// Drop singular values at or below `epsilon`.
    Absolute,
}

/// `U Vᵀ` with `U: m × k` and `V: n × k`.
///
/// `‖B − U Vᵀ‖₂ ≤ epsilon · norm_scale` for the block it was compressed
/// from, and `k (m + n) < m n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankBlock {
    u: DenseBlock,
    v: DenseBlock,
    epsilon: f64,
    norm_scale: f64,
}

impl LowRankBlock {
    /// Builds a block from factors. Fails if the shapes disagree.
    pub fn new(u: DenseBlock, v: DenseBlock, epsilon: f64, norm_scale: f64) -> Result<Self> {
        if u.cols() != v.cols() {
            return Err(Error::ShapeMismatch(format!(
                "U has rank {}, V has rank {}",
                u.cols(),
                v.cols()
            )));
        }
        Ok(Self {
            u,
            v,
            epsilon,
            norm_scale,
        })
    }

    pub fn rows(&self) -> usize {
        self.u.rows()
    }

    pub fn cols(&self) -> usize {
        self.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.u.cols()
    }

    pub fn u(&self) -> &DenseBlock {
        &self.u
    }

    pub fn v(&self) -> &DenseBlock {
        &self.v
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    /// Stored value entries, `k (m + n)`.
    pub fn stored_entries(&self) -> usize {
        self.rank() * (self.rows() + self.cols())
    }

    /// `y += alpha U (Vᵀ x)`; returns the flops of the two products.
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64], alpha: f64) -> u64 {
        let t = self.v.matvec_transpose(x);
        for (l, &tl) in t.iter().enumerate() {
            let s = alpha * tl;
            for (yi, &ui) in y.iter_mut().zip(self.u.col(l)) {
                *yi += s * ui;
            }
        }
        2 * (self.rank() * (self.rows() + self.cols())) as u64
    }

    /// `y += alpha (U Vᵀ)ᵀ x = alpha V (Uᵀ x)`.
    pub fn matvec_transpose_acc(&self, x: &[f64], y: &mut [f64], alpha: f64) -> u64 {
        let t = self.u.matvec_transpose(x);
        for (l, &tl) in t.iter().enumerate() {
            let s = alpha * tl;
            for (yi, &vi) in y.iter_mut().zip(self.v.col(l)) {
                *yi += s * vi;
            }
        }
        2 * (self.rank() * (self.rows() + self.cols())) as u64
    }
}

/// Outcome of offering a block to [`compress`].
#[derive(Debug, Clone, PartialEq)]
pub enum Compression {
    LowRank(LowRankBlock),
    /// `k (m + n) >= m n`: low-rank storage would not be smaller.
    KeepDense { rank: usize },
}

/// Cost model of a thin SVD of an `m × n` block with both singular vector
/// sets: `4 q p² + 22 p³` with `p = min(m, n)`, `q = max(m, n)`.
pub fn svd_flops(m: usize, n: usize) -> u64 {
    let (p, q) = (m.min(n) as u64, m.max(n) as u64);
    4 * q * p * p + 22 * p * p * p
}

/// Lossless cut-off: singular values at or below this fraction of `σ_max`
/// are numerically zero.
pub fn lossless_cutoff(m: usize, n: usize) -> f64 {
    f64::EPSILON * m.max(n) as f64
}

/// Singular values of a block, largest first.
pub fn singular_values(b: &DenseBlock) -> Vec<f64> {
    if b.is_empty() {
        return Vec::new();
    }
    let svd = nalgebra::SVD::new(b.to_nalgebra(), false, false);
    svd.singular_values.iter().copied().collect()
}

/// Rank-revealing truncation by SVD.
///
/// Keeps the singular values above the threshold (`epsilon · σ_max` in
/// relative mode, `epsilon` in absolute mode, never below the lossless
/// cut-off). `U` carries the singular values, `V` holds right singular
/// vectors. Returns [`Compression::KeepDense`] when `k (m + n) >= m n`.
pub fn compress(b: &DenseBlock, epsilon: f64, mode: TruncationMode, flops: &mut u64) -> Compression {
    let (m, n) = (b.rows(), b.cols());
    let empty = |scale| {
        Compression::LowRank(LowRankBlock {
            u: DenseBlock::zeros(m, 0),
            v: DenseBlock::zeros(n, 0),
            epsilon,
            norm_scale: scale,
        })
    };
    if b.is_empty() {
        return empty(0.0);
    }
    if b.max_abs() == 0.0 {
        return empty(if mode == TruncationMode::Absolute { 1.0 } else { 0.0 });
    }
    *flops += svd_flops(m, n);
    let svd = nalgebra::SVD::new(b.to_nalgebra(), true, true);
    let sigma = &svd.singular_values;
    let sigma_max = sigma[0];
    let floor = sigma_max * lossless_cutoff(m, n);
    let (threshold, norm_scale) = match mode {
        TruncationMode::Relative => ((epsilon * sigma_max).max(floor), sigma_max),
        TruncationMode::Absolute => (epsilon.max(floor), 1.0),
    };
    let rank = sigma.iter().take_while(|&&s| s > threshold).count();
    if rank * (m + n) >= m * n {
        return Compression::KeepDense { rank };
    }
    let u_full = svd.u.as_ref().expect("requested U");
    let vt_full = svd.v_t.as_ref().expect("requested Vᵀ");
    let u = DenseBlock::from_fn(m, rank, |i, l| u_full[(i, l)] * sigma[l]);
    let v = DenseBlock::from_fn(n, rank, |j, l| vt_full[(l, j)]);
    Compression::LowRank(LowRankBlock {
        u,
        v,
        epsilon,
        norm_scale,
    })
}

/// `U Vᵀ`; charged `2 m n k`.
pub fn decompress(block: &LowRankBlock, flops: &mut u64) -> DenseBlock {
    *flops += gemm_flops(block.rows(), block.rank(), block.cols());
    dense::matmul_nt(&block.u, &block.v)
}

/// A product operand that is either stored densely or as `U Vᵀ`.
#[derive(Debug, Clone, Copy)]
pub enum Operand<'a> {
    Dense(&'a DenseBlock),
    LowRank(&'a LowRankBlock),
}

impl Operand<'_> {
    pub fn rows(&self) -> usize {
        match self {
            Operand::Dense(d) => d.rows(),
            Operand::LowRank(l) => l.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            Operand::Dense(d) => d.cols(),
            Operand::LowRank(l) => l.cols(),
        }
    }
}

/// `C ← C + alpha (U Vᵀ) B`, evaluated inner-first.
///
/// With dense `B` (`n × p`) the two products `Vᵀ B` and `U (Vᵀ B)` are
/// charged `2 k n p + 2 m k p`. With low-rank `B = X Yᵀ` of rank `r` the
/// core `Vᵀ X`, the product `U (Vᵀ X)` and the expansion against `Yᵀ` are
/// charged `2 k n r + 2 m k r + 2 m r p`, which is `2 k n (n + 2k)` for square
/// operands of equal rank.
pub fn lr_gemm_update(
    c: &mut DenseBlock,
    a: &LowRankBlock,
    b: Operand<'_>,
    alpha: f64,
    flops: &mut u64,
) -> Result<()> {
    panel_gemm_update(c, Operand::LowRank(a), b, alpha, flops)
}

/// `C ← C + alpha A B` for any combination of dense and low-rank operands.
pub fn panel_gemm_update(
    c: &mut DenseBlock,
    a: Operand<'_>,
    b: Operand<'_>,
    alpha: f64,
    flops: &mut u64,
) -> Result<()> {
    if a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols() {
        return Err(Error::ShapeMismatch(format!(
            "C {}x{} += A {}x{} * B {}x{}",
            c.rows(),
            c.cols(),
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let (m, n, p) = (a.rows(), a.cols(), b.cols());
    match (a, b) {
        (Operand::Dense(a), Operand::Dense(b)) => dense::gemm_update(c, a, b, alpha, flops)?,
        (Operand::LowRank(a), Operand::Dense(b)) => {
            let k = a.rank();
            *flops += gemm_flops(k, n, p) + gemm_flops(m, k, p);
            if k > 0 {
                let t = dense::matmul_tn(&a.v, b);
                dense::gemm_kernel(c, &a.u, &t, alpha);
            }
        }
        (Operand::Dense(a), Operand::LowRank(b)) => {
            let r = b.rank();
            *flops += gemm_flops(m, n, r) + gemm_flops(m, r, p);
            if r > 0 {
                let t = dense::matmul(a, &b.u);
                let prod = dense::matmul_nt(&t, &b.v);
                add_scaled(c, &prod, alpha);
            }
        }
        (Operand::LowRank(a), Operand::LowRank(b)) => {
            let (k, r) = (a.rank(), b.rank());
            *flops += gemm_flops(k, n, r) + gemm_flops(m, k, r) + gemm_flops(m, r, p);
            if k > 0 && r > 0 {
                let core = dense::matmul_tn(&a.v, &b.u);
                let left = dense::matmul(&a.u, &core);
                let prod = dense::matmul_nt(&left, &b.v);
                add_scaled(c, &prod, alpha);
            }
        }
    }
    Ok(())
}

fn add_scaled(c: &mut DenseBlock, x: &DenseBlock, alpha: f64) {
    for (ci, xi) in c.values_mut().iter_mut().zip(x.values()) {
        *ci += alpha * xi;
    }
}

/// Cost model of a triangular solve with an `n × n` factor against a rank-`k`
/// block whose other dimension is `p`: `k n (n + 2p)`, i.e. `3 k n²` for a
/// square block.
pub fn lr_trsm_flops(n: usize, p: usize, k: usize) -> u64 {
    (k * n * (n + 2 * p)) as u64
}

/// Triangular solve against a low-rank block, touching only one factor.
///
/// `Side::Left` solves `op(T) X = U Vᵀ` as `X = (op(T)⁻¹ U) Vᵀ`;
/// `Side::Right` solves `X op(T) = U Vᵀ` as `X = U (op(T)⁻ᵀ V)ᵀ`.
pub fn lr_trsm(
    t: &DenseBlock,
    a: &LowRankBlock,
    side: Side,
    triangle: Triangle,
    transpose: bool,
    diag: Diagonal,
    flops: &mut u64,
) -> Result<LowRankBlock> {
    if !t.is_square() {
        return Err(Error::ShapeMismatch("triangular factor must be square".into()));
    }
    let n = t.rows();
    let (rows_ok, p) = match side {
        Side::Left => (a.rows() == n, a.cols()),
        Side::Right => (a.cols() == n, a.rows()),
    };
    if !rows_ok {
        return Err(Error::ShapeMismatch(format!(
            "{n}x{n} triangle against {}x{} low-rank block",
            a.rows(),
            a.cols()
        )));
    }
    if diag == Diagonal::NonUnit {
        for i in 0..n {
            if !(t[(i, i)].abs() >= PIVOT_FLOOR) {
                return Err(Error::SingularBlock {
                    index: i,
                    magnitude: t[(i, i)].abs(),
                });
            }
        }
    }
    *flops += lr_trsm_flops(n, p, a.rank());

    // Effective operator applied to the factor columns.
    let use_transpose = match side {
        Side::Left => transpose,
        Side::Right => !transpose,
    };
    let op = if use_transpose { t.transpose() } else { t.clone() };
    let tri = match (triangle, use_transpose) {
        (Triangle::Lower, false) | (Triangle::Upper, true) => Triangle::Lower,
        _ => Triangle::Upper,
    };
    let mut out = a.clone();
    let factor = match side {
        Side::Left => &mut out.u,
        Side::Right => &mut out.v,
    };
    for l in 0..factor.cols() {
        solve_left_column(&op, factor.col_mut(l), tri, diag == Diagonal::Unit);
    }
    Ok(out)
}
