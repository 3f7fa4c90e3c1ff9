use crate::error::{Error, Result};
use crate::sparse::DenseBlock;

/// Smallest pivot magnitude accepted before a block is declared singular.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// Which side of the unknown the triangular factor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `op(T) X = B`
    Left,
    /// `X op(T) = B`
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triangle {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diagonal {
    Unit,
    NonUnit,
}

/// Cost model of an LU of an `n × n` block: `(2/3) n³`, rounded.
pub fn lu_flops(n: usize) -> u64 {
    let n = n as u64;
    (2 * n * n * n + 1) / 3
}

/// Cost model of a triangular solve with an `n × n` factor against `p`
/// right-hand sides: `n² p`, i.e. `n³` for a square operand.
pub fn trsm_flops(n: usize, p: usize) -> u64 {
    (n * n * p) as u64
}

/// `2 m n p` for an `m × n` by `n × p` product.
pub fn gemm_flops(m: usize, n: usize, p: usize) -> u64 {
    2 * (m * n * p) as u64
}

/// In-place LU with partial row pivoting: `P B = L U`, unit-diagonal `L`
/// below the diagonal and `U` on and above it.
///
/// Returns LAPACK-style pivots: at step `k` row `k` was swapped with
/// row `pivots[k]`.
pub fn dense_lu_inplace(b: &mut DenseBlock, flops: &mut u64) -> Result<Vec<usize>> {
    dense_lu_threshold(b, 1.0, flops)
}

/// Threshold partial pivoting: the diagonal entry is kept whenever its
/// magnitude is at least `threshold` times the largest candidate in its
/// column; `threshold = 1` is ordinary partial pivoting.
pub fn dense_lu_threshold(b: &mut DenseBlock, threshold: f64, flops: &mut u64) -> Result<Vec<usize>> {
    if !b.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "LU needs a square block, got {}x{}",
            b.rows(),
            b.cols()
        )));
    }
    let n = b.rows();
    *flops += lu_flops(n);
    let mut pivots = Vec::with_capacity(n);
    for k in 0..n {
        let col = b.col(k);
        let (mut best, mut best_abs) = (k, col[k].abs());
        for (i, v) in col.iter().enumerate().skip(k + 1) {
            if v.abs() > best_abs {
                best = i;
                best_abs = v.abs();
            }
        }
        let diag_abs = col[k].abs();
        let piv = if diag_abs >= threshold * best_abs { k } else { best };
        let piv_abs = if piv == k { diag_abs } else { best_abs };
        if !(piv_abs >= PIVOT_FLOOR) {
            return Err(Error::SingularBlock {
                index: k,
                magnitude: piv_abs,
            });
        }
        pivots.push(piv);
        b.swap_rows(k, piv);

        let values = b.values_mut();
        let pivot = values[k * n + k];
        for i in k + 1..n {
            values[k * n + i] /= pivot;
        }
        for j in k + 1..n {
            let (left, right) = values.split_at_mut(j * n);
            let lk = &left[k * n + k + 1..k * n + n];
            let factor = right[k];
            if factor != 0.0 {
                for (c, &l) in right[k + 1..n].iter_mut().zip(lk) {
                    *c -= l * factor;
                }
            }
        }
    }
    Ok(pivots)
}

/// Applies LAPACK-style pivots to the rows of `x`.
pub fn apply_pivots(pivots: &[usize], x: &mut [f64]) {
    for (k, &p) in pivots.iter().enumerate() {
        x.swap(k, p);
    }
}

/// Applies LAPACK-style pivots to the rows of a block.
pub fn apply_pivots_rows(pivots: &[usize], b: &mut DenseBlock) {
    for (k, &p) in pivots.iter().enumerate() {
        b.swap_rows(k, p);
    }
}

/// Solves a triangular system in place, overwriting `b` with `X`.
///
/// `transpose` uses `Tᵀ` in place of `T`. The counter is charged
/// `n² p` where `T` is `n × n` and `p` is the other dimension of `B`.
pub fn trsm(
    t: &DenseBlock,
    b: &mut DenseBlock,
    side: Side,
    triangle: Triangle,
    transpose: bool,
    diag: Diagonal,
    flops: &mut u64,
) -> Result<()> {
    if !t.is_square() {
        return Err(Error::ShapeMismatch("triangular factor must be square".into()));
    }
    let n = t.rows();
    let p = match side {
        Side::Left if b.rows() == n => b.cols(),
        Side::Right if b.cols() == n => b.rows(),
        _ => {
            return Err(Error::ShapeMismatch(format!(
                "{n}x{n} triangle against {}x{} block",
                b.rows(),
                b.cols()
            )))
        }
    };
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
    *flops += trsm_flops(n, p);

    let transposed;
    let (t, triangle) = if transpose {
        transposed = t.transpose();
        let flipped = match triangle {
            Triangle::Lower => Triangle::Upper,
            Triangle::Upper => Triangle::Lower,
        };
        (&transposed, flipped)
    } else {
        (t, triangle)
    };
    let unit = diag == Diagonal::Unit;
    match side {
        Side::Left => {
            for j in 0..b.cols() {
                solve_left_column(t, b.col_mut(j), triangle, unit);
            }
        }
        Side::Right => solve_right(t, b, triangle, unit),
    }
    Ok(())
}

/// `T x = rhs` for one column, in place.
pub(crate) fn solve_left_column(t: &DenseBlock, x: &mut [f64], triangle: Triangle, unit: bool) {
    let n = t.rows();
    match triangle {
        Triangle::Lower => {
            for k in 0..n {
                if !unit {
                    x[k] /= t[(k, k)];
                }
                let xk = x[k];
                if xk != 0.0 {
                    for (xi, &tik) in x[k + 1..].iter_mut().zip(&t.col(k)[k + 1..]) {
                        *xi -= tik * xk;
                    }
                }
            }
        }
        Triangle::Upper => {
            for k in (0..n).rev() {
                if !unit {
                    x[k] /= t[(k, k)];
                }
                let xk = x[k];
                if xk != 0.0 {
                    for (xi, &tik) in x[..k].iter_mut().zip(&t.col(k)[..k]) {
                        *xi -= tik * xk;
                    }
                }
            }
        }
    }
}

/// `X T = B`, in place, column-oriented.
fn solve_right(t: &DenseBlock, b: &mut DenseBlock, triangle: Triangle, unit: bool) {
    let n = t.rows();
    let rows = b.rows();
    let values = b.values_mut();
    let order: Vec<usize> = match triangle {
        Triangle::Upper => (0..n).collect(),
        Triangle::Lower => (0..n).rev().collect(),
    };
    // Column j of X depends on the already-solved columns k with
    // T[k, j] != 0, k on the solved side of j.
    for &j in &order {
        let deps: Vec<usize> = match triangle {
            Triangle::Upper => (0..j).collect(),
            Triangle::Lower => (j + 1..n).collect(),
        };
        for k in deps {
            let tkj = t[(k, j)];
            if tkj == 0.0 {
                continue;
            }
            let (src, dst) = if k < j {
                let (a, b) = values.split_at_mut(j * rows);
                (&a[k * rows..(k + 1) * rows], &mut b[..rows])
            } else {
                let (a, b) = values.split_at_mut(k * rows);
                (&b[..rows], &mut a[j * rows..(j + 1) * rows])
            };
            for (d, &s) in dst.iter_mut().zip(src) {
                *d -= s * tkj;
            }
        }
        if !unit {
            let inv = 1.0 / t[(j, j)];
            for v in &mut values[j * rows..(j + 1) * rows] {
                *v *= inv;
            }
        }
    }
}

/// `C ← C + alpha A B`. The counter is charged `2 m n p` even for
/// `alpha = 0`.
pub fn gemm_update(c: &mut DenseBlock, a: &DenseBlock, b: &DenseBlock, alpha: f64, flops: &mut u64) -> Result<()> {
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
    *flops += gemm_flops(a.rows(), a.cols(), b.cols());
    if alpha == 0.0 {
        return Ok(());
    }
    gemm_kernel(c, a, b, alpha);
    Ok(())
}

pub(crate) fn gemm_kernel(c: &mut DenseBlock, a: &DenseBlock, b: &DenseBlock, alpha: f64) {
    let m = a.rows();
    for j in 0..b.cols() {
        let bj = b.col(j);
        let cj = c.col_mut(j);
        for (l, &blj) in bj.iter().enumerate() {
            let s = alpha * blj;
            if s == 0.0 {
                continue;
            }
            let al = &a.values()[l * m..(l + 1) * m];
            for (ci, &ai) in cj.iter_mut().zip(al) {
                *ci += s * ai;
            }
        }
    }
}

/// `A B` without accounting.
pub(crate) fn matmul(a: &DenseBlock, b: &DenseBlock) -> DenseBlock {
    let mut c = DenseBlock::zeros(a.rows(), b.cols());
    gemm_kernel(&mut c, a, b, 1.0);
    c
}

/// `Aᵀ B` without accounting.
pub(crate) fn matmul_tn(a: &DenseBlock, b: &DenseBlock) -> DenseBlock {
    debug_assert_eq!(a.rows(), b.rows());
    DenseBlock::from_fn(a.cols(), b.cols(), |i, j| {
        a.col(i).iter().zip(b.col(j)).map(|(x, y)| x * y).sum()
    })
}

/// `A Bᵀ` without accounting.
pub(crate) fn matmul_nt(a: &DenseBlock, b: &DenseBlock) -> DenseBlock {
    debug_assert_eq!(a.cols(), b.cols());
    let (m, p) = (a.rows(), b.rows());
    let mut c = DenseBlock::zeros(m, p);
    for l in 0..a.cols() {
        let al = a.col(l);
        let bl = b.col(l);
        for (j, &bjl) in bl.iter().enumerate() {
            if bjl == 0.0 {
                continue;
            }
            for (ci, &ai) in c.col_mut(j).iter_mut().zip(al) {
                *ci += ai * bjl;
            }
        }
    }
    c
}
