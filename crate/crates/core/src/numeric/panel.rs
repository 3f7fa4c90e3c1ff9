use std::borrow::Cow;
use std::ops::Range;

use crate::kernels::{panel_gemm_update, LowRankBlock, Operand};
use crate::sparse::DenseBlock;

/// An off-diagonal factor block kept dense or as `U Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub enum PanelBlock {
    Dense(DenseBlock),
    LowRank(LowRankBlock),
}

impl PanelBlock {
    pub fn rows(&self) -> usize {
        match self {
            PanelBlock::Dense(d) => d.rows(),
            PanelBlock::LowRank(l) => l.rows(),
        }
    }

    pub fn cols(&self) -> usize {
        match self {
            PanelBlock::Dense(d) => d.cols(),
            PanelBlock::LowRank(l) => l.cols(),
        }
    }

    pub fn stored_entries(&self) -> usize {
        match self {
            PanelBlock::Dense(d) => d.len(),
            PanelBlock::LowRank(l) => l.stored_entries(),
        }
    }

    pub fn is_low_rank(&self) -> bool {
        matches!(self, PanelBlock::LowRank(_))
    }

    pub fn operand(&self) -> Operand<'_> {
        match self {
            PanelBlock::Dense(d) => Operand::Dense(d),
            PanelBlock::LowRank(l) => Operand::LowRank(l),
        }
    }

    pub fn to_dense(&self) -> DenseBlock {
        match self {
            PanelBlock::Dense(d) => d.clone(),
            PanelBlock::LowRank(l) => crate::kernels::matmul_nt(l.u(), l.v()),
        }
    }

    /// Rows `range` of the block, sharing storage when the range is whole.
    fn restrict_rows(&self, range: Range<usize>) -> Cow<'_, PanelBlock> {
        if range.start == 0 && range.end == self.rows() {
            return Cow::Borrowed(self);
        }
        Cow::Owned(match self {
            PanelBlock::Dense(d) => PanelBlock::Dense(d.submatrix(range.start, range.end, 0, d.cols())),
            PanelBlock::LowRank(l) => PanelBlock::LowRank(
                LowRankBlock::new(
                    l.u().submatrix(range.start, range.end, 0, l.rank()),
                    l.v().clone(),
                    l.epsilon(),
                    l.norm_scale(),
                )
                .expect("restriction keeps the rank"),
            ),
        })
    }

    /// Columns `range` of the block.
    fn restrict_cols(&self, range: Range<usize>) -> Cow<'_, PanelBlock> {
        if range.start == 0 && range.end == self.cols() {
            return Cow::Borrowed(self);
        }
        Cow::Owned(match self {
            PanelBlock::Dense(d) => PanelBlock::Dense(d.submatrix(0, d.rows(), range.start, range.end)),
            PanelBlock::LowRank(l) => PanelBlock::LowRank(
                LowRankBlock::new(
                    l.u().clone(),
                    l.v().submatrix(range.start, range.end, 0, l.rank()),
                    l.epsilon(),
                    l.norm_scale(),
                )
                .expect("restriction keeps the rank"),
            ),
        })
    }
}

/// A piece of a supernode's off-diagonal panel covering positions
/// `offset .. offset + len` of the supernode's row structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile {
    pub offset: usize,
    pub block: PanelBlock,
}

impl Tile {
    fn range(&self, len: usize) -> Range<usize> {
        self.offset..self.offset + len
    }
}

fn intersect(a: Range<usize>, b: &Range<usize>) -> Option<Range<usize>> {
    let r = a.start.max(b.start)..a.end.min(b.end);
    (r.start < r.end).then_some(r)
}

/// `−L[rows, :] · U[:, cols]` assembled tile pair by tile pair. `lower` tiles
/// are `len × w` row ranges, `upper` tiles are `w × len` column ranges.
pub(crate) fn panel_product(
    lower: &[Tile],
    upper: &[Tile],
    rows: Range<usize>,
    cols: Range<usize>,
    flops: &mut u64,
) -> DenseBlock {
    let mut out = DenseBlock::zeros(rows.len(), cols.len());
    for lt in lower {
        let Some(rr) = intersect(lt.range(lt.block.rows()), &rows) else {
            continue;
        };
        let lop = lt.block.restrict_rows(rr.start - lt.offset..rr.end - lt.offset);
        for ut in upper {
            let Some(cc) = intersect(ut.range(ut.block.cols()), &cols) else {
                continue;
            };
            let uop = ut.block.restrict_cols(cc.start - ut.offset..cc.end - ut.offset);
            let mut sub = DenseBlock::zeros(rr.len(), cc.len());
            panel_gemm_update(&mut sub, lop.operand(), uop.operand(), -1.0, flops)
                .expect("tile shapes agree by construction");
            let (r0, c0) = (rr.start - rows.start, cc.start - cols.start);
            for j in 0..cc.len() {
                let dst = &mut out.col_mut(c0 + j)[r0..r0 + rr.len()];
                for (d, s) in dst.iter_mut().zip(sub.col(j)) {
                    *d += s;
                }
            }
        }
    }
    out
}
