use super::{BlrFactors, PanelBlock};
use crate::error::{Error, Result};
use crate::kernels::{apply_pivots, solve_left_column, FlopCounter, Triangle};

impl BlrFactors {
    /// Solves `A x = b` with the stored factors.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut flops = FlopCounter::default();
        self.solve_counted(b, &mut flops)
    }

    /// As [`BlrFactors::solve`], charging `flops.solve_flops`.
    pub fn solve_counted(&self, b: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>> {
        let n = self.n();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut y = self.perm.apply(b);
        let mut count = 0u64;

        for (s, f) in self.supernodes.iter().enumerate() {
            let cols = self.partition.cols(s);
            let rows = self.partition.rows(s);
            let w = cols.len();
            let seg = &mut y[cols.clone()];
            apply_pivots(&f.pivots, seg);
            solve_left_column(&f.diag, seg, Triangle::Lower, true);
            count += (w * w) as u64;
            let seg = seg.to_vec();
            for t in &f.lower {
                let m = t.block.rows();
                let mut acc = vec![0.0; m];
                count += tile_matvec(&t.block, &seg, &mut acc);
                for (a, v) in acc.iter().enumerate() {
                    y[rows[t.offset + a]] -= v;
                }
            }
        }

        for (s, f) in self.supernodes.iter().enumerate().rev() {
            let cols = self.partition.cols(s);
            let rows = self.partition.rows(s);
            let w = cols.len();
            let mut acc = vec![0.0; w];
            for t in &f.upper {
                let x: Vec<f64> = rows[t.offset..t.offset + t.block.cols()].iter().map(|&r| y[r]).collect();
                count += tile_matvec(&t.block, &x, &mut acc);
            }
            let seg = &mut y[cols];
            for (v, a) in seg.iter_mut().zip(&acc) {
                *v -= a;
            }
            solve_left_column(&f.diag, seg, Triangle::Upper, false);
            count += (w * w) as u64;
        }

        flops.solve_flops += count;
        let x = self.perm.apply_inverse(&y);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite value in solution".into()));
        }
        Ok(x)
    }
}

/// `acc += B x`; returns model flops.
fn tile_matvec(block: &PanelBlock, x: &[f64], acc: &mut [f64]) -> u64 {
    match block {
        PanelBlock::Dense(d) => {
            for (j, &xj) in x.iter().enumerate() {
                if xj != 0.0 {
                    for (a, &v) in acc.iter_mut().zip(d.col(j)) {
                        *a += v * xj;
                    }
                }
            }
            2 * d.len() as u64
        }
        PanelBlock::LowRank(l) => l.matvec_acc(x, acc, 1.0),
    }
}
