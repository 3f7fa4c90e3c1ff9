//! Factorisation and solve phases: supernodal LU over the elimination tree
//! with fan-in (left-looking) or fan-out (right-looking) update scheduling,
//! optional BLR compression of off-diagonal panels, and memory accounting.
//!
//! Every supernode owns a dense diagonal block holding `L\U`, an `L` panel
//! below it and a `U` panel to its right, both split into tiles along the
//! supernode's row structure. A tile is offered to compression once the
//! panel is fully updated and solved.
//!
//! Pivoting is confined to the diagonal block. Row swaps are not propagated
//! into the `L` panels of earlier supernodes; the forward solve applies each
//! supernode's pivots at the moment that supernode is reached, which matches
//! the order in which the Schur complement was formed.

mod memory;
mod panel;
mod solve;

pub use memory::{memory_report, MemoryLedger, MemoryReport, LOW_RANK_HEADER_BYTES};
pub use panel::{PanelBlock, Tile};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    apply_pivots_rows, compress, dense_lu_threshold, trsm, Compression, Diagonal, FlopCounter,
    Side, Triangle, TruncationMode,
};
use crate::sparse::{DenseBlock, SparseMatrixCsc};
use crate::symbolic::{Analysis, Permutation, SupernodePartition};

use panel::panel_product;

/// Order in which Schur-complement updates are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Left-looking: a supernode gathers all pending updates right before
    /// it is eliminated.
    #[default]
    FanIn,
    /// Right-looking: a supernode scatters its updates to every ancestor
    /// immediately after elimination.
    FanOut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FactorOptions {
    pub blr: bool,
    pub epsilon: f64,
    pub mode: TruncationMode,
    pub schedule: Schedule,
    /// Tiles with `min(rows, cols) < panel_min` are never compressed.
    pub panel_min: usize,
    /// Upper bound on tile height along the row structure.
    pub tile_size: usize,
    /// Threshold partial pivoting inside diagonal blocks; `0` disables pivoting.
    pub pivot_threshold: f64,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            blr: false,
            epsilon: 0.0,
            mode: TruncationMode::Relative,
            schedule: Schedule::FanIn,
            panel_min: 32,
            tile_size: 64,
            pivot_threshold: 0.1,
        }
    }
}

impl FactorOptions {
    pub fn dense() -> Self {
        Self::default()
    }

    pub fn with_blr(epsilon: f64) -> Self {
        Self {
            blr: true,
            epsilon,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.tile_size == 0 {
            return Err(Error::Config("tile_size must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.pivot_threshold) {
            return Err(Error::Config(format!(
                "pivot_threshold must lie in [0, 1], got {}",
                self.pivot_threshold
            )));
        }
        Ok(())
    }
}

/// Factors of one supernode.
#[derive(Debug, Clone, PartialEq)]
pub struct SupernodeFactor {
    pub diag: DenseBlock,
    pub pivots: Vec<usize>,
    /// `L` panel tiles, each `len × width`.
    pub lower: Vec<Tile>,
    /// `U` panel tiles, each `width × len`.
    pub upper: Vec<Tile>,
}

/// Compression bookkeeping.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelStats {
    pub tiles: usize,
    pub offered: usize,
    pub compressed: usize,
    pub rank_sum: usize,
}

/// Supernodal `L\U` factors with dense-or-low-rank off-diagonal tiles.
#[derive(Debug, Clone)]
pub struct BlrFactors {
    partition: SupernodePartition,
    perm: Permutation,
    supernodes: Vec<SupernodeFactor>,
    ledger: MemoryLedger,
    flops: FlopCounter,
    stats: PanelStats,
    epsilon: f64,
    blr_enabled: bool,
}

impl BlrFactors {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn partition(&self) -> &SupernodePartition {
        &self.partition
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn supernodes(&self) -> &[SupernodeFactor] {
        &self.supernodes
    }

    pub fn ledger(&self) -> &MemoryLedger {
        &self.ledger
    }

    /// Flops spent in factorisation and compression.
    pub fn flops(&self) -> &FlopCounter {
        &self.flops
    }

    pub fn stats(&self) -> &PanelStats {
        &self.stats
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn blr_enabled(&self) -> bool {
        self.blr_enabled
    }

    /// Largest elementwise difference between two factorisations of the same
    /// analysis, low-rank tiles expanded.
    pub fn max_abs_difference(&self, other: &BlrFactors) -> f64 {
        assert_eq!(self.partition, other.partition, "factors of different analyses");
        let mut diff = 0.0f64;
        for (a, b) in self.supernodes.iter().zip(&other.supernodes) {
            diff = diff.max(a.diag.sub(&b.diag).max_abs());
            for (ta, tb) in a.lower.iter().chain(&a.upper).zip(b.lower.iter().chain(&b.upper)) {
                diff = diff.max(ta.block.to_dense().sub(&tb.block.to_dense()).max_abs());
            }
        }
        diff
    }

    pub fn max_abs_entry(&self) -> f64 {
        let mut m = 0.0f64;
        for s in &self.supernodes {
            m = m.max(s.diag.max_abs());
            for t in s.lower.iter().chain(&s.upper) {
                m = m.max(t.block.to_dense().max_abs());
            }
        }
        m
    }

    /// Dense reconstruction `(Π, L, U)` with `Π P A Pᵀ = L U`, where `Π`
    /// is returned as a row order (`row k` of `Π B` is row `Π[k]` of `B`).
    /// Intended for small matrices in tests and diagnostics.
    pub fn dense_factors(&self) -> (Vec<usize>, DenseBlock, DenseBlock) {
        let n = self.n();
        let mut l = DenseBlock::identity(n);
        let mut u = DenseBlock::zeros(n, n);
        let mut order: Vec<usize> = (0..n).collect();
        for (s, f) in self.supernodes.iter().enumerate() {
            let cols = self.partition.cols(s);
            let rows = self.partition.rows(s);
            let c0 = cols.start;
            for (k, &p) in f.pivots.iter().enumerate() {
                if p != k {
                    order.swap(c0 + k, c0 + p);
                    for j in 0..c0 {
                        let (a, b) = (l[(c0 + k, j)], l[(c0 + p, j)]);
                        l[(c0 + k, j)] = b;
                        l[(c0 + p, j)] = a;
                    }
                }
            }
            let w = cols.len();
            for j in 0..w {
                for i in 0..w {
                    if i > j {
                        l[(c0 + i, c0 + j)] = f.diag[(i, j)];
                    } else {
                        u[(c0 + i, c0 + j)] = f.diag[(i, j)];
                    }
                }
            }
            for t in &f.lower {
                let d = t.block.to_dense();
                for j in 0..w {
                    for a in 0..d.rows() {
                        l[(rows[t.offset + a], c0 + j)] = d[(a, j)];
                    }
                }
            }
            for t in &f.upper {
                let d = t.block.to_dense();
                for b in 0..d.cols() {
                    for i in 0..w {
                        u[(c0 + i, rows[t.offset + b])] = d[(i, b)];
                    }
                }
            }
        }
        (order, l, u)
    }
}

/// Pending Schur-complement values of one supernode.
struct Front {
    diag: DenseBlock,
    lower: DenseBlock,
    upper: DenseBlock,
}

impl Front {
    fn bytes(&self) -> usize {
        8 * (self.diag.len() + self.lower.len() + self.upper.len())
    }

    /// Scatter of the permuted matrix into the supernode's dense layout.
    fn assemble(b: &SparseMatrixCsc, part: &SupernodePartition, s: usize) -> Self {
        let cols = part.cols(s);
        let rows = part.rows(s);
        let (w, r) = (cols.len(), rows.len());
        let mut diag = DenseBlock::zeros(w, w);
        let mut lower = DenseBlock::zeros(r, w);
        let mut upper = DenseBlock::zeros(w, r);
        for j in cols.clone() {
            let (ri, vals) = b.col(j);
            for (&i, &v) in ri.iter().zip(vals) {
                if cols.contains(&i) {
                    diag[(i - cols.start, j - cols.start)] = v;
                } else if i >= cols.end {
                    let pos = rows.binary_search(&i).expect("entry inside the fill pattern");
                    lower[(pos, j - cols.start)] = v;
                }
            }
        }
        for (pos, &j) in rows.iter().enumerate() {
            let (ri, vals) = b.col(j);
            let lo = ri.partition_point(|&i| i < cols.start);
            let hi = ri.partition_point(|&i| i < cols.end);
            for (&i, &v) in ri[lo..hi].iter().zip(&vals[lo..hi]) {
                upper[(i - cols.start, pos)] = v;
            }
        }
        Front { diag, lower, upper }
    }
}

/// Tile offsets along a supernode's row structure: rows facing the same
/// supernode stay together, groups are packed up to `tile_size`.
fn tile_ranges(rows: &[usize], owner: &[usize], tile_size: usize) -> Vec<std::ops::Range<usize>> {
    let mut groups: Vec<std::ops::Range<usize>> = Vec::new();
    let mut start = 0;
    for k in 1..=rows.len() {
        if k == rows.len() || owner[rows[k]] != owner[rows[start]] {
            let mut a = start;
            while a < k {
                let b = (a + tile_size).min(k);
                groups.push(a..b);
                a = b;
            }
            start = k;
        }
    }
    let mut tiles: Vec<std::ops::Range<usize>> = Vec::new();
    for g in groups {
        match tiles.last_mut() {
            Some(last) if last.len() + g.len() <= tile_size => last.end = g.end,
            _ => tiles.push(g),
        }
    }
    tiles
}

/// Position of each of `source` rows inside the sorted superset `target`.
fn relative_positions(source: &[usize], target: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(source.len());
    let mut k = 0;
    for &r in source {
        while target[k] < r {
            k += 1;
        }
        debug_assert_eq!(target[k], r, "row structure is not nested");
        out.push(k);
    }
    out
}

struct Factorizer<'a> {
    part: &'a SupernodePartition,
    owner: Vec<usize>,
    opts: &'a FactorOptions,
    factors: Vec<Option<SupernodeFactor>>,
    flops: FlopCounter,
    stats: PanelStats,
    committed_bytes: usize,
    live_front_bytes: usize,
    peak_bytes: usize,
}

impl Factorizer<'_> {
    fn note_peak(&mut self) {
        self.peak_bytes = self.peak_bytes.max(self.committed_bytes + self.live_front_bytes);
    }

    /// Applies the update of factored supernode `s` to the front of `t`.
    fn apply_contribution(&mut self, s: usize, t: usize, front: &mut Front) {
        let rows_s = self.part.rows(s);
        let cols_t = self.part.cols(t);
        let rows_t = self.part.rows(t);
        let first = rows_s.partition_point(|&r| r < cols_t.start);
        let end_t = rows_s.partition_point(|&r| r < cols_t.end);
        if first == end_t {
            return;
        }
        let src = self.factors[s].as_ref().expect("source factored before target");
        let flops = &mut self.flops.factorisation_flops;

        // Rows at or below the target's first column, columns inside it.
        let block = panel_product(&src.lower, &src.upper, first..rows_s.len(), first..end_t, flops);
        let below = relative_positions(&rows_s[end_t..], rows_t);
        for b in 0..end_t - first {
            let col = rows_s[first + b] - cols_t.start;
            let values = block.col(b);
            for a in 0..end_t - first {
                front.diag[(rows_s[first + a] - cols_t.start, col)] += values[a];
            }
            for (a, &pos) in below.iter().enumerate() {
                front.lower[(pos, col)] += values[end_t - first + a];
            }
        }

        // Rows inside the target, columns beyond it.
        if end_t < rows_s.len() {
            let block = panel_product(&src.lower, &src.upper, first..end_t, end_t..rows_s.len(), flops);
            for (b, &pos) in below.iter().enumerate() {
                let values = block.col(b);
                for a in 0..end_t - first {
                    front.upper[(rows_s[first + a] - cols_t.start, pos)] += values[a];
                }
            }
        }
    }

    fn eliminate(&mut self, s: usize, mut front: Front) -> Result<()> {
        let cols = self.part.cols(s);
        let flops = &mut self.flops.factorisation_flops;
        let pivots = dense_lu_threshold(&mut front.diag, self.opts.pivot_threshold, flops).map_err(|e| {
            match e {
                Error::SingularBlock { index, .. } => Error::SingularSupernode {
                    supernode: s,
                    column: cols.start + index,
                },
                other => other,
            }
        })?;
        if front.lower.rows() > 0 {
            apply_pivots_rows(&pivots, &mut front.upper);
            trsm(&front.diag, &mut front.upper, Side::Left, Triangle::Lower, false, Diagonal::Unit, flops)?;
            trsm(&front.diag, &mut front.lower, Side::Right, Triangle::Upper, false, Diagonal::NonUnit, flops)
                .map_err(|_| Error::SingularSupernode {
                    supernode: s,
                    column: cols.start,
                })?;
        }

        let w = cols.len();
        let rows = self.part.rows(s);
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for range in tile_ranges(rows, &self.owner, self.opts.tile_size) {
            let l = front.lower.submatrix(range.start, range.end, 0, w);
            let u = front.upper.submatrix(0, w, range.start, range.end);
            lower.push(Tile {
                offset: range.start,
                block: self.offer(l),
            });
            upper.push(Tile {
                offset: range.start,
                block: self.offer(u),
            });
        }

        let factor = SupernodeFactor {
            diag: front.diag,
            pivots,
            lower,
            upper,
        };
        self.committed_bytes += 8
            * (factor.diag.len()
                + factor
                    .lower
                    .iter()
                    .chain(&factor.upper)
                    .map(|t| t.block.stored_entries())
                    .sum::<usize>());
        self.factors[s] = Some(factor);
        Ok(())
    }

    fn offer(&mut self, block: DenseBlock) -> PanelBlock {
        self.stats.tiles += 1;
        let eligible = self.opts.blr && block.rows().min(block.cols()) >= self.opts.panel_min;
        if !eligible {
            return PanelBlock::Dense(block);
        }
        self.stats.offered += 1;
        match compress(&block, self.opts.epsilon, self.opts.mode, &mut self.flops.compression_flops) {
            Compression::LowRank(lr) => {
                self.stats.compressed += 1;
                self.stats.rank_sum += lr.rank();
                PanelBlock::LowRank(lr)
            }
            Compression::KeepDense { .. } => PanelBlock::Dense(block),
        }
    }
}

/// Numeric factorisation of `a` along a precomputed analysis.
pub fn factorize(a: &SparseMatrixCsc, analysis: &Analysis, opts: &FactorOptions) -> Result<BlrFactors> {
    opts.validate()?;
    if analysis.n() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            found: analysis.n(),
        });
    }
    let b = a.permute_symmetric(analysis.perm.perm())?;
    let part = &analysis.partition;
    let ns = part.len();
    let owner = part.column_owner();

    // Supernodes each one updates, ascending.
    let mut targets: Vec<Vec<usize>> = Vec::with_capacity(ns);
    let mut sources: Vec<Vec<usize>> = vec![Vec::new(); ns];
    for s in 0..ns {
        let mut ts: Vec<usize> = part.rows(s).iter().map(|&r| owner[r]).collect();
        ts.dedup();
        for &t in &ts {
            sources[t].push(s);
        }
        targets.push(ts);
    }

    let mut fz = Factorizer {
        part,
        owner,
        opts,
        factors: vec![None; ns],
        flops: FlopCounter::default(),
        stats: PanelStats::default(),
        committed_bytes: 0,
        live_front_bytes: 0,
        peak_bytes: 0,
    };

    match opts.schedule {
        Schedule::FanIn => {
            for t in 0..ns {
                let mut front = Front::assemble(&b, part, t);
                fz.live_front_bytes = front.bytes();
                fz.note_peak();
                for &s in &sources[t] {
                    fz.apply_contribution(s, t, &mut front);
                }
                fz.eliminate(t, front)?;
                fz.live_front_bytes = 0;
                fz.note_peak();
            }
        }
        Schedule::FanOut => {
            let mut fronts: Vec<Option<Front>> = (0..ns).map(|_| None).collect();
            for s in 0..ns {
                let front = match fronts[s].take() {
                    Some(f) => f,
                    None => {
                        let f = Front::assemble(&b, part, s);
                        fz.live_front_bytes += f.bytes();
                        f
                    }
                };
                fz.note_peak();
                let bytes = front.bytes();
                fz.eliminate(s, front)?;
                fz.live_front_bytes -= bytes;
                for &t in &targets[s] {
                    let front = fronts[t].get_or_insert_with(|| {
                        let f = Front::assemble(&b, part, t);
                        fz.live_front_bytes += f.bytes();
                        f
                    });
                    fz.apply_contribution(s, t, front);
                }
                fz.note_peak();
            }
        }
    }

    let supernodes: Vec<SupernodeFactor> = fz.factors.into_iter().map(|f| f.expect("every supernode factored")).collect();
    let ledger = MemoryLedger::from_factors(part, &analysis.perm, &supernodes, fz.peak_bytes);
    Ok(BlrFactors {
        partition: part.clone(),
        perm: analysis.perm.clone(),
        supernodes,
        ledger,
        flops: fz.flops,
        stats: fz.stats,
        epsilon: opts.epsilon,
        blr_enabled: opts.blr,
    })
}
