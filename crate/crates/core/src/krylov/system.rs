use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::FlopCounter;
use crate::numeric::{factorize, BlrFactors, FactorOptions, MemoryLedger};
use crate::sparse::SparseMatrixCsc;
use crate::symbolic::{analyse, Analysis, AnalysisOptions, OrderingKind};

/// Rectangular coupling between two harmonic blocks, stored as sorted
/// `(row, col, value)` triplets in block-local indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock {
    /// Block row index (the harmonic receiving the contribution).
    pub row_block: usize,
    /// Block column index.
    pub col_block: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

/// Harmonic-blocked linear system: `diag(A_h) + γ C`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem {
    harmonics: Vec<i32>,
    diag_blocks: Vec<SparseMatrixCsc>,
    coupling: Vec<CouplingBlock>,
    gamma: f64,
    offsets: Vec<usize>,
}

impl BlockSystem {
    pub fn new(
        harmonics: Vec<i32>,
        diag_blocks: Vec<SparseMatrixCsc>,
        coupling: Vec<CouplingBlock>,
        gamma: f64,
    ) -> Result<Self> {
        if harmonics.len() != diag_blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: harmonics.len(),
                found: diag_blocks.len(),
            });
        }
        if harmonics.is_empty() {
            return Err(Error::Config("block system needs at least one harmonic".into()));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Config(format!("coupling strength must be >= 0, got {gamma}")));
        }
        for (i, h) in harmonics.iter().enumerate() {
            if harmonics[..i].contains(h) {
                return Err(Error::Config(format!("harmonic {h} listed twice")));
            }
        }
        if let Some(z) = harmonics.iter().position(|&h| h == 0) {
            let base = diag_blocks[z].n();
            for (h, b) in harmonics.iter().zip(&diag_blocks) {
                if *h != 0 && b.n() != 2 * base {
                    return Err(Error::DimensionMismatch {
                        expected: 2 * base,
                        found: b.n(),
                    });
                }
            }
        }
        let mut offsets = vec![0];
        for b in &diag_blocks {
            offsets.push(offsets.last().unwrap() + b.n());
        }
        for c in &coupling {
            if c.row_block >= diag_blocks.len() || c.col_block >= diag_blocks.len() {
                return Err(Error::Config("coupling block refers to a missing harmonic".into()));
            }
            let (m, n) = (diag_blocks[c.row_block].n(), diag_blocks[c.col_block].n());
            if c.entries.iter().any(|&(i, j, _)| i >= m || j >= n) {
                return Err(Error::ShapeMismatch(format!(
                    "coupling entry outside the {m}x{n} block ({}, {})",
                    c.row_block, c.col_block
                )));
            }
        }
        Ok(Self {
            harmonics,
            diag_blocks,
            coupling,
            gamma,
            offsets,
        })
    }

    /// Single-block system without coupling.
    pub fn single(a: SparseMatrixCsc) -> Self {
        Self::new(vec![0], vec![a], Vec::new(), 0.0).expect("one block is always consistent")
    }

    pub fn harmonics(&self) -> &[i32] {
        &self.harmonics
    }

    pub fn diag_blocks(&self) -> &[SparseMatrixCsc] {
        &self.diag_blocks
    }

    pub fn coupling(&self) -> &[CouplingBlock] {
        &self.coupling
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.harmonics.clone(), self.diag_blocks.clone(), self.coupling.clone(), gamma)
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// `y = A x` applied blockwise: diagonal blocks first, coupling blocks
    /// in storage order.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        let mut y = vec![0.0; self.dim()];
        for (k, b) in self.diag_blocks.iter().enumerate() {
            let r = self.offsets[k]..self.offsets[k + 1];
            b.spmv_into(&x[r.clone()], &mut y[r])?;
        }
        if self.gamma != 0.0 {
            for c in &self.coupling {
                let (ro, co) = (self.offsets[c.row_block], self.offsets[c.col_block]);
                for &(i, j, v) in &c.entries {
                    y[ro + i] += self.gamma * v * x[co + j];
                }
            }
        }
        Ok(y)
    }

    /// The coupled matrix as one sparse matrix.
    pub fn assemble_full(&self) -> Result<SparseMatrixCsc> {
        let mut t = Vec::new();
        for (k, b) in self.diag_blocks.iter().enumerate() {
            let o = self.offsets[k];
            t.extend(b.triplets().map(|(i, j, v)| (i + o, j + o, v)));
        }
        if self.gamma != 0.0 {
            for c in &self.coupling {
                let (ro, co) = (self.offsets[c.row_block], self.offsets[c.col_block]);
                t.extend(c.entries.iter().map(|&(i, j, v)| (i + ro, j + co, self.gamma * v)));
            }
        }
        SparseMatrixCsc::from_triplets(self.dim(), &t)
    }
}

/// Free function form of [`BlockSystem::assemble_full`].
pub fn assemble_full(system: &BlockSystem) -> Result<SparseMatrixCsc> {
    system.assemble_full()
}

/// Analyses every diagonal block. A grid ordering takes its dofs per node
/// from each block's dimension, so harmonics with sin/cos pairs keep their
/// pairs together.
pub fn analyse_blocks(system: &BlockSystem, base: &AnalysisOptions) -> Result<Vec<Analysis>> {
    system
        .diag_blocks
        .iter()
        .zip(&system.harmonics)
        .map(|(b, &h)| {
            let mut opts = base.clone();
            if let OrderingKind::GridNd { n_flux, n_tht } = opts.ordering {
                let nodes = n_flux * n_tht;
                if nodes == 0 || b.n() % nodes != 0 {
                    return Err(Error::Config(format!(
                        "block of harmonic {h} has dimension {} not divisible by {nodes} grid nodes",
                        b.n()
                    )));
                }
                opts.dofs_per_node = b.n() / nodes;
            }
            analyse(b, &opts).map_err(|e| label(h, e))
        })
        .collect()
}

fn label(harmonic: i32, e: Error) -> Error {
    Error::Harmonic {
        harmonic,
        source: Box::new(e),
    }
}

/// Something applying an approximate inverse of the system matrix.
pub trait ApplyPreconditioner {
    fn dim(&self) -> usize;
    fn precondition(&self, r: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>>;
}

/// `M = I`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityPreconditioner(pub usize);

impl ApplyPreconditioner for IdentityPreconditioner {
    fn dim(&self) -> usize {
        self.0
    }

    fn precondition(&self, r: &[f64], _flops: &mut FlopCounter) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

/// Block-diagonal preconditioner: one factorisation per harmonic block,
/// coupling ignored.
#[derive(Debug, Clone)]
pub struct Preconditioner {
    harmonics: Vec<i32>,
    offsets: Vec<usize>,
    factors: Vec<BlrFactors>,
    epsilon: Option<f64>,
    created_at: usize,
}

impl Preconditioner {
    /// Factorises each diagonal block independently, in parallel. Blocks
    /// keep their harmonic order whatever the completion order.
    pub fn build(
        system: &BlockSystem,
        analyses: &[Analysis],
        opts: &FactorOptions,
        created_at: usize,
    ) -> Result<Self> {
        if analyses.len() != system.diag_blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: system.diag_blocks.len(),
                found: analyses.len(),
            });
        }
        let factors = system
            .diag_blocks
            .par_iter()
            .zip(analyses.par_iter())
            .zip(system.harmonics.par_iter())
            .map(|((b, an), &h)| factorize(b, an, opts).map_err(|e| label(h, e)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            harmonics: system.harmonics.clone(),
            offsets: system.offsets.clone(),
            factors,
            epsilon: opts.blr.then_some(opts.epsilon),
            created_at,
        })
    }

    pub fn harmonics(&self) -> &[i32] {
        &self.harmonics
    }

    pub fn factors(&self) -> &[BlrFactors] {
        &self.factors
    }

    /// `None` without compression.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    /// Step index at which the factorisation was computed.
    pub fn created_at(&self) -> usize {
        self.created_at
    }

    pub fn ledger(&self) -> MemoryLedger {
        self.factors
            .iter()
            .fold(MemoryLedger::default(), |acc, f| acc.add(f.ledger()))
    }

    pub fn block_ledger(&self, harmonic: i32) -> Option<&MemoryLedger> {
        let k = self.harmonics.iter().position(|&h| h == harmonic)?;
        Some(self.factors[k].ledger())
    }

    /// Factorisation and compression flops summed over blocks.
    pub fn flops(&self) -> FlopCounter {
        let mut c = FlopCounter::default();
        for f in &self.factors {
            c.merge(f.flops());
        }
        c
    }
}

impl ApplyPreconditioner for Preconditioner {
    fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn precondition(&self, r: &[f64], flops: &mut FlopCounter) -> Result<Vec<f64>> {
        if r.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: r.len(),
            });
        }
        let mut z = Vec::with_capacity(r.len());
        for (k, f) in self.factors.iter().enumerate() {
            z.extend(f.solve_counted(&r[self.offsets[k]..self.offsets[k + 1]], flops)?);
        }
        Ok(z)
    }
}

/// Free function form of [`Preconditioner::build`] analysing the blocks first.
pub fn build_preconditioner(
    system: &BlockSystem,
    analysis: &AnalysisOptions,
    opts: &FactorOptions,
) -> Result<Preconditioner> {
    let analyses = analyse_blocks(system, analysis)?;
    Preconditioner::build(system, &analyses, opts, 0)
}
