//! Sparse supernodal LU with optional block low-rank (BLR) compression of
//! off-diagonal factor panels, a block-diagonal preconditioned GMRES layer,
//! and the problem generator and scan drivers used to study the
//! memory, runtime and convergence tradeoffs of compression.
//!
//! The pipeline follows the usual three phases of a sparse direct solver:
//!
//! 1. [`symbolic`]: fill-reducing ordering, elimination tree, fill pattern
//!    and supernode partition.
//! 2. [`numeric::factorize`]: supernodal LU with left- or right-looking
//!    updates, compressing eligible panels once they are fully updated.
//! 3. [`numeric::BlrFactors::solve`]: forward and back substitution, applying
//!    low-rank panels without expanding them.

pub mod error;
pub mod harness;
pub mod kernels;
pub mod krylov;
pub mod numeric;
pub mod sparse;
pub mod symbolic;

pub use error::{Error, Result};
pub use kernels::{Compression, FlopCounter, LowRankBlock, TruncationMode};
pub use krylov::{BlockSystem, GmresConfig, GmresOutcome, Preconditioner, RefactorPolicy, TimeStepTrace};
pub use numeric::{factorize, BlrFactors, FactorOptions, MemoryLedger, Schedule};
pub use sparse::{DenseBlock, SparseMatrixCsc};
pub use symbolic::{Analysis, AnalysisOptions, OrderingKind, Permutation};
