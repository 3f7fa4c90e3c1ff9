//! Shared fixtures for the benchmarks.

use blr_core::harness::{generate_problem, GridConfig, SolverConfig};
use blr_core::krylov::analyse_blocks;
use blr_core::{Analysis, DenseBlock, LowRankBlock, SparseMatrixCsc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_block(rows: usize, cols: usize, seed: u64) -> DenseBlock {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseBlock::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Rank-`k` block `U Vᵀ` of size `n × n`.
pub fn random_low_rank(n: usize, k: usize, seed: u64) -> LowRankBlock {
    LowRankBlock::new(random_block(n, k, seed), random_block(n, k, seed + 1), 0.0, 1.0).expect("equal ranks")
}

/// Unit lower triangular `n × n` factor with small off-diagonal entries.
pub fn unit_lower(n: usize, seed: u64) -> DenseBlock {
    let r = random_block(n, n, seed);
    DenseBlock::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => 0.1 * r[(i, j)],
        std::cmp::Ordering::Equal => 1.0,
        std::cmp::Ordering::Less => 0.0,
    })
}

/// Dense block whose singular values decay geometrically by `rate`.
pub fn decaying_block(n: usize, rate: f64, seed: u64) -> DenseBlock {
    let u = random_block(n, n, seed);
    let v = random_block(n, n, seed + 1);
    DenseBlock::from_fn(n, n, |i, j| (0..n).map(|k| u[(i, k)] * rate.powi(k as i32) * v[(j, k)]).sum())
}

/// Harmonic-0 block of the default generator on an `n_flux × n_tht` grid,
/// with its analysis.
pub fn grid_problem(n_flux: usize, n_tht: usize) -> (SparseMatrixCsc, Analysis, SolverConfig) {
    let cfg = SolverConfig {
        grid: GridConfig {
            n_flux,
            n_tht,
            ..GridConfig::default()
        },
        ..SolverConfig::default()
    };
    let system = generate_problem(&cfg.grid).expect("valid grid");
    let mut analyses = analyse_blocks(&system, &cfg.blr.analysis_options(&cfg.grid)).expect("analysis");
    (system.diag_blocks()[0].clone(), analyses.remove(0), cfg)
}
