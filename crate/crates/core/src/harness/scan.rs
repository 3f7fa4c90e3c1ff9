use rayon::prelude::*;

use super::config::{Epsilon, SolverConfig, WorkloadKind};
use super::generator::{GridConfig, Workload};
use super::report::{ScanReport, ScanRow};
use crate::error::Result;
use crate::krylov::{analyse_blocks, run_timesteps, RefactorPolicy, TimeStepTrace};
use crate::symbolic::Analysis;

/// Value bytes an uncompressed factorisation of these analyses stores.
pub fn dense_factor_bytes(analyses: &[Analysis]) -> usize {
    analyses
        .iter()
        .map(|an| {
            let p = &an.partition;
            (0..p.len())
                .map(|s| {
                    let w = p.width(s);
                    8 * (w * w + 2 * w * p.rows(s).len())
                })
                .sum::<usize>()
        })
        .sum()
}

/// Result of one scan cell with its full trace.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub row: ScanRow,
    pub trace: Option<TimeStepTrace>,
    pub error: Option<String>,
}

/// Runs one time-step workload for `grid` at compression `eps`.
pub fn run_cell(
    cfg: &SolverConfig,
    grid: &GridConfig,
    analyses: &[Analysis],
    eps: Epsilon,
    policy: &RefactorPolicy,
    steps: usize,
    baseline_bytes: usize,
) -> CellOutcome {
    let opts = cfg.blr.factor_options(eps);
    let result = Workload::new(grid, steps)
        .and_then(|w| run_timesteps(w.iter(), analyses, policy, &cfg.gmres, &opts));
    let mut row = ScanRow {
        n_flux: grid.n_flux,
        n_tht: grid.n_tht,
        epsilon: eps,
        factor_bytes: 0,
        ratio: None,
        facto_flops: 0,
        solve_flops: 0,
        gmres_iters: 0,
        nbr_factorisations: 0,
        converged: false,
        wall_time_s: 0.0,
    };
    match result {
        Ok(trace) => {
            row.factor_bytes = trace.max_ledger().factor_bytes;
            row.facto_flops = trace.facto_flops();
            row.solve_flops = trace.solve_flops();
            row.gmres_iters = trace.total_iterations();
            row.nbr_factorisations = trace.nbr_factorisations();
            row.converged = trace.completed() && trace.len() == steps;
            row.wall_time_s = trace.wall_time_s();
            if row.converged && baseline_bytes > 0 {
                row.ratio = Some(row.factor_bytes as f64 / baseline_bytes as f64);
            }
            CellOutcome {
                row,
                trace: Some(trace),
                error: None,
            }
        }
        Err(e) => CellOutcome {
            row,
            trace: None,
            error: Some(e.to_string()),
        },
    }
}

fn cells_for_grid(
    cfg: &SolverConfig,
    grid: &GridConfig,
    eps: &[Epsilon],
    policy: &RefactorPolicy,
    steps: usize,
) -> Result<Vec<CellOutcome>> {
    let system = super::generator::generate_problem(grid)?;
    let analyses = analyse_blocks(&system, &cfg.blr.analysis_options(grid))?;
    let baseline = dense_factor_bytes(&analyses);
    Ok(eps
        .par_iter()
        .map(|&e| run_cell(cfg, grid, &analyses, e, policy, steps, baseline))
        .collect())
}

/// Resolution scan: every ladder rung against every ε, each cell running
/// `cfg.scan.steps` forced-refactorisation steps. Rows are ladder-major.
pub fn scan_resolution(cfg: &SolverConfig, ladder: &[(usize, usize)], eps: &[Epsilon]) -> Result<ScanReport> {
    Ok(ScanReport {
        rows: scan_resolution_cells(cfg, ladder, eps)?.into_iter().map(|c| c.row).collect(),
    })
}

pub fn scan_resolution_cells(
    cfg: &SolverConfig,
    ladder: &[(usize, usize)],
    eps: &[Epsilon],
) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(ladder.len() * eps.len());
    for &(n_flux, n_tht) in ladder {
        let grid = GridConfig {
            n_flux,
            n_tht,
            ..cfg.grid.clone()
        };
        out.extend(cells_for_grid(cfg, &grid, eps, &RefactorPolicy::forced(), cfg.scan.steps)?);
    }
    Ok(out)
}

/// ε scan on the configured grid. `Force` refactorises every step, `Ramp`
/// follows `cfg.policy` while the coupling follows `cfg.grid.gamma`.
pub fn scan_epsilon(cfg: &SolverConfig, eps: &[Epsilon], workload: WorkloadKind) -> Result<ScanReport> {
    Ok(ScanReport {
        rows: scan_epsilon_cells(cfg, eps, workload)?.into_iter().map(|c| c.row).collect(),
    })
}

pub fn scan_epsilon_cells(cfg: &SolverConfig, eps: &[Epsilon], workload: WorkloadKind) -> Result<Vec<CellOutcome>> {
    cfg.validate()?;
    let policy = match workload {
        WorkloadKind::Force => RefactorPolicy::forced(),
        WorkloadKind::Ramp => cfg.policy,
    };
    cells_for_grid(cfg, &cfg.grid, eps, &policy, cfg.scan.steps)
}
