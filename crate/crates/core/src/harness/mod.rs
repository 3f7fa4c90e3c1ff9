//! Problem generator, configuration, scan drivers and report output.

mod config;
mod generator;
mod report;
mod scan;

pub use config::{BlrSection, Epsilon, OrderingChoice, ScanSection, SolverConfig, WorkloadKind};
pub use generator::{generate_problem, generate_rhs, GammaSpec, GridConfig, Workload};
pub use report::{emit_report, ReportFormat, ScanReport, ScanRow, CSV_HEADER};
pub use scan::{
    dense_factor_bytes, run_cell, scan_epsilon, scan_epsilon_cells, scan_resolution, scan_resolution_cells,
    CellOutcome,
};
