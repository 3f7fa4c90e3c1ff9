use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use blr_core::harness::{
    emit_report, generate_problem, generate_rhs, scan_epsilon, scan_resolution, Epsilon, ReportFormat, ScanReport,
    SolverConfig, WorkloadKind, Workload,
};
use blr_core::krylov::{analyse_blocks, run_timesteps, Preconditioner};
use blr_core::numeric::memory_report;
use blr_core::sparse::{read_matrix_market, vec_norm, write_matrix_market};
use blr_core::symbolic::analyse;
use blr_core::{factorize, AnalysisOptions, BlrFactors, Error, Schedule, SparseMatrixCsc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "blr", version, about = "Block low-rank sparse LU and GMRES experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the assembled system as Matrix Market and echo the resolved config.
    Generate(Common),
    /// Factorise a matrix or every harmonic block of the generated system.
    Factorize(Common),
    /// Factorise and solve once, reporting the residual.
    Solve(Common),
    /// Run the preconditioned GMRES time-step loop on the generated system.
    Gmres(Common),
    /// Resolution scan over the configured ladder.
    ScanResolution(Common),
    /// Compression scan on the configured grid.
    ScanEpsilon(Common),
    /// Re-emit an existing CSV or JSON report.
    Report {
        /// Report produced by a scan.
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleArg {
    FanIn,
    FanOut,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Compression threshold, or `none` for no compression.
    #[arg(long)]
    epsilon: Option<Epsilon>,
    #[arg(long, value_enum)]
    blr: Option<Switch>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleArg>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Refactorise at every time step.
    #[arg(long)]
    force_facto: bool,
    /// Refactorise after a step needing more iterations than this.
    #[arg(long)]
    threshold: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Matrix Market input used instead of the generator.
    #[arg(long)]
    matrix: Option<PathBuf>,
}

/// Resolved command settings.
struct Run {
    cfg: SolverConfig,
    common: Common,
}

impl Run {
    fn new(common: Common) -> Result<Self, Error> {
        let mut cfg = match &common.config {
            Some(path) => SolverConfig::load(path)?,
            None => SolverConfig::default(),
        };
        if let Some(e) = common.epsilon {
            cfg.blr.epsilon = e;
        }
        match common.blr {
            Some(Switch::Off) => cfg.blr.epsilon = Epsilon::NONE,
            Some(Switch::On) if cfg.blr.epsilon.is_none() => {
                return Err(Error::Config("--blr on needs a numeric epsilon".into()))
            }
            _ => {}
        }
        if let Some(s) = common.schedule {
            cfg.blr.schedule = match s {
                ScheduleArg::FanIn => Schedule::FanIn,
                ScheduleArg::FanOut => Schedule::FanOut,
            };
        }
        if let Some(seed) = common.seed {
            cfg.grid.seed = seed;
        }
        if common.force_facto {
            cfg.policy.force_every_step = true;
        }
        if let Some(t) = common.threshold {
            cfg.policy.threshold = t;
        }
        if let Some(t) = common.tol {
            cfg.gmres.tolerance = t;
        }
        if let Some(m) = common.max_iters {
            cfg.gmres.max_iterations = m;
            cfg.gmres.restart = cfg.gmres.restart.min(m);
        }
        cfg.validate()?;
        Ok(Self { cfg, common })
    }

    fn format(&self) -> ReportFormat {
        match self.common.format {
            Some(FormatArg::Json) => ReportFormat::Json,
            _ => match self.common.out.as_deref().and_then(Path::extension) {
                Some(ext) if ext == "json" => ReportFormat::Json,
                _ => ReportFormat::Csv,
            },
        }
    }

    /// ε list of a scan: an explicit flag narrows the configured list.
    fn scan_epsilons(&self) -> Vec<Epsilon> {
        if self.common.epsilon.is_some() || matches!(self.common.blr, Some(Switch::Off)) {
            vec![self.cfg.blr.epsilon]
        } else {
            self.cfg.scan.epsilons.clone()
        }
    }

    fn write_text(&self, text: &str) -> Result<(), Error> {
        match &self.common.out {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }

    fn write_json(&self, value: &Value) -> Result<(), Error> {
        self.write_text(&format!("{}\n", serde_json::to_string_pretty(value)?))
    }

    fn write_report(&self, report: &ScanReport) -> Result<(), Error> {
        match &self.common.out {
            Some(path) => emit_report(report, self.format(), path),
            None => self.write_text(&report.render(self.format())),
        }
    }

    /// The matrix and analysis options of single-matrix commands.
    fn matrix(&self) -> Result<(SparseMatrixCsc, AnalysisOptions, Vec<f64>), Error> {
        match &self.common.matrix {
            Some(path) => {
                let a = read_matrix_market(path)?;
                let b = vec![1.0; a.n()];
                Ok((a, AnalysisOptions::default(), b))
            }
            None => {
                let system = generate_problem(&self.cfg.grid)?;
                let a = system.assemble_full()?;
                let b = generate_rhs(&self.cfg.grid);
                let opts = if system.diag_blocks().len() == 1 {
                    self.cfg.blr.analysis_options(&self.cfg.grid)
                } else {
                    AnalysisOptions {
                        dofs_per_node: self.cfg.grid.dofs_per_node,
                        ..AnalysisOptions::default()
                    }
                };
                Ok((a, opts, b))
            }
        }
    }
}

fn factor_summary(f: &BlrFactors, seconds: f64) -> Value {
    let report = memory_report(f, None);
    json!({
        "n": f.n(),
        "supernodes": f.partition().len(),
        "epsilon": Epsilon(f.blr_enabled().then_some(f.epsilon())),
        "ledger": report.ledger,
        "flops": f.flops(),
        "panels": f.stats(),
        "facto_time_s": seconds,
    })
}

fn generate(run: &Run) -> Result<(), Error> {
    let system = generate_problem(&run.cfg.grid)?;
    let a = system.assemble_full()?;
    match &run.common.out {
        Some(path) => {
            write_matrix_market(path, &a)?;
            std::fs::write(path.with_extension("config.json"), run.cfg.to_json())?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            blr_core::sparse::format_matrix_market(&mut out, &a)?;
        }
    }
    eprintln!("{}", run.cfg.to_json());
    Ok(())
}

fn factorize_cmd(run: &Run) -> Result<(), Error> {
    let opts = run.cfg.blr.factor_options(run.cfg.blr.epsilon);
    if run.common.matrix.is_some() {
        let (a, aopts, _) = run.matrix()?;
        let an = analyse(&a, &aopts)?;
        let start = Instant::now();
        let f = factorize(&a, &an, &opts)?;
        return run.write_json(&factor_summary(&f, start.elapsed().as_secs_f64()));
    }
    let system = generate_problem(&run.cfg.grid)?;
    let analyses = analyse_blocks(&system, &run.cfg.blr.analysis_options(&run.cfg.grid))?;
    let start = Instant::now();
    let p = Preconditioner::build(&system, &analyses, &opts, 0)?;
    let seconds = start.elapsed().as_secs_f64();
    let blocks: Vec<Value> = p
        .harmonics()
        .iter()
        .zip(p.factors())
        .map(|(h, f)| {
            let mut v = factor_summary(f, seconds);
            v["harmonic"] = json!(h);
            v
        })
        .collect();
    run.write_json(&json!({
        "dim": system.dim(),
        "ledger": p.ledger(),
        "blocks": blocks,
        "facto_time_s": seconds,
    }))
}

fn solve_cmd(run: &Run) -> Result<(), Error> {
    let (a, aopts, b) = run.matrix()?;
    let an = analyse(&a, &aopts)?;
    let start = Instant::now();
    let f = factorize(&a, &an, &run.cfg.blr.factor_options(run.cfg.blr.epsilon))?;
    let facto = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let x = f.solve(&b)?;
    let solve = start.elapsed().as_secs_f64();
    let ax = a.spmv(&x)?;
    let r: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| p - q).collect();
    let mut v = factor_summary(&f, facto);
    v["relative_residual"] = json!(vec_norm(&r) / vec_norm(&b));
    v["solve_time_s"] = json!(solve);
    run.write_json(&v)
}

/// Returns whether every step converged.
fn gmres_cmd(run: &Run) -> Result<bool, Error> {
    let cfg = &run.cfg;
    let workload = Workload::new(&cfg.grid, cfg.scan.steps)?;
    let analyses = analyse_blocks(workload.base(), &cfg.blr.analysis_options(&cfg.grid))?;
    let trace = run_timesteps(
        workload.iter(),
        &analyses,
        &cfg.policy,
        &cfg.gmres,
        &cfg.blr.factor_options(cfg.blr.epsilon),
    )?;
    let ok = trace.completed() && trace.len() == cfg.scan.steps;
    run.write_json(&json!({
        "epsilon": cfg.blr.epsilon,
        "converged": ok,
        "nbr_factorisations": trace.nbr_factorisations(),
        "total_iterations": trace.total_iterations(),
        "iterations": trace.iterations(),
        "refactorised": trace.refactorised(),
        "max_ledger": trace.max_ledger(),
        "facto_flops": trace.facto_flops(),
        "solve_flops": trace.solve_flops(),
        "diagnostic": trace.diagnostic,
    }))?;
    Ok(ok)
}

fn report_cmd(run: &Run, input: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(input)?;
    run.write_report(&ScanReport::parse(&text)?)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        _ if e.is_singular() => 4,
        Error::Harmonic { source, .. } => exit_code(source),
        Error::Config(_) | Error::Parse { .. } | Error::UnsupportedFormat(_) | Error::Json(_) => 2,
        Error::Breakdown(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<bool, Error> {
        match cli.command {
            Command::Generate(c) => generate(&Run::new(c)?).map(|_| true),
            Command::Factorize(c) => factorize_cmd(&Run::new(c)?).map(|_| true),
            Command::Solve(c) => solve_cmd(&Run::new(c)?).map(|_| true),
            Command::Gmres(c) => gmres_cmd(&Run::new(c)?),
            Command::ScanResolution(c) => {
                let run = Run::new(c)?;
                let report = scan_resolution(&run.cfg, &run.cfg.scan.ladder, &run.scan_epsilons())?;
                run.write_report(&report).map(|_| true)
            }
            Command::ScanEpsilon(c) => {
                let run = Run::new(c)?;
                let workload = if run.common.force_facto {
                    WorkloadKind::Force
                } else {
                    run.cfg.scan.workload
                };
                let report = scan_epsilon(&run.cfg, &run.scan_epsilons(), workload)?;
                run.write_report(&report).map(|_| true)
            }
            Command::Report { input, common } => report_cmd(&Run::new(common)?, &input).map(|_| true),
        }
    })();
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: GMRES did not converge");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
