use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::gmres::{gmres, GmresConfig};
use super::system::{BlockSystem, Preconditioner};
use crate::error::Result;
use crate::kernels::FlopCounter;
use crate::numeric::{FactorOptions, MemoryLedger};
use crate::symbolic::Analysis;

/// When to recompute the preconditioner between time steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefactorPolicy {
    /// Refactorise after a step needing more than this many iterations.
    pub threshold: usize,
    pub force_every_step: bool,
}

impl Default for RefactorPolicy {
    fn default() -> Self {
        Self {
            threshold: 20,
            force_every_step: false,
        }
    }
}

impl RefactorPolicy {
    pub fn forced() -> Self {
        Self {
            force_every_step: true,
            ..Self::default()
        }
    }

    /// Decision for step `step` given the previous step's iteration count.
    pub fn should_refactor(&self, step: usize, previous_iterations: Option<usize>) -> bool {
        step == 0 || self.force_every_step || previous_iterations.is_some_and(|it| it > self.threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub gmres_iterations: usize,
    pub converged: bool,
    pub refactorised: bool,
    pub relative_residual: f64,
    pub facto_flops: u64,
    pub solve_flops: u64,
    /// Preconditioner memory in use during this step.
    pub ledger: MemoryLedger,
    pub facto_time_s: f64,
    pub solve_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeStepTrace {
    pub steps: Vec<StepRecord>,
    /// Set when a step failed to converge and the run stopped there.
    pub diagnostic: Option<String>,
}

impl TimeStepTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn completed(&self) -> bool {
        self.diagnostic.is_none() && self.steps.iter().all(|s| s.converged)
    }

    pub fn nbr_factorisations(&self) -> usize {
        self.steps.iter().filter(|s| s.refactorised).count()
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.gmres_iterations).sum()
    }

    pub fn iterations(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.gmres_iterations).collect()
    }

    pub fn refactorised(&self) -> Vec<bool> {
        self.steps.iter().map(|s| s.refactorised).collect()
    }

    pub fn facto_flops(&self) -> u64 {
        self.steps.iter().map(|s| s.facto_flops).sum()
    }

    pub fn solve_flops(&self) -> u64 {
        self.steps.iter().map(|s| s.solve_flops).sum()
    }

    /// Largest preconditioner ledger seen over the run.
    pub fn max_ledger(&self) -> MemoryLedger {
        self.steps.iter().map(|s| s.ledger).max_by_key(|l| l.factor_bytes).unwrap_or_default()
    }

    pub fn wall_time_s(&self) -> f64 {
        self.steps.iter().map(|s| s.facto_time_s + s.solve_time_s).sum()
    }

    /// Whether every step obeys `policy`.
    pub fn satisfies(&self, policy: &RefactorPolicy) -> bool {
        self.steps.iter().enumerate().all(|(t, s)| {
            let prev = t.checked_sub(1).map(|p| self.steps[p].gmres_iterations);
            s.refactorised == policy.should_refactor(s.step, prev) && s.step == t
        })
    }
}

/// Refactorisation flags a policy produces for an iteration sequence.
pub fn policy_flags(policy: &RefactorPolicy, iterations: &[usize]) -> Vec<bool> {
    (0..iterations.len())
        .map(|t| policy.should_refactor(t, t.checked_sub(1).map(|p| iterations[p])))
        .collect()
}

/// One step of a time-stepping workload.
#[derive(Debug, Clone)]
pub struct TimeStep {
    pub system: BlockSystem,
    pub rhs: Vec<f64>,
}

/// Drives GMRES across a sequence of systems sharing one sparsity pattern,
/// reusing the preconditioner until `policy` asks for a new one. The run
/// stops after the first step that fails to converge.
pub fn run_timesteps<I>(
    steps: I,
    analyses: &[Analysis],
    policy: &RefactorPolicy,
    cfg: &GmresConfig,
    opts: &FactorOptions,
) -> Result<TimeStepTrace>
where
    I: IntoIterator<Item = Result<TimeStep>>,
{
    cfg.validate()?;
    opts.validate()?;
    let mut trace = TimeStepTrace::default();
    let mut precond: Option<Preconditioner> = None;
    let mut previous: Option<usize> = None;
    for (t, step) in steps.into_iter().enumerate() {
        let TimeStep { system, rhs } = step?;
        let refactorise = policy.should_refactor(t, previous) || precond.is_none();
        let mut facto_flops = 0;
        let mut facto_time_s = 0.0;
        if refactorise {
            let start = Instant::now();
            let p = Preconditioner::build(&system, analyses, opts, t)?;
            facto_time_s = start.elapsed().as_secs_f64();
            let f = p.flops();
            facto_flops = f.factorisation_flops + f.compression_flops;
            precond = Some(p);
        }
        let p = precond.as_ref().expect("preconditioner built at step 0");
        let mut counter = FlopCounter::default();
        let start = Instant::now();
        let out = gmres(&system, &rhs, p, cfg, &mut counter)?;
        let solve_time_s = start.elapsed().as_secs_f64();
        trace.steps.push(StepRecord {
            step: t,
            gmres_iterations: out.iterations,
            converged: out.converged,
            refactorised: refactorise,
            relative_residual: out.relative_residual,
            facto_flops,
            solve_flops: counter.solve_flops,
            ledger: p.ledger(),
            facto_time_s,
            solve_time_s,
        });
        if !out.converged {
            trace.diagnostic = Some(format!(
                "step {t}: GMRES reached {} iterations with relative residual {:e}",
                out.iterations, out.relative_residual
            ));
            break;
        }
        previous = Some(out.iterations);
    }
    Ok(trace)
}
