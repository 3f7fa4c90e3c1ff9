//! Preconditioned GMRES on harmonic-blocked systems and the time-stepping
//! refactorisation policy.
//!
//! The preconditioner factorises each harmonic's diagonal block on its own
//! and drops the inter-harmonic coupling, so its quality degrades both with
//! the coupling strength and with the compression threshold.

mod gmres;
mod system;
mod timestep;

pub use gmres::{gmres, GmresConfig, GmresOutcome, Operator};
pub use system::{
    analyse_blocks, assemble_full, build_preconditioner, ApplyPreconditioner, BlockSystem, CouplingBlock,
    IdentityPreconditioner, Preconditioner,
};
pub use timestep::{policy_flags, run_timesteps, RefactorPolicy, StepRecord, TimeStep, TimeStepTrace};
