//! Two-team task-based detection and correction of silent data corruption,
//! exercised end-to-end by a desk-scale explicit DG compressible-Euler
//! solver with deterministic fault injection.
//!
//! The building blocks:
//!
//! - [`protocol`] — task outcomes, error-criteria vectors, the dubiosity
//!   indicator, the likelihood cascade, the outcome cache and the decision
//!   procedure that accepts, adopts, moderates or aborts.
//! - [`criteria`] — the four error criteria (NaN, physical admissibility,
//!   time-step change, smoothness evolution) and their rigorous/lazy
//!   combination.
//! - [`solver`] — the explicit nodal-DG Euler stepper supplying the per-cell
//!   predictor task, local admissible time-step sizes and the corrector.
//! - [`fault`] — deterministic value-error injection into predictor
//!   outcomes.
//! - [`harness`] — the discrete-event simulator running two biased-scheduler
//!   replica teams that share task outcomes over a latency-configurable
//!   channel.
//! - [`config`] / [`campaign`] — run configuration, sensitivity and
//!   performance/sensitivity trade-off campaigns with CSV output.

pub mod basis;
pub mod campaign;
pub mod config;
pub mod criteria;
pub mod euler;
pub mod fault;
pub mod harness;
pub mod polynomial;
pub mod protocol;
pub mod solver;

pub use config::SimConfig;
pub use harness::{run_simulation, RunMetrics, RunOutput, RunStatus, SimError};
pub use polynomial::{CellPolynomial, PolyShape, ShapeMismatch};
pub use protocol::{
    dubiosity, more_likely, outcomes_agree, resolve, CriteriaVector, Likelihood, Mode,
    OutcomeCache, TaskId, TaskOutcome, Team, Tolerances, Verdict,
};
