//! Task/outcome abstractions, dubiosity indicators, the likelihood cascade,
//! the outcome cache and the decision procedure that accepts, adopts,
//! moderates or aborts when two teams compare task outcomes.
//!
//! Everything here is pure or acts on an explicitly passed cache value, so
//! operations can be driven from a deterministic single-threaded event loop
//! or shared across task workers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polynomial::{CellPolynomial, ShapeMismatch};

/// Guards the relative-difference denominator in [`outcomes_agree`]: two
/// exact zeros compare equal instead of dividing 0/0.
pub const AGREEMENT_DENOM_FLOOR: f64 = 1e-300;

/// Identifies one task instance: the time step being advanced and the mesh
/// cell the task belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TaskId {
    pub step: u32,
    pub cell: u32,
}

impl TaskId {
    pub fn new(step: u32, cell: u32) -> Self {
        Self { step, cell }
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.step, self.cell)
    }
}

/// One of the two replica teams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Team {
    A,
    B,
}

impl Team {
    pub const BOTH: [Team; 2] = [Team::A, Team::B];

    pub fn index(self) -> usize {
        match self {
            Team::A => 0,
            Team::B => 1,
        }
    }

    pub fn other(self) -> Team {
        match self {
            Team::A => Team::B,
            Team::B => Team::A,
        }
    }
}

impl std::fmt::Display for Team {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Team::A => "A",
            Team::B => "B",
        })
    }
}

/// How the per-outcome error criteria combine into the dubiosity indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Evaluate every criterion; dubious if any fires.
    Rigorous,
    /// Evaluate the cheap criteria first; the derivative criterion only runs
    /// (and must also fire) when one of them fired.
    Lazy,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Rigorous => "rigorous",
            Mode::Lazy => "lazy",
        })
    }
}

/// Tolerances against which outcomes and criteria are compared.
///
/// `tol_y` bounds the relative coefficient difference two teams may exhibit
/// before their outcomes count as disagreeing; `tol_dt` and `tol_der` are the
/// violation thresholds for the time-step and smoothness criteria. All
/// comparisons against tolerances are strict (`>`), so a tolerance of zero
/// flags any nonzero criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol_y: f64,
    pub tol_dt: f64,
    pub tol_der: f64,
    pub mode: Mode,
}

impl Tolerances {
    pub fn strict() -> Self {
        Self { tol_y: 0.0, tol_dt: 0.0, tol_der: 0.0, mode: Mode::Rigorous }
    }
}

/// The four error-criterion values of one task outcome, in cascade order.
///
/// `f_nan` and `f_pa` are boolean-valued (0 or +inf). `f_der` and `f_dt` are
/// non-negative relative changes; non-finite intermediate values are mapped
/// to +inf by the evaluation pipeline so the vector stays totally ordered.
/// When the lazy pre-filter did not fire, `f_der` is 0 by convention and
/// `f_der_evaluated` is false.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaVector {
    pub f_nan: f64,
    pub f_pa: f64,
    pub f_der: f64,
    pub f_dt: f64,
    pub f_der_evaluated: bool,
}

impl CriteriaVector {
    pub fn zero() -> Self {
        Self { f_nan: 0.0, f_pa: 0.0, f_der: 0.0, f_dt: 0.0, f_der_evaluated: false }
    }

    /// Values in cascade priority order: f_nan, f_pa, f_der, f_dt.
    pub fn cascade(&self) -> [f64; 4] {
        [self.f_nan, self.f_pa, self.f_der, self.f_dt]
    }

    /// Checks the structural invariants of the vector.
    pub fn is_valid(&self) -> bool {
        let boolean = |v: f64| v == 0.0 || v == f64::INFINITY;
        boolean(self.f_nan)
            && boolean(self.f_pa)
            && self.f_der >= 0.0
            && self.f_dt >= 0.0
            && (self.f_der_evaluated || self.f_der == 0.0)
    }
}

/// Dubiosity indicator: does this criteria vector demand cross-team
/// validation before the outcome may be trusted?
///
/// Rigorous: `(f_nan > 0) || (f_pa > 0) || (f_der > tol_der) || (f_dt > tol_dt)`.
/// Lazy: `[(f_nan > 0) || (f_pa > 0) || (f_dt > tol_dt)] && (f_der > tol_der)`,
/// where an unevaluated `f_der` is 0 and therefore never fires.
pub fn dubiosity(criteria: &CriteriaVector, tol: &Tolerances) -> bool {
    let cheap =
        criteria.f_nan > 0.0 || criteria.f_pa > 0.0 || criteria.f_dt > tol.tol_dt;
    match tol.mode {
        Mode::Rigorous => cheap || criteria.f_der > tol.tol_der,
        Mode::Lazy => cheap && criteria.f_der > tol.tol_der,
    }
}

/// Which of two compared outcomes is more likely correct.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Likelihood {
    A,
    B,
    Undecided,
}

/// Prioritized likelihood cascade over the criteria (f_nan, f_pa, f_der,
/// f_dt): at the first index where the values differ, the smaller one wins.
/// Criteria checked earlier gate the later ones; componentwise-equal vectors
/// are undecided.
pub fn more_likely(a: &CriteriaVector, b: &CriteriaVector) -> Likelihood {
    for (va, vb) in a.cascade().into_iter().zip(b.cascade()) {
        if va < vb {
            return Likelihood::A;
        }
        if vb < va {
            return Likelihood::B;
        }
    }
    Likelihood::Undecided
}

/// Whether two payloads agree within the relative tolerance `tol_y`.
///
/// The per-coefficient relative difference is `|a - b| / max(|a|, |b|,
/// floor)`; `tol_y = 0` therefore demands value-identical payloads. Any NaN
/// coefficient makes agreement false — NaN never silently equals NaN.
pub fn outcomes_agree(
    a: &CellPolynomial,
    b: &CellPolynomial,
    tol_y: f64,
) -> Result<bool, ShapeMismatch> {
    a.same_shape(b)?;
    for (ca, cb) in a.coefficients().iter().zip(b.coefficients()) {
        let scale = ca.abs().max(cb.abs()).max(AGREEMENT_DENOM_FLOOR);
        let rel = (ca - cb).abs() / scale;
        // Written so NaN anywhere fails the comparison.
        if !(rel <= tol_y) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The decision produced when local and remote outcomes are weighed against
/// each other.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Keep the locally computed outcome.
    AcceptLocal,
    /// Discard the local outcome (if any) and install the remote one.
    AdoptRemote,
    /// The outcomes disagree but the criteria cannot rank them: keep the
    /// local outcome and record the warning — an uncorrectable silent error.
    ModerateKeepLocal { warning: String },
    /// Both outcomes carry an infinite criterion: a hard or intrinsic
    /// algorithmic error. The run must terminate immediately.
    Fatal { reason: String },
}

impl Verdict {
    pub fn kind_str(&self) -> &'static str {
        match self {
            Verdict::AcceptLocal => "AcceptLocal",
            Verdict::AdoptRemote => "AdoptRemote",
            Verdict::ModerateKeepLocal { .. } => "ModerateKeepLocal",
            Verdict::Fatal { .. } => "Fatal",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ResolveError {
    /// The remote outcome is dubious and no local outcome exists: the
    /// harness must run the task locally before a decision is possible.
    #[error("remote outcome for {0} is dubious; local computation required")]
    NeedLocalComputation(TaskId),
    /// The local outcome is dubious and no remote outcome exists yet: the
    /// caller should keep polling (check task) instead of deciding.
    #[error("local outcome for {0} is dubious; remote outcome required")]
    NeedRemoteOutcome(TaskId),
    #[error("resolve called without any outcome")]
    NoOutcome,
    #[error(transparent)]
    Shape(#[from] ShapeMismatch),
}

/// A task outcome: the payload polynomial, the admissible local time-step
/// size derived from it, its criteria vector and the dubiosity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub id: TaskId,
    pub payload: CellPolynomial,
    pub local_dt: f64,
    pub criteria: CriteriaVector,
    pub dubious: bool,
}

/// Decision procedure over the locally computed and remotely received
/// outcome of one task.
///
/// Both-present comparisons run in this order: the double-infinity fatal
/// check, payload agreement, then the likelihood cascade; cascade ties on
/// disagreeing payloads moderate by keeping the local outcome.
pub fn resolve(
    local: Option<&TaskOutcome>,
    remote: Option<&TaskOutcome>,
    tol: &Tolerances,
) -> Result<Verdict, ResolveError> {
    match (local, remote) {
        (None, None) => Err(ResolveError::NoOutcome),
        (Some(l), None) => {
            if l.dubious {
                Err(ResolveError::NeedRemoteOutcome(l.id))
            } else {
                Ok(Verdict::AcceptLocal)
            }
        }
        (None, Some(r)) => {
            if r.dubious {
                Err(ResolveError::NeedLocalComputation(r.id))
            } else {
                Ok(Verdict::AdoptRemote)
            }
        }
        (Some(l), Some(r)) => {
            let both_inf = (l.criteria.f_nan == f64::INFINITY
                && r.criteria.f_nan == f64::INFINITY)
                || (l.criteria.f_pa == f64::INFINITY && r.criteria.f_pa == f64::INFINITY);
            if both_inf {
                return Ok(Verdict::Fatal {
                    reason: format!(
                        "task {}: both teams report an infinite criterion (hard or intrinsic algorithmic error)",
                        l.id
                    ),
                });
            }
            if outcomes_agree(&l.payload, &r.payload, tol.tol_y)? {
                return Ok(Verdict::AcceptLocal);
            }
            match more_likely(&l.criteria, &r.criteria) {
                Likelihood::A => Ok(Verdict::AcceptLocal),
                Likelihood::B => Ok(Verdict::AdoptRemote),
                Likelihood::Undecided => Ok(Verdict::ModerateKeepLocal {
                    warning: format!(
                        "task {}: silent error could not be corrected (identical criteria, disagreeing payloads)",
                        l.id
                    ),
                }),
            }
        }
    }
}

/// Where a cached outcome came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Local,
    Remote,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("duplicate {origin:?} cache entry for task {id}")]
pub struct DuplicateEntry {
    pub id: TaskId,
    pub origin: Origin,
}

#[derive(Debug, Default, Clone)]
struct CacheSlot {
    local: Option<TaskOutcome>,
    remote: Option<TaskOutcome>,
}

/// Per-team cache of task outcomes awaiting a decision: locally computed
/// dubious results and outcomes sent in by the counterpart team.
#[derive(Debug, Default, Clone)]
pub struct OutcomeCache {
    entries: BTreeMap<TaskId, CacheSlot>,
}

impl OutcomeCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts an outcome; at most one entry per (task, origin).
    pub fn insert(&mut self, origin: Origin, outcome: TaskOutcome) -> Result<(), DuplicateEntry> {
        let slot = self.entries.entry(outcome.id).or_default();
        let place = match origin {
            Origin::Local => &mut slot.local,
            Origin::Remote => &mut slot.remote,
        };
        if place.is_some() {
            return Err(DuplicateEntry { id: outcome.id, origin });
        }
        *place = Some(outcome);
        Ok(())
    }

    pub fn local(&self, id: TaskId) -> Option<&TaskOutcome> {
        self.entries.get(&id).and_then(|s| s.local.as_ref())
    }

    pub fn remote(&self, id: TaskId) -> Option<&TaskOutcome> {
        self.entries.get(&id).and_then(|s| s.remote.as_ref())
    }

    /// Removes and returns the (local, remote) pair for a task.
    pub fn take(&mut self, id: TaskId) -> (Option<TaskOutcome>, Option<TaskOutcome>) {
        match self.entries.remove(&id) {
            Some(slot) => (slot.local, slot.remote),
            None => (None, None),
        }
    }

    /// Discards every entry whose step is older than `current_step - 1`
    /// (results that crossed in the network). Returns the discarded ids, one
    /// per cached outcome.
    pub fn gc(&mut self, current_step: u32) -> Vec<(TaskId, Origin)> {
        let horizon = current_step.saturating_sub(1);
        let stale: Vec<TaskId> =
            self.entries.range(..TaskId::new(horizon, 0)).map(|(id, _)| *id).collect();
        let mut discarded = Vec::new();
        for id in stale {
            let slot = self.entries.remove(&id).expect("stale key");
            if slot.local.is_some() {
                discarded.push((id, Origin::Local));
            }
            if slot.remote.is_some() {
                discarded.push((id, Origin::Remote));
            }
        }
        discarded
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polynomial::PolyShape;

    fn payload_with(coeffs: &[f64]) -> CellPolynomial {
        let shape = PolyShape::euler(2, 1);
        let mut all = vec![1.0; shape.coefficient_count()];
        all[..coeffs.len()].copy_from_slice(coeffs);
        CellPolynomial::from_coefficients(shape, all)
    }

    fn outcome(id: TaskId, payload: CellPolynomial, criteria: CriteriaVector, tol: &Tolerances) -> TaskOutcome {
        let dubious = dubiosity(&criteria, tol);
        TaskOutcome { id, payload, local_dt: 0.01, criteria, dubious }
    }

    fn criteria(f_nan: f64, f_pa: f64, f_der: f64, f_dt: f64) -> CriteriaVector {
        CriteriaVector { f_nan, f_pa, f_der, f_dt, f_der_evaluated: true }
    }

    #[test]
    fn nan_always_dubious_rigorous() {
        let c = criteria(f64::INFINITY, 0.0, 0.0, 0.0);
        assert!(dubiosity(&c, &Tolerances::strict()));
    }

    #[test]
    fn zero_criteria_not_dubious_at_zero_tolerance() {
        let c = criteria(0.0, 0.0, 0.0, 0.0);
        assert!(!dubiosity(&c, &Tolerances::strict()));
    }

    #[test]
    fn lazy_prefilter_fires_but_der_below_tolerance() {
        let c = criteria(0.0, 0.0, 50.0, 0.05);
        let tol = Tolerances { tol_y: 0.0, tol_dt: 0.02, tol_der: 100.0, mode: Mode::Lazy };
        assert!(!dubiosity(&c, &tol));
    }

    #[test]
    fn cascade_first_stage_wins() {
        let a = criteria(0.0, 0.0, 0.0, 0.0);
        let b = criteria(f64::INFINITY, 0.0, 0.0, 0.0);
        assert_eq!(more_likely(&a, &b), Likelihood::A);
    }

    #[test]
    fn cascade_first_difference_at_der() {
        let a = criteria(0.0, 0.0, 5.0, 0.9);
        let b = criteria(0.0, 0.0, 2.0, 0.1);
        assert_eq!(more_likely(&a, &b), Likelihood::B);
    }

    #[test]
    fn cascade_identity_undecided() {
        let a = criteria(0.0, f64::INFINITY, 3.0, 0.2);
        assert_eq!(more_likely(&a, &a), Likelihood::Undecided);
    }

    #[test]
    fn agreement_identity_at_zero_tolerance() {
        let a = payload_with(&[1.0, 2.0, -3.0]);
        assert!(outcomes_agree(&a, &a.clone(), 0.0).unwrap());
    }

    #[test]
    fn agreement_relative_difference_exceeds_tolerance() {
        // Relative difference 1e-10 / (1 + 1e-10) against tol_y = 1e-12.
        let a = payload_with(&[1.0]);
        let b = payload_with(&[1.0 + 1e-10]);
        assert!(!outcomes_agree(&a, &b, 1e-12).unwrap());
        assert!(outcomes_agree(&a, &b, 1e-9).unwrap());
    }

    #[test]
    fn agreement_nan_never_agrees() {
        let a = payload_with(&[f64::NAN]);
        assert!(!outcomes_agree(&a, &a.clone(), f64::INFINITY).unwrap());
    }

    #[test]
    fn agreement_two_exact_zeros_agree() {
        let a = payload_with(&[0.0]);
        let b = payload_with(&[0.0]);
        assert!(outcomes_agree(&a, &b, 0.0).unwrap());
    }

    #[test]
    fn agreement_shape_mismatch_is_an_error() {
        let a = CellPolynomial::zeros(PolyShape::euler(2, 1));
        let b = CellPolynomial::zeros(PolyShape::euler(3, 1));
        assert!(outcomes_agree(&a, &b, 0.0).is_err());
    }

    #[test]
    fn resolve_local_only_non_dubious_accepts() {
        let tol = Tolerances::strict();
        let l = outcome(TaskId::new(0, 0), payload_with(&[1.0]), criteria(0.0, 0.0, 0.0, 0.0), &tol);
        assert_eq!(resolve(Some(&l), None, &tol).unwrap(), Verdict::AcceptLocal);
    }

    #[test]
    fn resolve_remote_dubious_demands_local_computation() {
        let tol = Tolerances::strict();
        let r = outcome(TaskId::new(3, 7), payload_with(&[1.0]), criteria(0.0, 0.0, 1.0, 0.0), &tol);
        assert!(r.dubious);
        assert_eq!(
            resolve(None, Some(&r), &tol),
            Err(ResolveError::NeedLocalComputation(TaskId::new(3, 7)))
        );
    }

    #[test]
    fn resolve_bit_identical_outcomes_accept_local() {
        let tol = Tolerances::strict();
        let l = outcome(TaskId::new(0, 0), payload_with(&[1.5, 2.5]), criteria(0.0, 0.0, 1.0, 0.0), &tol);
        let r = outcome(TaskId::new(0, 0), payload_with(&[1.5, 2.5]), criteria(0.0, 0.0, 1.0, 0.0), &tol);
        assert_eq!(resolve(Some(&l), Some(&r), &tol).unwrap(), Verdict::AcceptLocal);
    }

    #[test]
    fn resolve_cascade_prefers_remote_with_smaller_der() {
        // First differing criterion is f_der and the remote value is smaller,
        // enumerated independently by the cascade oracle below.
        let tol = Tolerances::strict();
        let cl = criteria(0.0, 0.0, 7.0, 0.0);
        let cr = criteria(0.0, 0.0, 0.01, 0.0);
        let l = outcome(TaskId::new(1, 2), payload_with(&[1.0]), cl, &tol);
        let r = outcome(TaskId::new(1, 2), payload_with(&[2.0]), cr, &tol);

        let mut oracle = Likelihood::Undecided;
        for (va, vb) in cl.cascade().into_iter().zip(cr.cascade()) {
            if va != vb {
                oracle = if va < vb { Likelihood::A } else { Likelihood::B };
                break;
            }
        }
        assert_eq!(oracle, Likelihood::B);
        assert_eq!(resolve(Some(&l), Some(&r), &tol).unwrap(), Verdict::AdoptRemote);
    }

    #[test]
    fn resolve_double_infinity_is_fatal_even_for_agreeing_payloads() {
        let tol = Tolerances::strict();
        let c = criteria(f64::INFINITY, 0.0, 1.0, 0.5);
        let l = outcome(TaskId::new(0, 0), payload_with(&[2.0]), c, &tol);
        let r = outcome(TaskId::new(0, 0), payload_with(&[2.0]), c, &tol);
        assert!(matches!(resolve(Some(&l), Some(&r), &tol).unwrap(), Verdict::Fatal { .. }));
    }

    #[test]
    fn resolve_tie_with_disagreement_moderates() {
        let tol = Tolerances::strict();
        let c = criteria(0.0, 0.0, 3.0, 0.1);
        let l = outcome(TaskId::new(5, 1), payload_with(&[1.0]), c, &tol);
        let r = outcome(TaskId::new(5, 1), payload_with(&[4.0]), c, &tol);
        match resolve(Some(&l), Some(&r), &tol).unwrap() {
            Verdict::ModerateKeepLocal { warning } => {
                assert!(warning.contains("silent error could not be corrected"));
            }
            v => panic!("expected moderation, got {v:?}"),
        }
    }

    #[test]
    fn cache_insert_take_roundtrip() {
        let tol = Tolerances::strict();
        let id = TaskId::new(2, 4);
        let mut cache = OutcomeCache::new();
        let l = outcome(id, payload_with(&[1.0]), criteria(0.0, 0.0, 1.0, 0.0), &tol);
        let r = outcome(id, payload_with(&[1.0]), criteria(0.0, 0.0, 1.0, 0.0), &tol);
        cache.insert(Origin::Local, l).unwrap();
        cache.insert(Origin::Remote, r).unwrap();
        let (l2, r2) = cache.take(id);
        assert!(l2.is_some() && r2.is_some());
        assert!(cache.is_empty());
    }

    #[test]
    fn cache_duplicate_insert_rejected() {
        let tol = Tolerances::strict();
        let id = TaskId::new(0, 0);
        let mut cache = OutcomeCache::new();
        let o = outcome(id, payload_with(&[1.0]), criteria(0.0, 0.0, 0.0, 0.0), &tol);
        cache.insert(Origin::Local, o.clone()).unwrap();
        assert_eq!(
            cache.insert(Origin::Local, o),
            Err(DuplicateEntry { id, origin: Origin::Local })
        );
    }

    #[test]
    fn cache_gc_discards_stale_entries() {
        let tol = Tolerances::strict();
        let mut cache = OutcomeCache::new();
        let old = outcome(TaskId::new(2, 3), payload_with(&[1.0]), criteria(0.0, 0.0, 0.0, 0.0), &tol);
        let fresh = outcome(TaskId::new(4, 3), payload_with(&[1.0]), criteria(0.0, 0.0, 0.0, 0.0), &tol);
        cache.insert(Origin::Remote, old).unwrap();
        cache.insert(Origin::Remote, fresh).unwrap();
        let discarded = cache.gc(5);
        assert_eq!(discarded, vec![(TaskId::new(2, 3), Origin::Remote)]);
        assert_eq!(cache.len(), 1);
        // Entries at exactly current - 1 survive.
        assert!(cache.remote(TaskId::new(4, 3)).is_some());
    }
}
