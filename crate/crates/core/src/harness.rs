//! Deterministic discrete-event simulator of two replica teams executing the
//! per-step task graph with opposite-bias schedulers, outcome sharing over a
//! latency-configurable channel, and self-rescheduling check tasks for
//! dubious outcomes.
//!
//! Each team runs as an interleaved state machine under one event clock.
//! Costs are durations: a team is busy for the simulated cost of the work
//! item it executes, messages arrive `latency` (plus seeded jitter) after
//! they are sent, and at equal timestamps message arrivals are processed
//! before team wake-ups. A team never blocks on its counterpart: dubious
//! outcomes park in the cache behind a low-priority check task while the
//! team drains every other ready task.

use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::SecondDerivative;
use crate::config::SimConfig;
use crate::criteria::{evaluate, CriteriaConfig};
use crate::fault::{FaultInjector, InjectionRecord};
use crate::polynomial::{CellPolynomial, PolyShape};
use crate::protocol::{
    dubiosity, resolve, CriteriaVector, Origin, OutcomeCache, TaskId, TaskOutcome, Team,
    Tolerances, Verdict,
};
use crate::solver::{
    admissible_dt, corrector, initial_condition, predictor_task, DgOperators, SolverState,
};

/// Serialized task outcome traveling between team counterparts.
#[derive(Debug, Clone, PartialEq)]
pub struct TeamMessage {
    pub sender: Team,
    pub outcome: TaskOutcome,
    pub send_time: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum WireError {
    #[error("message truncated at byte {0}")]
    Truncated(usize),
    #[error("coefficient count {got} does not match the configured shape ({expected})")]
    CoefficientCount { got: usize, expected: usize },
    #[error("unknown team byte {0}")]
    Team(u8),
}

/// Wire format: header (team: 1 byte, step: u32, cell: u32, dubious: 1 byte),
/// the four criteria as little-endian f64 in cascade order (infinities as
/// IEEE +inf), local_dt as f64, coefficient count as u32, then the
/// coefficients.
pub fn encode_message(msg: &TeamMessage) -> Vec<u8> {
    let o = &msg.outcome;
    let coeffs = o.payload.coefficients();
    let mut buf = Vec::with_capacity(54 + 8 * coeffs.len());
    buf.push(msg.sender.index() as u8);
    buf.extend_from_slice(&o.id.step.to_le_bytes());
    buf.extend_from_slice(&o.id.cell.to_le_bytes());
    buf.push(o.dubious as u8);
    for v in o.criteria.cascade() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&o.local_dt.to_le_bytes());
    buf.extend_from_slice(&(coeffs.len() as u32).to_le_bytes());
    for c in coeffs {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    buf
}

/// Decodes a wire message against the run's payload shape. The wire carries
/// no `f_der_evaluated` flag; a zero `f_der` is the not-evaluated convention,
/// which preserves dubiosity and cascade semantics.
pub fn decode_message(bytes: &[u8], shape: PolyShape) -> Result<TeamMessage, WireError> {
    let mut pos = 0usize;
    let take = |pos: &mut usize, n: usize| -> Result<usize, WireError> {
        let start = *pos;
        if start + n > bytes.len() {
            return Err(WireError::Truncated(start));
        }
        *pos += n;
        Ok(start)
    };
    let u8_at = |p: usize| bytes[p];
    let u32_at = |p: usize| u32::from_le_bytes(bytes[p..p + 4].try_into().unwrap());
    let f64_at = |p: usize| f64::from_le_bytes(bytes[p..p + 8].try_into().unwrap());

    let team = match u8_at(take(&mut pos, 1)?) {
        0 => Team::A,
        1 => Team::B,
        t => return Err(WireError::Team(t)),
    };
    let step = u32_at(take(&mut pos, 4)?);
    let cell = u32_at(take(&mut pos, 4)?);
    let dubious = u8_at(take(&mut pos, 1)?) != 0;
    let f_nan = f64_at(take(&mut pos, 8)?);
    let f_pa = f64_at(take(&mut pos, 8)?);
    let f_der = f64_at(take(&mut pos, 8)?);
    let f_dt = f64_at(take(&mut pos, 8)?);
    let local_dt = f64_at(take(&mut pos, 8)?);
    let count = u32_at(take(&mut pos, 4)?) as usize;
    if count != shape.coefficient_count() {
        return Err(WireError::CoefficientCount { got: count, expected: shape.coefficient_count() });
    }
    let mut coeffs = Vec::with_capacity(count);
    for _ in 0..count {
        coeffs.push(f64_at(take(&mut pos, 8)?));
    }
    Ok(TeamMessage {
        sender: team,
        outcome: TaskOutcome {
            id: TaskId::new(step, cell),
            payload: CellPolynomial::from_coefficients(shape, coeffs),
            local_dt,
            criteria: CriteriaVector {
                f_nan,
                f_pa,
                f_der,
                f_dt,
                f_der_evaluated: f_der != 0.0,
            },
            dubious,
        },
        send_time: 0.0,
    })
}

/// Per-run counters backing the campaign metrics.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub tasks_computed: [u64; 2],
    pub tasks_adopted: [u64; 2],
    pub checks_performed: u64,
    pub corrections: u64,
    pub moderations: u64,
    pub fatals: u64,
    pub gc_discards: u64,
    pub cost_per_team: [f64; 2],
    /// Average simulated cost per team.
    pub simulated_cost: f64,
}

impl RunMetrics {
    /// Fraction of a team's tasks adopted from the partner instead of
    /// computed.
    pub fn sharing_ratio(&self, team: Team) -> f64 {
        let i = team.index();
        let total = self.tasks_computed[i] + self.tasks_adopted[i];
        if total == 0 {
            0.0
        } else {
            self.tasks_adopted[i] as f64 / total as f64
        }
    }

    pub fn mean_sharing_ratio(&self) -> f64 {
        0.5 * (self.sharing_ratio(Team::A) + self.sharing_ratio(Team::B))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RunStatus {
    Completed,
    /// Both teams reported an infinite criterion for the same task.
    Fatal { step: u32, cell: u32, reason: String },
}

impl RunStatus {
    pub fn is_fatal(&self) -> bool {
        matches!(self, RunStatus::Fatal { .. })
    }
}

/// Result of one two-team run.
#[derive(Debug)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub status: RunStatus,
    /// Final solver states of team A and team B.
    pub final_states: [SolverState; 2],
    /// Injection log with `detected` filled in; `corrected` is scored by the
    /// campaign layer against the fault-free baseline.
    pub injections: Vec<InjectionRecord>,
}

#[derive(Debug, Error)]
pub enum SimError {
    /// A check task exhausted its re-schedule bound, or the event queue ran
    /// dry while tasks were still unresolved: the counterpart result can
    /// never arrive.
    #[error("team {team} starved waiting on task {task} after {spins} re-schedules")]
    Starvation { team: Team, task: TaskId, spins: u64 },
    /// Invariant violation inside the harness (duplicate cache entries,
    /// shape mismatches, missing verdicts).
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

enum EventKind {
    Arrival { dest: Team, bytes: Vec<u8> },
    Wake { team: Team },
}

struct Event {
    time: f64,
    /// Arrivals sort before wake-ups at equal times.
    rank: u8,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.rank == other.rank && self.seq == other.seq
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Reversed: BinaryHeap is a max-heap, we want the earliest event.
        let a = (other.time, other.rank, other.seq);
        let b = (self.time, self.rank, self.seq);
        a.partial_cmp(&b).expect("event times are finite")
    }
}

struct CheckTask {
    id: TaskId,
    spins: u64,
}

struct TeamRunner {
    team: Team,
    /// Forward bias pops the lowest cell index first, reverse the highest.
    forward: bool,
    now: f64,
    idle: bool,
    done: bool,
    solver: SolverState,
    remaining: BTreeSet<u32>,
    checks: VecDeque<CheckTask>,
    cache: OutcomeCache,
    approved: Vec<Option<(CellPolynomial, f64)>>,
    resolved: usize,
    cost: f64,
    computed: u64,
    adopted: u64,
}

impl TeamRunner {
    fn new(team: Team, solver: SolverState, cells: usize) -> Self {
        Self {
            team,
            forward: team == Team::A,
            now: 0.0,
            idle: false,
            done: false,
            solver,
            remaining: (0..cells as u32).collect(),
            checks: VecDeque::new(),
            cache: OutcomeCache::new(),
            approved: vec![None; cells],
            resolved: 0,
            cost: 0.0,
            computed: 0,
            adopted: 0,
        }
    }

    fn pop_cell(&mut self) -> Option<u32> {
        let cell = if self.forward {
            *self.remaining.iter().next()?
        } else {
            *self.remaining.iter().next_back()?
        };
        self.remaining.remove(&cell);
        Some(cell)
    }
}

/// One simulation run under the deterministic event loop.
pub struct Simulation<'a> {
    cfg: &'a SimConfig,
    ops: DgOperators,
    d2: SecondDerivative,
    criteria_cfg: CriteriaConfig,
    shape: PolyShape,
    teams: [TeamRunner; 2],
    events: BinaryHeap<Event>,
    seq: u64,
    injector: FaultInjector,
    jitter_rng: ChaCha8Rng,
    metrics: RunMetrics,
    status: RunStatus,
    fatal: bool,
    trace: Vec<u8>,
}

impl<'a> Simulation<'a> {
    pub fn new(cfg: &'a SimConfig) -> Self {
        let ops = DgOperators::new(cfg.solver.order);
        let d2 = SecondDerivative::new(cfg.solver.order + 1, cfg.grid.cell_width);
        let shape = PolyShape::euler(cfg.solver.order, cfg.grid.dim);
        let tol = Tolerances { mode: cfg.effective_mode(), ..cfg.tolerances };
        let mut criteria_cfg = CriteriaConfig::new(cfg.solver.gamma, cfg.grid.cell_width, tol);
        criteria_cfg.denom_floor = cfg.denom_floor;
        criteria_cfg.set = cfg.criterion_set;
        criteria_cfg.der_scope = cfg.der_scope;

        let initial = initial_condition(cfg.initial, &cfg.grid, &cfg.solver, &ops);
        let cells = cfg.grid.total_cells();
        let teams =
            [TeamRunner::new(Team::A, initial.clone(), cells), TeamRunner::new(Team::B, initial, cells)];
        let injector = FaultInjector::new(&cfg.faults, cfg.steps, cells as u32, shape);
        let jitter_rng =
            ChaCha8Rng::seed_from_u64(crate::fault::spread_seed(cfg.channel.jitter_seed));

        Self {
            cfg,
            ops,
            d2,
            criteria_cfg,
            shape,
            teams,
            events: BinaryHeap::new(),
            seq: 0,
            injector,
            jitter_rng,
            metrics: RunMetrics::default(),
            status: RunStatus::Completed,
            fatal: false,
            trace: Vec::new(),
        }
    }

    fn push_event(&mut self, time: f64, kind: EventKind) {
        let rank = match kind {
            EventKind::Arrival { .. } => 0,
            EventKind::Wake { .. } => 1,
        };
        self.events.push(Event { time, rank, seq: self.seq, kind });
        self.seq += 1;
    }

    fn trace_line(&mut self, time: f64, team: Team, kind: &str, id: TaskId, detail: &str) {
        use std::io::Write;
        if detail.is_empty() {
            let _ = writeln!(self.trace, "{time:.4} {team} {kind} {} {}", id.step, id.cell);
        } else {
            let _ =
                writeln!(self.trace, "{time:.4} {team} {kind} {} {} {detail}", id.step, id.cell);
        }
    }

    /// Runs the whole simulation and returns metrics, final fields and the
    /// injection log. The event trace accumulates in `trace`.
    pub fn run(mut self) -> Result<(RunOutput, Vec<u8>), SimError> {
        self.push_event(0.0, EventKind::Wake { team: Team::A });
        self.push_event(0.0, EventKind::Wake { team: Team::B });

        while !self.fatal && !(self.teams[0].done && self.teams[1].done) {
            let Some(event) = self.events.pop() else { break };
            match event.kind {
                EventKind::Arrival { dest, bytes } => self.on_arrival(event.time, dest, &bytes)?,
                EventKind::Wake { team } => self.on_wake(event.time, team)?,
            }
        }

        if !self.fatal && !(self.teams[0].done && self.teams[1].done) {
            // Queue exhausted with unresolved work: the polling check task
            // can never be satisfied.
            for runner in &self.teams {
                if let Some(check) = runner.checks.front() {
                    return Err(SimError::Starvation {
                        team: runner.team,
                        task: check.id,
                        spins: check.spins,
                    });
                }
            }
            return Err(SimError::Protocol("event queue exhausted with unresolved cells".into()));
        }

        for runner in &self.teams {
            let i = runner.team.index();
            self.metrics.tasks_computed[i] = runner.computed;
            self.metrics.tasks_adopted[i] = runner.adopted;
            self.metrics.cost_per_team[i] = runner.cost;
            if !self.fatal {
                debug_assert_eq!(
                    runner.computed + runner.adopted,
                    self.cfg.steps as u64 * self.cfg.grid.total_cells() as u64,
                    "every task ends computed or adopted"
                );
            }
        }
        self.metrics.simulated_cost =
            0.5 * (self.metrics.cost_per_team[0] + self.metrics.cost_per_team[1]);
        debug_assert!(self.metrics.corrections <= self.metrics.checks_performed);

        let [a, b] = self.teams;
        Ok((
            RunOutput {
                metrics: self.metrics,
                status: self.status,
                final_states: [a.solver, b.solver],
                injections: self.injector.log().to_vec(),
            },
            self.trace,
        ))
    }

    fn on_arrival(&mut self, time: f64, dest: Team, bytes: &[u8]) -> Result<(), SimError> {
        let msg = decode_message(bytes, self.shape)
            .map_err(|e| SimError::Protocol(format!("wire decode failed: {e}")))?;
        let id = msg.outcome.id;
        let runner = &mut self.teams[dest.index()];

        // Outcomes for tasks this team already settled crossed in the
        // network; discard them.
        let crossed = id.step < runner.solver.step
            || (id.step == runner.solver.step
                && runner.approved[id.cell as usize].is_some())
            || runner.done;
        if crossed {
            self.metrics.gc_discards += 1;
            let now = runner.now.max(time);
            self.trace_line(now, dest, "GC", id, "crossed");
            return Ok(());
        }

        runner
            .cache
            .insert(Origin::Remote, msg.outcome)
            .map_err(|e| SimError::Protocol(e.to_string()))?;
        if runner.idle {
            runner.idle = false;
            let wake = runner.now.max(time);
            self.push_event(wake, EventKind::Wake { team: dest });
        }
        Ok(())
    }

    fn on_wake(&mut self, time: f64, team: Team) -> Result<(), SimError> {
        let i = team.index();
        if self.teams[i].done {
            return Ok(());
        }
        self.teams[i].now = self.teams[i].now.max(time);
        self.teams[i].idle = false;

        loop {
            if self.fatal {
                return Ok(());
            }
            // Compute/adopt decisions first, in bias order.
            if let Some(cell) = self.teams[i].pop_cell() {
                if self.execute_cell(team, cell)? {
                    // Timed work: yield and wake up when it completes.
                    let now = self.teams[i].now;
                    self.push_event(now, EventKind::Wake { team });
                    return Ok(());
                }
                continue;
            }
            // Low-priority check tasks: poll each at most once per wake.
            let pending = self.teams[i].checks.len();
            let mut progressed = false;
            for _ in 0..pending {
                let Some(mut check) = self.teams[i].checks.pop_front() else { break };
                if self.teams[i].cache.remote(check.id).is_some() {
                    self.resolve_check(team, check.id)?;
                    progressed = true;
                    break;
                }
                check.spins += 1;
                self.trace_line(self.teams[i].now, team, "CHECK_SPAWN", check.id, "rescheduled");
                if check.spins > self.cfg.starvation_bound {
                    return Err(SimError::Starvation { team, task: check.id, spins: check.spins });
                }
                self.teams[i].checks.push_back(check);
            }
            if progressed {
                let now = self.teams[i].now;
                self.push_event(now, EventKind::Wake { team });
                return Ok(());
            }
            if !self.teams[i].checks.is_empty() {
                // Nothing resolvable; sleep until the next message arrives.
                self.teams[i].idle = true;
                return Ok(());
            }
            // No cells, no checks: the step is complete.
            debug_assert_eq!(self.teams[i].resolved, self.cfg.grid.total_cells());
            self.complete_step(team)?;
            if self.teams[i].done {
                return Ok(());
            }
        }
    }

    /// Handles the pop of one cell task. Returns true if simulated time
    /// advanced (a computation happened), false for zero-cost adoption.
    fn execute_cell(&mut self, team: Team, cell: u32) -> Result<bool, SimError> {
        let i = team.index();
        let step = self.teams[i].solver.step;
        let id = TaskId::new(step, cell);
        let forced = self.injector.forces_compute(team, id);

        if !forced {
            let adopt = match self.teams[i].cache.remote(id) {
                Some(remote) if !remote.dubious => true,
                _ => false,
            };
            if adopt {
                let (local, remote) = self.teams[i].cache.take(id);
                debug_assert!(local.is_none(), "cannot have computed a cell still in remaining");
                let remote = remote.expect("checked above");
                match resolve(None, Some(&remote), &self.criteria_cfg.tol) {
                    Ok(Verdict::AdoptRemote) => {}
                    other => {
                        return Err(SimError::Protocol(format!(
                            "adoption path expected AdoptRemote, got {other:?}"
                        )))
                    }
                }
                let now = self.teams[i].now;
                self.teams[i].cost += self.cfg.cost.adopt;
                self.teams[i].adopted += 1;
                self.approve(team, cell, remote.payload, remote.local_dt);
                self.trace_line(now, team, "ADOPT", id, "");
                return Ok(false);
            }
        }

        // Compute locally (Fig.-1 compute branch).
        let mut outcome =
            predictor_task(cell as usize, &self.teams[i].solver, &self.cfg.grid, &self.cfg.solver, &self.ops);
        let injected = self.injector.maybe_inject(team, &mut outcome);
        if injected {
            outcome.local_dt = admissible_dt(&outcome.payload, &self.cfg.grid, &self.cfg.solver);
        }

        let mut duration = self.cfg.cost.task;
        if self.cfg.checks_enabled {
            let criteria = evaluate(
                &outcome.payload,
                &self.teams[i].solver.field[cell as usize],
                outcome.local_dt,
                self.teams[i].solver.dt_per_cell[cell as usize],
                &self.criteria_cfg,
                &self.d2,
            )
            .map_err(|e| SimError::Protocol(e.to_string()))?;
            duration += self.cfg.cost.cheap_criteria;
            if criteria.f_der_evaluated {
                duration += self.cfg.cost.der_criterion;
            }
            outcome.criteria = criteria;
            outcome.dubious = dubiosity(&criteria, &self.criteria_cfg.tol);
        }
        if injected {
            let dubious = outcome.dubious;
            for rec in self.injector.log_mut() {
                if rec.site.team == team && rec.site.step == id.step && rec.site.cell == id.cell {
                    rec.detected = dubious;
                }
            }
        }

        self.teams[i].now += duration;
        self.teams[i].cost += duration;
        self.teams[i].computed += 1;
        let now = self.teams[i].now;
        let dubious = outcome.dubious;
        self.trace_line(now, team, "COMPUTE", id, if dubious { "dubious=1" } else { "dubious=0" });

        if self.cfg.sharing_enabled {
            self.send_message(team, &outcome);
        }

        if dubious {
            self.teams[i]
                .cache
                .insert(Origin::Local, outcome)
                .map_err(|e| SimError::Protocol(e.to_string()))?;
            self.teams[i].checks.push_back(CheckTask { id, spins: 0 });
            self.trace_line(now, team, "CHECK_SPAWN", id, "");
        } else {
            // Trustworthy local result: accept it; any cached remote for the
            // same task crossed in the network.
            let (local, remote) = self.teams[i].cache.take(id);
            debug_assert!(local.is_none());
            if remote.is_some() {
                self.metrics.gc_discards += 1;
                self.trace_line(now, team, "GC", id, "crossed");
            }
            self.approve(team, cell, outcome.payload, outcome.local_dt);
        }
        Ok(true)
    }

    /// Resolves a check task whose remote counterpart has arrived.
    fn resolve_check(&mut self, team: Team, id: TaskId) -> Result<(), SimError> {
        let i = team.index();
        let (local, remote) = self.teams[i].cache.take(id);
        let local = local.ok_or_else(|| {
            SimError::Protocol(format!("check task for {id} without cached local outcome"))
        })?;
        let remote = remote.expect("resolve_check called with remote present");

        self.teams[i].now += self.cfg.cost.check;
        self.teams[i].cost += self.cfg.cost.check;
        self.metrics.checks_performed += 1;
        let now = self.teams[i].now;

        let verdict = resolve(Some(&local), Some(&remote), &self.criteria_cfg.tol)
            .map_err(|e| SimError::Protocol(format!("resolve failed for {id}: {e}")))?;
        self.trace_line(now, team, "CHECK_RESOLVE", id, verdict.kind_str());
        match verdict {
            Verdict::AcceptLocal => {
                self.approve(team, id.cell, local.payload, local.local_dt);
            }
            Verdict::AdoptRemote => {
                self.metrics.corrections += 1;
                self.trace_line(now, team, "CORRECT", id, "");
                self.approve(team, id.cell, remote.payload, remote.local_dt);
            }
            Verdict::ModerateKeepLocal { warning } => {
                self.metrics.moderations += 1;
                self.trace_line(now, team, "MODERATE", id, &warning);
                self.approve(team, id.cell, local.payload, local.local_dt);
            }
            Verdict::Fatal { reason } => {
                self.metrics.fatals += 1;
                self.trace_line(now, team, "FATAL", id, &reason);
                self.fatal = true;
                self.status = RunStatus::Fatal { step: id.step, cell: id.cell, reason };
            }
        }
        Ok(())
    }

    fn approve(&mut self, team: Team, cell: u32, payload: CellPolynomial, local_dt: f64) {
        let runner = &mut self.teams[team.index()];
        debug_assert!(runner.approved[cell as usize].is_none());
        runner.approved[cell as usize] = Some((payload, local_dt));
        runner.resolved += 1;
    }

    fn send_message(&mut self, sender: Team, outcome: &TaskOutcome) {
        let now = self.teams[sender.index()].now;
        self.trace_line(now, sender, "SHARE", outcome.id, "");
        if self.cfg.channel.drop_all {
            return;
        }
        let msg = TeamMessage { sender, outcome: outcome.clone(), send_time: now };
        let bytes = encode_message(&msg);
        let jitter = if self.cfg.channel.jitter > 0.0 {
            self.cfg.channel.jitter * self.jitter_rng.gen::<f64>()
        } else {
            0.0
        };
        let arrival = now + self.cfg.channel.latency + jitter;
        self.push_event(arrival, EventKind::Arrival { dest: sender.other(), bytes });
    }

    fn complete_step(&mut self, team: Team) -> Result<(), SimError> {
        let i = team.index();
        let cells = self.cfg.grid.total_cells();
        let approved = std::mem::replace(&mut self.teams[i].approved, vec![None; cells]);
        let next = corrector(&self.teams[i].solver, approved)
            .map_err(|e| SimError::Protocol(e.to_string()))?;
        self.teams[i].solver = next;
        self.teams[i].resolved = 0;

        let new_step = self.teams[i].solver.step;
        let discarded = self.teams[i].cache.gc(new_step);
        let now = self.teams[i].now;
        for (id, origin) in discarded {
            self.metrics.gc_discards += 1;
            let origin = match origin {
                Origin::Local => "stale local",
                Origin::Remote => "stale remote",
            };
            self.trace_line(now, team, "GC", id, origin);
        }

        if new_step >= self.cfg.steps {
            self.teams[i].done = true;
        } else {
            self.teams[i].remaining = (0..cells as u32).collect();
        }
        Ok(())
    }
}

/// Convenience wrapper: build, run, return output and the trace bytes.
pub fn run_simulation(cfg: &SimConfig) -> Result<(RunOutput, Vec<u8>), SimError> {
    Simulation::new(cfg).run()
}

/// Value equality of two fields (NaN never equals NaN).
pub fn fields_equal(a: &SolverState, b: &SolverState) -> bool {
    a.field.len() == b.field.len()
        && a.field
            .iter()
            .zip(&b.field)
            .all(|(pa, pb)| pa.coefficients() == pb.coefficients())
}
