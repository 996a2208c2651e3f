//! Deterministic fault injection: add a fixed-magnitude value error to one
//! nodal coefficient of one predictor outcome, in one team, at one step.
//!
//! Sites are resolved up front (random draws happen at construction), so a
//! given seed produces the same injection site in every configuration — the
//! basis for comparing sensitivities across criteria settings run-by-run.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::polynomial::PolyShape;
use crate::protocol::{TaskId, TaskOutcome, Team};

/// One injection site with its additive error value. `error_value` may be
/// NaN to model arithmetic corruption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultSite {
    pub team: Team,
    pub step: u32,
    pub cell: u32,
    pub unknown: usize,
    pub node: usize,
    pub error_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultMode {
    None,
    /// Exactly one fault per run at a seeded, uniformly drawn site.
    RandomOnce,
    /// Exactly the listed events.
    Scripted,
}

/// Which unknown random injection may hit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InjectionTarget {
    /// Drawn uniformly over all unknowns.
    AnyUnknown,
    /// Restricted to the density, mirroring admissibility-sensitivity
    /// studies.
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultPlan {
    pub mode: FaultMode,
    /// Additive error value for random injection.
    pub error_value: f64,
    pub seed: u64,
    pub target: InjectionTarget,
    pub scripted: Vec<FaultSite>,
}

impl FaultPlan {
    pub fn none() -> Self {
        Self {
            mode: FaultMode::None,
            error_value: 0.0,
            seed: 0,
            target: InjectionTarget::AnyUnknown,
            scripted: Vec::new(),
        }
    }

    pub fn random_once(error_value: f64, seed: u64) -> Self {
        Self {
            mode: FaultMode::RandomOnce,
            error_value,
            seed,
            target: InjectionTarget::AnyUnknown,
            scripted: Vec::new(),
        }
    }

    pub fn scripted(events: Vec<FaultSite>) -> Self {
        Self {
            mode: FaultMode::Scripted,
            error_value: 0.0,
            seed: 0,
            target: InjectionTarget::AnyUnknown,
            scripted: events,
        }
    }
}

/// One line of the injection log. `detected` and `corrected` are filled in
/// after the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectionRecord {
    pub site: FaultSite,
    pub detected: bool,
    pub corrected: bool,
}

/// Spreads consecutive seeds across the key space (splitmix64). Campaign
/// runs derive their seeds as `base + run_index`, so neighboring seeds must
/// not produce correlated draw streams.
pub fn spread_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run-scoped injector with resolved sites and the injection log.
#[derive(Debug, Clone)]
pub struct FaultInjector {
    sites: Vec<FaultSite>,
    log: Vec<InjectionRecord>,
}

impl FaultInjector {
    /// Resolves the plan against the run geometry. Random draws happen here,
    /// in a fixed order (team, step, cell, unknown, node), so the site only
    /// depends on the seed and the geometry.
    pub fn new(plan: &FaultPlan, steps: u32, cells: u32, shape: PolyShape) -> Self {
        let sites = match plan.mode {
            FaultMode::None => Vec::new(),
            FaultMode::Scripted => plan.scripted.clone(),
            FaultMode::RandomOnce => {
                let mut rng = ChaCha8Rng::seed_from_u64(spread_seed(plan.seed));
                let team = if rng.gen_range(0..2u8) == 0 { Team::A } else { Team::B };
                let step = rng.gen_range(0..steps);
                let cell = rng.gen_range(0..cells);
                let unknown = match plan.target {
                    InjectionTarget::Density => 0,
                    InjectionTarget::AnyUnknown => rng.gen_range(0..shape.unknowns),
                };
                let node = rng.gen_range(0..shape.nodes());
                vec![FaultSite { team, step, cell, unknown, node, error_value: plan.error_value }]
            }
        };
        Self { sites, log: Vec::new() }
    }

    /// Whether this team must compute the task locally (bypassing outcome
    /// adoption) because a fault is planned for it. Without this, the drawn
    /// task could be adopted from the partner team and the injection would
    /// never occur.
    pub fn forces_compute(&self, team: Team, id: TaskId) -> bool {
        self.sites
            .iter()
            .any(|s| s.team == team && s.step == id.step && s.cell == id.cell)
    }

    /// Applies every planned fault matching (team, step, cell) to the freshly
    /// computed outcome, before criteria evaluation. Returns true if a
    /// perturbation was applied; callers must then re-derive the outcome's
    /// local time-step size from the perturbed payload.
    pub fn maybe_inject(&mut self, team: Team, outcome: &mut TaskOutcome) -> bool {
        let mut injected = false;
        for site in &self.sites {
            if site.team == team && site.step == outcome.id.step && site.cell == outcome.id.cell {
                let shape = outcome.payload.shape();
                debug_assert!(site.unknown < shape.unknowns && site.node < shape.nodes());
                let idx = site.unknown * shape.nodes() + site.node;
                outcome.payload.coefficients_mut()[idx] += site.error_value;
                self.log.push(InjectionRecord { site: *site, detected: false, corrected: false });
                injected = true;
            }
        }
        injected
    }

    pub fn log(&self) -> &[InjectionRecord] {
        &self.log
    }

    pub fn log_mut(&mut self) -> &mut [InjectionRecord] {
        &mut self.log
    }

    pub fn sites(&self) -> &[FaultSite] {
        &self.sites
    }
}

/// Injection log CSV: one row per applied fault.
pub fn write_injection_log_csv(
    w: &mut impl std::io::Write,
    run_id: u64,
    log: &[InjectionRecord],
) -> std::io::Result<()> {
    writeln!(w, "run_id,team,step,cell,unknown,node,error_value,detected,corrected")?;
    for rec in log {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            run_id,
            rec.site.team,
            rec.site.step,
            rec.site.cell,
            rec.site.unknown,
            rec.site.node,
            rec.site.error_value,
            rec.detected,
            rec.corrected
        )?;
    }
    Ok(())
}
