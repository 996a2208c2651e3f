//! Sensitivity and performance/sensitivity trade-off campaigns: batches of
//! seeded fault-injection runs scored against the fault-free baseline, with
//! schema-stable CSV output.
//!
//! Run seeds derive as `base seed + run index`, so every criterion
//! configuration sees the identical sequence of injection sites — sweeps
//! compare configurations run-by-run, not distribution-by-distribution.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::SimConfig;
use crate::criteria::CriterionSet;
use crate::fault::{FaultMode, FaultPlan};
use crate::harness::{fields_equal, run_simulation, RunOutput, SimError};
use crate::protocol::Mode;
use crate::solver::{baseline_run, DgOperators, SolverState};

/// The selectable criterion configurations of a sensitivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionSelection {
    PaNan,
    Dt,
    Der,
    AllRigorous,
    AllLazy,
}

impl CriterionSelection {
    pub const ALL: [CriterionSelection; 5] = [
        CriterionSelection::PaNan,
        CriterionSelection::Dt,
        CriterionSelection::Der,
        CriterionSelection::AllRigorous,
        CriterionSelection::AllLazy,
    ];

    pub fn set(self) -> CriterionSet {
        match self {
            CriterionSelection::PaNan => CriterionSet::PaNan,
            CriterionSelection::Dt => CriterionSet::Dt,
            CriterionSelection::Der => CriterionSet::Der,
            CriterionSelection::AllRigorous | CriterionSelection::AllLazy => CriterionSet::All,
        }
    }

    pub fn mode(self) -> Mode {
        match self {
            CriterionSelection::AllLazy => Mode::Lazy,
            _ => Mode::Rigorous,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CriterionSelection::PaNan => "pa_nan",
            CriterionSelection::Dt => "dt",
            CriterionSelection::Der => "der",
            CriterionSelection::AllRigorous => "all_rigorous",
            CriterionSelection::AllLazy => "all_lazy",
        }
    }
}

/// One experiment row: one seeded fault-injection run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRow {
    pub selection: &'static str,
    pub mode: Mode,
    pub tol_dt: f64,
    pub tol_der: f64,
    pub error_value: f64,
    pub run_index: usize,
    pub detected: bool,
    pub corrected: bool,
    pub moderations: u64,
    pub fatal: bool,
    pub cost_per_team: f64,
    pub sharing_ratio: f64,
}

/// Aggregate sensitivity for one (selection, tolerance, error) point.
#[derive(Debug, Clone, Serialize)]
pub struct SensitivityPoint {
    pub selection: &'static str,
    pub mode: Mode,
    pub tol_dt: f64,
    pub tol_der: f64,
    pub error_value: f64,
    pub sensitivity: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignResult {
    pub digest: String,
    pub rows: Vec<RunRow>,
    pub aggregates: Vec<SensitivityPoint>,
}

impl CampaignResult {
    pub fn sensitivity_for(&self, selection: CriterionSelection, error_value: f64) -> f64 {
        self.aggregates
            .iter()
            .find(|p| {
                p.selection == selection.label()
                    && (p.error_value == error_value
                        || (p.error_value.is_nan() && error_value.is_nan()))
            })
            .map(|p| p.sensitivity)
            .unwrap_or(f64::NAN)
    }

    /// Schema-stable CSV: fixed header, one row per run, aggregates in a
    /// `#`-prefixed footer block.
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            w,
            "set,mode,tol_dt,tol_der,error,run,detected,corrected,moderations,fatal,cost_per_team,sharing_ratio"
        )?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.selection,
                r.mode,
                r.tol_dt,
                r.tol_der,
                r.error_value,
                r.run_index,
                r.detected,
                r.corrected,
                r.moderations,
                r.fatal,
                r.cost_per_team,
                r.sharing_ratio
            )?;
        }
        for a in &self.aggregates {
            writeln!(
                w,
                "# aggregate set={} mode={} tol_dt={} tol_der={} error={} sensitivity={} runs={}",
                a.selection, a.mode, a.tol_dt, a.tol_der, a.error_value, a.sensitivity, a.runs
            )?;
        }
        writeln!(w, "# config {}", self.digest)?;
        Ok(())
    }
}

/// Fault-free reference field for correction scoring.
pub fn reference_baseline(cfg: &SimConfig) -> SolverState {
    let ops = DgOperators::new(cfg.solver.order);
    baseline_run(cfg.initial, &cfg.grid, &cfg.solver, &ops, cfg.steps)
}

/// Scores one run: did the injected error get detected, and did the solution
/// end unpolluted on both teams? Runs that injected nothing (error value 0)
/// count as uncorrected by definition.
pub fn score_run(output: &RunOutput, baseline: &SolverState) -> (bool, bool) {
    let detected = output.injections.iter().any(|r| r.detected);
    let injected_something =
        output.injections.iter().any(|r| r.site.error_value != 0.0 || r.site.error_value.is_nan());
    let healed = !output.status.is_fatal()
        && fields_equal(&output.final_states[0], baseline)
        && fields_equal(&output.final_states[1], baseline);
    let corrected = injected_something && detected && healed;
    (detected, corrected)
}

fn fault_run_config(base: &SimConfig, selection: CriterionSelection, error_value: f64, run_index: usize) -> SimConfig {
    let mut cfg = base.clone();
    cfg.criterion_set = selection.set();
    cfg.tolerances.mode = selection.mode();
    cfg.faults = FaultPlan {
        mode: FaultMode::RandomOnce,
        error_value,
        seed: base.seed.wrapping_add(run_index as u64),
        target: base.faults.target,
        scripted: Vec::new(),
    };
    cfg
}

/// Sensitivity campaign: for each criterion selection and error magnitude,
/// `runs_per_point` seeded runs with one random injection each.
pub fn sensitivity_campaign(
    base: &SimConfig,
    selections: &[CriterionSelection],
) -> Result<CampaignResult, SimError> {
    let baseline = reference_baseline(base);
    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    for &selection in selections {
        for &error_value in &base.campaign.errors {
            let mut corrected_count = 0usize;
            for run_index in 0..base.campaign.runs_per_point {
                let cfg = fault_run_config(base, selection, error_value, run_index);
                let (output, _) = run_simulation(&cfg)?;
                let (detected, corrected) = score_run(&output, &baseline);
                if corrected {
                    corrected_count += 1;
                }
                rows.push(RunRow {
                    selection: selection.label(),
                    mode: selection.mode(),
                    tol_dt: base.tolerances.tol_dt,
                    tol_der: base.tolerances.tol_der,
                    error_value,
                    run_index,
                    detected,
                    corrected,
                    moderations: output.metrics.moderations,
                    fatal: output.status.is_fatal(),
                    cost_per_team: output.metrics.simulated_cost,
                    sharing_ratio: output.metrics.mean_sharing_ratio(),
                });
            }
            aggregates.push(SensitivityPoint {
                selection: selection.label(),
                mode: selection.mode(),
                tol_dt: base.tolerances.tol_dt,
                tol_der: base.tolerances.tol_der,
                error_value,
                sensitivity: corrected_count as f64 / base.campaign.runs_per_point as f64,
                runs: base.campaign.runs_per_point,
            });
        }
    }
    Ok(CampaignResult { digest: base.digest(), rows, aggregates })
}

/// One tolerance configuration of the trade-off sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffRow {
    /// `config` for swept points, `baseline_share` / `baseline_redundant`
    /// for the reference rows.
    pub kind: String,
    pub mode: Option<Mode>,
    pub tol_dt: f64,
    pub tol_der: f64,
    /// Average sensitivity over the error grid; absent for baselines (no
    /// faults are injected there).
    pub sensitivity: Option<f64>,
    pub avg_cost_per_team: f64,
    pub avg_sharing_ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffResult {
    pub digest: String,
    pub rows: Vec<TradeoffRow>,
}

impl TradeoffResult {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "kind,mode,tol_dt,tol_der,sensitivity,avg_cost_per_team,avg_sharing_ratio")?;
        for r in &self.rows {
            let mode = r.mode.map(|m| m.to_string()).unwrap_or_default();
            let sens = r.sensitivity.map(|s| s.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.kind, mode, r.tol_dt, r.tol_der, sens, r.avg_cost_per_team, r.avg_sharing_ratio
            )?;
        }
        writeln!(w, "# config {}", self.digest)?;
        Ok(())
    }
}

/// Performance/sensitivity trade-off: sweeps (mode, tol_dt, tol_der) over the
/// configured grids with the full criterion set, plus the two reference
/// configurations (sharing without checks, and fully redundant computation).
pub fn tradeoff_campaign(base: &SimConfig) -> Result<TradeoffResult, SimError> {
    let baseline = reference_baseline(base);
    let mut rows = Vec::new();
    for mode in [Mode::Rigorous, Mode::Lazy] {
        for &tol_dt in &base.campaign.tol_dt_grid {
            for &tol_der in &base.campaign.tol_der_grid {
                let mut corrected_count = 0usize;
                let mut cost_sum = 0.0;
                let mut sharing_sum = 0.0;
                let mut runs = 0usize;
                let mut completed = 0usize;
                for &error_value in &base.campaign.errors {
                    for run_index in 0..base.campaign.runs_per_point {
                        let selection = match mode {
                            Mode::Rigorous => CriterionSelection::AllRigorous,
                            Mode::Lazy => CriterionSelection::AllLazy,
                        };
                        let mut cfg = fault_run_config(base, selection, error_value, run_index);
                        cfg.tolerances.tol_dt = tol_dt;
                        cfg.tolerances.tol_der = tol_der;
                        let (output, _) = run_simulation(&cfg)?;
                        let (_, corrected) = score_run(&output, &baseline);
                        if corrected {
                            corrected_count += 1;
                        }
                        // Cost averages come from completed runs; an escaped
                        // fault can abort the run fatally partway through,
                        // and partial costs would undercut the average.
                        if !output.status.is_fatal() {
                            cost_sum += output.metrics.simulated_cost;
                            sharing_sum += output.metrics.mean_sharing_ratio();
                            completed += 1;
                        }
                        runs += 1;
                    }
                }
                rows.push(TradeoffRow {
                    kind: "config".into(),
                    mode: Some(mode),
                    tol_dt,
                    tol_der,
                    sensitivity: Some(corrected_count as f64 / runs as f64),
                    avg_cost_per_team: cost_sum / completed as f64,
                    avg_sharing_ratio: sharing_sum / completed as f64,
                });
            }
        }
    }

    // Reference rows: outcome sharing with checks disabled, and fully
    // redundant computation.
    let mut share = base.clone();
    share.checks_enabled = false;
    share.sharing_enabled = true;
    share.faults = FaultPlan::none();
    let (out, _) = run_simulation(&share)?;
    rows.push(TradeoffRow {
        kind: "baseline_share".into(),
        mode: None,
        tol_dt: 0.0,
        tol_der: 0.0,
        sensitivity: None,
        avg_cost_per_team: out.metrics.simulated_cost,
        avg_sharing_ratio: out.metrics.mean_sharing_ratio(),
    });

    let mut redundant = base.clone();
    redundant.checks_enabled = false;
    redundant.sharing_enabled = false;
    redundant.faults = FaultPlan::none();
    let (out, _) = run_simulation(&redundant)?;
    rows.push(TradeoffRow {
        kind: "baseline_redundant".into(),
        mode: None,
        tol_dt: 0.0,
        tol_der: 0.0,
        sensitivity: None,
        avg_cost_per_team: out.metrics.simulated_cost,
        avg_sharing_ratio: out.metrics.mean_sharing_ratio(),
    });

    Ok(TradeoffResult { digest: base.digest(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::DerScope;
    use crate::solver::Grid;

    fn small_campaign() -> SimConfig {
        let mut cfg = SimConfig::default();
        cfg.grid = Grid::new(6, 1.0 / 6.0, 1);
        cfg.steps = 6;
        cfg.der_scope = DerScope::AllUnknowns;
        cfg.campaign.errors = vec![-100.0, 100.0];
        cfg.campaign.runs_per_point = 5;
        cfg
    }

    #[test]
    fn strict_rigorous_campaign_corrects_everything() {
        let cfg = small_campaign();
        let result = sensitivity_campaign(&cfg, &[CriterionSelection::AllRigorous]).unwrap();
        assert_eq!(result.rows.len(), 10);
        for point in &result.aggregates {
            assert_eq!(point.sensitivity, 1.0, "{point:?}");
        }
    }

    #[test]
    fn zero_error_counts_as_uncorrected_by_definition() {
        let mut cfg = small_campaign();
        cfg.campaign.errors = vec![0.0];
        let result = sensitivity_campaign(&cfg, &[CriterionSelection::AllRigorous]).unwrap();
        assert_eq!(result.sensitivity_for(CriterionSelection::AllRigorous, 0.0), 0.0);
    }

    #[test]
    fn csv_bodies_are_reproducible() {
        let cfg = small_campaign();
        let r1 = sensitivity_campaign(&cfg, &[CriterionSelection::Der]).unwrap();
        let r2 = sensitivity_campaign(&cfg, &[CriterionSelection::Der]).unwrap();
        let mut b1 = Vec::new();
        let mut b2 = Vec::new();
        r1.write_csv(&mut b1).unwrap();
        r2.write_csv(&mut b2).unwrap();
        assert_eq!(b1, b2);
        assert!(String::from_utf8(b1).unwrap().starts_with("set,mode,"));
    }

    #[test]
    fn tradeoff_baselines_show_sharing_savings() {
        let mut cfg = small_campaign();
        cfg.campaign.errors = vec![100.0];
        cfg.campaign.runs_per_point = 2;
        cfg.campaign.tol_dt_grid = vec![0.0];
        cfg.campaign.tol_der_grid = vec![0.0];
        let result = tradeoff_campaign(&cfg).unwrap();
        let share = result.rows.iter().find(|r| r.kind == "baseline_share").unwrap();
        let redundant = result.rows.iter().find(|r| r.kind == "baseline_redundant").unwrap();
        assert!(
            share.avg_cost_per_team < redundant.avg_cost_per_team,
            "sharing must beat full redundancy: {} vs {}",
            share.avg_cost_per_team,
            redundant.avg_cost_per_team
        );
        assert!(share.avg_sharing_ratio > 0.3);
        assert_eq!(redundant.avg_sharing_ratio, 0.0);
    }
}
