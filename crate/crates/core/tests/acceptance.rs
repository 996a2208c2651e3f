//! Acceptance suite: every shipped guarantee as one test, each printing a
//! pass line with the measured quantities (visible with `--nocapture`).
//!
//! The campaign-style checks use the table geometry throughout: 1D Euler,
//! order-3 elements, 20 cells, 50 steps, smooth entropy wave, smoothness
//! criterion spanning all unknowns, uniform random injection sites derived
//! from consecutive seeds.

use std::time::Instant;

use doubtfire_core::campaign::{
    reference_baseline, score_run, sensitivity_campaign, tradeoff_campaign, CriterionSelection,
};
use doubtfire_core::config::SimConfig;
use doubtfire_core::criteria::DerScope;
use doubtfire_core::fault::{FaultPlan, FaultSite};
use doubtfire_core::harness::run_simulation;
use doubtfire_core::protocol::{Mode, Team};
use doubtfire_core::solver::{
    baseline_run, corrector, initial_condition, node_position, predictor_task, total_mass,
    DgOperators, Grid, InitialKind, SolverParams, SolverState,
};

/// Campaign geometry: 1D, p = 3, 20 cells, 50 steps.
fn campaign_config() -> SimConfig {
    let mut cfg = SimConfig::default();
    cfg.grid = Grid::new(20, 0.05, 1);
    cfg.solver = SolverParams::new(3, 1.4);
    cfg.initial = InitialKind::SmoothWave;
    cfg.steps = 50;
    cfg.seed = 42;
    cfg.der_scope = DerScope::AllUnknowns;
    cfg
}

fn bitwise_equal(a: &SolverState, b: &SolverState) -> bool {
    a.field.len() == b.field.len()
        && a.field.iter().zip(&b.field).all(|(pa, pb)| {
            pa.coefficients()
                .iter()
                .zip(pb.coefficients())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        })
}

// Criterion 1 — perfect-sensitivity configuration: rigorous mode with zero
// tolerances corrects every injected error in the {±1, ±10, ±100, ±1000}
// grid at 100 runs per point; sensitivity is exactly 1.00.
#[test]
fn a01_perfect_sensitivity_configuration() {
    let started = Instant::now();
    let mut cfg = campaign_config();
    cfg.tolerances.tol_dt = 0.0;
    cfg.tolerances.tol_der = 0.0;
    cfg.campaign.runs_per_point = 100;

    let result = sensitivity_campaign(&cfg, &[CriterionSelection::AllRigorous]).unwrap();
    assert_eq!(result.rows.len(), 800);
    for point in &result.aggregates {
        assert_eq!(
            point.sensitivity, 1.0,
            "sensitivity must be exactly 1.00 at e={}, got {}",
            point.error_value, point.sensitivity
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "campaign took {elapsed:.1} s, budget is 2 minutes");
    println!(
        "[PASS] acceptance 1: perfect-sensitivity configuration, 800/800 corrected ({elapsed:.1} s)"
    );
}

// Criterion 2 — NaN robustness: a NaN error value is detected and corrected
// with rate exactly 1.00 under every criterion set, including PA+NaN alone.
#[test]
fn a02_nan_errors_always_detected_and_corrected() {
    let mut cfg = campaign_config();
    cfg.campaign.errors = vec![f64::NAN];
    cfg.campaign.runs_per_point = 60;

    for selection in CriterionSelection::ALL {
        let result = sensitivity_campaign(&cfg, &[selection]).unwrap();
        assert!(
            result.rows.iter().all(|r| r.detected),
            "{}: every NaN injection must be detected",
            selection.label()
        );
        let sensitivity = result.sensitivity_for(selection, f64::NAN);
        assert_eq!(
            sensitivity,
            1.0,
            "{}: NaN correction rate must be exactly 1.00",
            selection.label()
        );
    }
    println!("[PASS] acceptance 2: NaN faults detected and corrected at rate 1.00 under all 5 criterion sets");
}

// Criterion 3 — admissibility sign bias: with PA+NaN alone, negative errors
// of magnitude 1000 are corrected strictly more often than positive ones.
#[test]
fn a03_pa_sensitivity_is_biased_to_negative_errors() {
    let mut cfg = campaign_config();
    cfg.campaign.errors = vec![-1000.0, 1000.0];
    cfg.campaign.runs_per_point = 100;

    let result = sensitivity_campaign(&cfg, &[CriterionSelection::PaNan]).unwrap();
    let negative = result.sensitivity_for(CriterionSelection::PaNan, -1000.0);
    let positive = result.sensitivity_for(CriterionSelection::PaNan, 1000.0);
    assert!(
        negative > positive,
        "expected strict sign bias, got sens(-1000)={negative} vs sens(+1000)={positive}"
    );
    println!(
        "[PASS] acceptance 3: PA+NaN sign bias, sens(-1000)={negative:.2} > sens(+1000)={positive:.2}"
    );
}

// Criterion 4 — lazy never beats rigorous: for every tolerance pair in
// {0, 0.02} x {0, 100, 10000}, the lazy average sensitivity is at most the
// rigorous one, strictly below for at least one pair. Run counts are not
// pinned here: the same seeded injection sites feed both modes, and a
// lazy-corrected run is rigorous-corrected run-by-run.
#[test]
fn a04_lazy_sensitivity_never_exceeds_rigorous() {
    let mut strict_somewhere = false;
    let mut report = Vec::new();
    for &tol_dt in &[0.0, 0.02] {
        for &tol_der in &[0.0, 100.0, 10000.0] {
            let mut cfg = campaign_config();
            cfg.tolerances.tol_dt = tol_dt;
            cfg.tolerances.tol_der = tol_der;
            cfg.campaign.runs_per_point = 15;

            let result = sensitivity_campaign(
                &cfg,
                &[CriterionSelection::AllRigorous, CriterionSelection::AllLazy],
            )
            .unwrap();
            let avg = |label: &str| {
                let points: Vec<f64> = result
                    .aggregates
                    .iter()
                    .filter(|p| p.selection == label)
                    .map(|p| p.sensitivity)
                    .collect();
                points.iter().sum::<f64>() / points.len() as f64
            };
            let rigorous = avg("all_rigorous");
            let lazy = avg("all_lazy");
            assert!(
                lazy <= rigorous,
                "tol_dt={tol_dt} tol_der={tol_der}: lazy {lazy} > rigorous {rigorous}"
            );
            if lazy < rigorous {
                strict_somewhere = true;
            }
            report.push(format!("({tol_dt},{tol_der}): rig {rigorous:.2} lazy {lazy:.2}"));
        }
    }
    assert!(strict_somewhere, "lazy must be strictly less sensitive for at least one pair");
    println!("[PASS] acceptance 4: lazy <= rigorous on the full tolerance grid [{}]", report.join("; "));
}

// Criterion 5 — monotone tolerance response of the smoothness criterion:
// sensitivity never increases with tol_der and never decreases with |e|
// (per error sign, identical seeded sites across all points).
#[test]
fn a05_der_sensitivity_monotone_in_tolerance_and_error_size() {
    let tol_grid = [0.0, 100.0, 10000.0];
    let mut table = Vec::new();
    for &tol_der in &tol_grid {
        let mut cfg = campaign_config();
        cfg.tolerances.tol_der = tol_der;
        cfg.campaign.runs_per_point = 15;
        let result = sensitivity_campaign(&cfg, &[CriterionSelection::Der]).unwrap();
        let sens: Vec<(f64, f64)> = result
            .aggregates
            .iter()
            .map(|p| (p.error_value, p.sensitivity))
            .collect();
        table.push((tol_der, sens));
    }

    // Non-increasing in tol_der at every error value.
    for window in table.windows(2) {
        let (tol_a, ref sens_a) = window[0];
        let (tol_b, ref sens_b) = window[1];
        for ((e, sa), (_, sb)) in sens_a.iter().zip(sens_b) {
            assert!(
                sb <= sa,
                "e={e}: sensitivity rose from {sa} to {sb} when tol_der grew {tol_a} -> {tol_b}"
            );
        }
    }
    // Non-decreasing in |e| per sign at every tolerance.
    for (tol_der, sens) in &table {
        for sign in [-1.0, 1.0] {
            let mut by_magnitude: Vec<(f64, f64)> = sens
                .iter()
                .filter(|(e, _)| e.signum() == sign)
                .map(|(e, s)| (e.abs(), *s))
                .collect();
            by_magnitude.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            for pair in by_magnitude.windows(2) {
                assert!(
                    pair[1].1 >= pair[0].1,
                    "tol_der={tol_der} sign={sign}: sensitivity fell from {} at |e|={} to {} at |e|={}",
                    pair[0].1, pair[0].0, pair[1].1, pair[1].0
                );
            }
        }
    }
    println!("[PASS] acceptance 5: Der sensitivity monotone (non-increasing in tol_der, non-decreasing in |e|)");
}

// Criterion 6 — end-to-end correction soundness: any single detected
// scripted fault leaves both teams' final fields bitwise equal to the
// fault-free single-team baseline.
#[test]
fn a06_detected_scripted_faults_leave_no_trace_in_the_fields() {
    let mut cfg = campaign_config();
    cfg.tolerances.tol_dt = 0.0;
    cfg.tolerances.tol_der = 0.0;
    let baseline = reference_baseline(&cfg);

    let sites = [
        (Team::A, 0, 0, 0, 0, 1000.0),
        (Team::A, 3, 7, 0, 1, -1000.0),
        (Team::A, 25, 19, 1, 3, -1.0),
        (Team::A, 49, 10, 2, 2, 10.0),
        (Team::B, 1, 4, 2, 0, f64::NAN),
        (Team::B, 12, 0, 1, 1, 100.0),
        (Team::B, 33, 15, 0, 3, -10.0),
        (Team::B, 48, 9, 0, 0, 1.0),
    ];
    for (team, step, cell, unknown, node, error_value) in sites {
        let mut run_cfg = cfg.clone();
        run_cfg.faults = FaultPlan::scripted(vec![FaultSite {
            team,
            step,
            cell,
            unknown,
            node,
            error_value,
        }]);
        let (output, _) = run_simulation(&run_cfg).unwrap();
        assert!(
            output.injections.iter().all(|r| r.detected),
            "fault at {team} ({step},{cell}) u{unknown} n{node} e={error_value} must be detected"
        );
        let (_, corrected) = score_run(&output, &baseline);
        assert!(corrected, "fault at {team} ({step},{cell}) e={error_value} not corrected");
        assert!(bitwise_equal(&output.final_states[0], &baseline));
        assert!(bitwise_equal(&output.final_states[1], &baseline));
    }
    println!("[PASS] acceptance 6: 8/8 scripted faults corrected; final fields bitwise equal to baseline");
}

// Criterion 7 — workload sharing: with checks disabled and zero latency on
// 100 cells x 100 steps, each team computes 30-70% of the tasks and the
// combined computation stays below full redundancy.
#[test]
fn a07_teams_share_the_workload() {
    let mut cfg = campaign_config();
    cfg.grid = Grid::new(100, 0.01, 1);
    cfg.steps = 100;
    cfg.checks_enabled = false;

    let (output, _) = run_simulation(&cfg).unwrap();
    let total = 100.0 * 100.0;
    let share_a = output.metrics.tasks_computed[0] as f64 / total;
    let share_b = output.metrics.tasks_computed[1] as f64 / total;
    let combined = output.metrics.tasks_computed[0] + output.metrics.tasks_computed[1];
    assert!((0.3..=0.7).contains(&share_a), "team A computed {share_a:.3} of tasks");
    assert!((0.3..=0.7).contains(&share_b), "team B computed {share_b:.3} of tasks");
    assert!((combined as f64) < 2.0 * total, "no strict saving: {combined} computed");
    println!(
        "[PASS] acceptance 7: workload shares A={share_a:.2} B={share_b:.2}, combined {combined} < {} tasks",
        2.0 * total
    );
}

// Criterion 8 — trade-off frontier shape: no lazy configuration beats its
// rigorous counterpart in both sensitivity and cost, the zero-tolerance
// configuration is the most sensitive and most expensive of its mode, and
// sharing undercuts full redundancy.
#[test]
fn a08_tradeoff_frontier_is_pareto_consistent() {
    let mut cfg = campaign_config();
    cfg.campaign.runs_per_point = 8;
    let result = tradeoffs(&cfg);

    let config_rows: Vec<_> = result.rows.iter().filter(|r| r.kind == "config").collect();
    for row in &config_rows {
        if row.mode == Some(Mode::Lazy) {
            let rig = config_rows
                .iter()
                .find(|r| {
                    r.mode == Some(Mode::Rigorous)
                        && r.tol_dt == row.tol_dt
                        && r.tol_der == row.tol_der
                })
                .expect("rigorous counterpart");
            let beats_both = row.sensitivity.unwrap() > rig.sensitivity.unwrap()
                && row.avg_cost_per_team < rig.avg_cost_per_team;
            assert!(
                !beats_both,
                "lazy ({},{}) dominates rigorous in both sensitivity and cost",
                row.tol_dt, row.tol_der
            );
        }
    }
    for mode in [Mode::Rigorous, Mode::Lazy] {
        let rows: Vec<_> = config_rows.iter().filter(|r| r.mode == Some(mode)).collect();
        let strictest = rows
            .iter()
            .find(|r| r.tol_dt == 0.0 && r.tol_der == 0.0)
            .expect("zero-tolerance row");
        let max_sens = rows.iter().map(|r| r.sensitivity.unwrap()).fold(0.0, f64::max);
        assert_eq!(strictest.sensitivity.unwrap(), max_sens, "{mode}: zero tolerances maximise sensitivity");
        for row in &rows {
            assert!(
                strictest.avg_cost_per_team >= row.avg_cost_per_team,
                "{mode}: max-sensitivity config is cheaper ({} < {}) than ({},{})",
                strictest.avg_cost_per_team,
                row.avg_cost_per_team,
                row.tol_dt,
                row.tol_der
            );
        }
    }

    let share = result.rows.iter().find(|r| r.kind == "baseline_share").unwrap();
    let redundant = result.rows.iter().find(|r| r.kind == "baseline_redundant").unwrap();
    assert!(share.avg_cost_per_team < redundant.avg_cost_per_team);
    println!(
        "[PASS] acceptance 8: Pareto-consistent frontier; sharing baseline {:.0} < redundant {:.0} cost units",
        share.avg_cost_per_team, redundant.avg_cost_per_team
    );
}

fn tradeoffs(cfg: &SimConfig) -> doubtfire_core::campaign::TradeoffResult {
    tradeoff_campaign(cfg).unwrap()
}

// Criterion 9 — solver correctness oracle: smooth-wave convergence of order
// at least p for p = 2, 3 over three grids, per-step mass conservation to
// 1e-12 relative, and constant states as bitwise fixed points.
#[test]
fn a09_solver_correctness_oracle() {
    let started = Instant::now();

    // Convergence. The time step shrinks as h^(p+1) via the CFL factor so
    // the forward-Euler time error matches the spatial order.
    let mut orders = Vec::new();
    for p in [2usize, 3] {
        let mut errors = Vec::new();
        for (level, cells) in [10usize, 20, 40].into_iter().enumerate() {
            let grid = Grid::new(cells, 1.0 / cells as f64, 1);
            let mut params = SolverParams::new(p, 1.4);
            params.cfl = 0.2 / (2.0f64.powi((p * level) as i32));
            let ops = DgOperators::new(p);
            let mut state = initial_condition(InitialKind::SmoothWave, &grid, &params, &ops);
            while state.time < 0.05 {
                let approved = (0..grid.total_cells())
                    .map(|cell| {
                        let out = predictor_task(cell, &state, &grid, &params, &ops);
                        Some((out.payload, out.local_dt))
                    })
                    .collect();
                state = corrector(&state, approved).unwrap();
            }
            errors.push(l2_density_error(&state, &grid, &ops));
        }
        for pair in errors.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(
                order >= p as f64,
                "p={p}: measured convergence order {order:.2} below {p} (errors {errors:?})"
            );
            orders.push((p, order));
        }
    }

    // Mass conservation at the default campaign configuration.
    let grid = Grid::new(20, 0.05, 1);
    let params = SolverParams::new(3, 1.4);
    let ops = DgOperators::new(3);
    let mut state = initial_condition(InitialKind::SmoothWave, &grid, &params, &ops);
    let mut prev = total_mass(&state, &grid, &ops);
    for _ in 0..50 {
        let approved = (0..grid.total_cells())
            .map(|cell| {
                let out = predictor_task(cell, &state, &grid, &params, &ops);
                Some((out.payload, out.local_dt))
            })
            .collect();
        state = corrector(&state, approved).unwrap();
        let mass = total_mass(&state, &grid, &ops);
        assert!(((mass - prev) / prev).abs() < 1e-12, "mass drift at step {}", state.step);
        prev = mass;
    }

    // Constant states are bitwise fixed points.
    for dim in [1usize, 2] {
        for p in [2usize, 3] {
            let grid = Grid::new(4, 0.25, dim);
            let params = SolverParams::new(p, 1.4);
            let ops = DgOperators::new(p);
            let state = initial_condition(InitialKind::Constant, &grid, &params, &ops);
            for cell in 0..grid.total_cells() {
                let out = predictor_task(cell, &state, &grid, &params, &ops);
                assert!(out
                    .payload
                    .coefficients()
                    .iter()
                    .zip(state.field[cell].coefficients())
                    .all(|(a, b)| a.to_bits() == b.to_bits()));
            }
        }
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 60.0, "solver oracle took {elapsed:.1} s, budget is 1 minute");
    let orders_str: Vec<String> =
        orders.iter().map(|(p, o)| format!("p={p}: {o:.2}")).collect();
    println!(
        "[PASS] acceptance 9: convergence orders [{}], mass conserved to 1e-12/step, constants bitwise fixed ({elapsed:.1} s)",
        orders_str.join(", ")
    );
}

fn l2_density_error(state: &SolverState, grid: &Grid, ops: &DgOperators) -> f64 {
    let jac = 0.5 * grid.cell_width;
    let mut acc = 0.0;
    for (cell, poly) in state.field.iter().enumerate() {
        for (node, &rho) in poly.unknown(0).iter().enumerate() {
            let x = node_position(grid, ops, cell, node)[0];
            let exact = 1.0
                + 0.1 * (2.0 * std::f64::consts::PI * (x - state.time) / grid.domain_length()).sin();
            acc += ops.weights[node] * jac * (rho - exact) * (rho - exact);
        }
    }
    acc.sqrt()
}

// Criterion 10 — determinism: identical configuration and seed reproduce the
// event trace and the campaign CSV byte for byte.
#[test]
fn a10_runs_are_byte_deterministic() {
    let mut cfg = campaign_config();
    cfg.steps = 10;
    cfg.channel.latency = 0.4;
    cfg.faults = FaultPlan::random_once(100.0, 7);
    let (_, trace_a) = run_simulation(&cfg).unwrap();
    let (_, trace_b) = run_simulation(&cfg).unwrap();
    assert_eq!(trace_a, trace_b, "trace.log bodies must be byte-identical");
    assert!(!trace_a.is_empty());

    let mut camp_cfg = campaign_config();
    camp_cfg.steps = 10;
    camp_cfg.campaign.errors = vec![-10.0, 10.0];
    camp_cfg.campaign.runs_per_point = 5;
    let mut csv_a = Vec::new();
    let mut csv_b = Vec::new();
    sensitivity_campaign(&camp_cfg, &[CriterionSelection::AllRigorous])
        .unwrap()
        .write_csv(&mut csv_a)
        .unwrap();
    sensitivity_campaign(&camp_cfg, &[CriterionSelection::AllRigorous])
        .unwrap()
        .write_csv(&mut csv_b)
        .unwrap();
    assert_eq!(csv_a, csv_b, "campaign.csv bodies must be byte-identical");
    println!(
        "[PASS] acceptance 10: byte-identical trace.log ({} bytes) and campaign.csv ({} bytes)",
        trace_a.len(),
        csv_a.len()
    );
}

// Single-team transparency: a fault-free two-team run is bitwise the plain
// solver loop (backs criterion 6's baseline comparison).
#[test]
fn a06b_protocol_is_transparent_when_silent() {
    let cfg = campaign_config();
    let (output, _) = run_simulation(&cfg).unwrap();
    let ops = DgOperators::new(cfg.solver.order);
    let baseline = baseline_run(cfg.initial, &cfg.grid, &cfg.solver, &ops, cfg.steps);
    assert!(bitwise_equal(&output.final_states[0], &baseline));
    assert!(bitwise_equal(&output.final_states[1], &baseline));
    println!("[PASS] acceptance 6b: fault-free two-team run bitwise equals the single-team baseline");
}
