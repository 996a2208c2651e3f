//! Batch front-end: single runs, sensitivity campaigns, trade-off sweeps and
//! baseline reference runs. Outputs land under `--out` as `metrics.json`,
//! `campaign.csv`, `trace.log`, `field_*.csv` and `injections.csv`.
//!
//! Exit codes: 0 success, 2 usage or invalid configuration, 3 a run ended
//! with a fatal verdict, 4 I/O failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use doubtfire_core::campaign::{
    reference_baseline, score_run, sensitivity_campaign, tradeoff_campaign, CriterionSelection,
};
use doubtfire_core::config::{ConfigError, SimConfig};
use doubtfire_core::fault::write_injection_log_csv;
use doubtfire_core::harness::{run_simulation, RunStatus, SimError};
use doubtfire_core::solver::{baseline_run, write_field_csv, DgOperators};

#[derive(Parser)]
#[command(
    name = "doubtfire",
    about = "Two-team silent-data-corruption detection and correction on a desk-scale DG Euler solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// INI-style configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Override a config value, e.g. --set tolerances.mode=lazy
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// One two-team simulation run.
    Run(Common),
    /// Sensitivity sweep over criterion sets and error magnitudes.
    Sensitivity {
        #[command(flatten)]
        common: Common,
        /// Criterion selections (comma-separated):
        /// pa_nan,dt,der,all_rigorous,all_lazy
        #[arg(long, value_delimiter = ',')]
        sets: Vec<String>,
    },
    /// Performance/sensitivity trade-off sweep over the tolerance grids.
    Tradeoff(Common),
    /// Fault-free reference runs: outcome sharing without checks, full
    /// redundancy, and the single-team field.
    Baseline(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code)
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Io(std::io::Error),
    Sim(SimError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Sim(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 4,
            CliError::Sim(SimError::Io(_)) => 4,
            CliError::Sim(_) => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Sim(e)
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Run(common) => cmd_run(&common),
        Command::Sensitivity { common, sets } => cmd_sensitivity(&common, &sets),
        Command::Tradeoff(common) => cmd_tradeoff(&common),
        Command::Baseline(common) => cmd_baseline(&common),
    }
}

fn load_config(common: &Common) -> Result<SimConfig, CliError> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", common.config.display())))?;
    let overrides: Vec<(String, String)> = common
        .set
        .iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| CliError::Config(format!("--set `{s}` must be SECTION.KEY=VALUE")))
        })
        .collect::<Result<_, _>>()?;
    let seed_override = match std::env::var("DOUBTFIRE_SEED") {
        Ok(v) => Some(
            v.parse::<u64>()
                .map_err(|_| CliError::Config(format!("DOUBTFIRE_SEED=`{v}` is not a u64")))?,
        ),
        Err(_) => None,
    };
    Ok(SimConfig::from_ini(&text, &overrides, seed_override)?)
}

fn ensure_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_metrics_json(
    path: &Path,
    cfg: &SimConfig,
    status: &RunStatus,
    metrics: &doubtfire_core::harness::RunMetrics,
) -> Result<(), CliError> {
    let doc = serde_json::json!({
        "config": cfg.digest(),
        "status": status,
        "metrics": metrics,
    });
    fs::write(path, serde_json::to_string_pretty(&doc).expect("serializable") + "\n")?;
    Ok(())
}

fn cmd_run(common: &Common) -> Result<u8, CliError> {
    let cfg = load_config(common)?;
    ensure_out(&common.out)?;
    let started = Instant::now();
    let (mut output, trace) = run_simulation(&cfg)?;
    let wall = started.elapsed();

    fs::write(common.out.join("trace.log"), &trace)?;

    let ops = DgOperators::new(cfg.solver.order);
    for (state, name) in output.final_states.iter().zip(["field_team_a.csv", "field_team_b.csv"])
    {
        let mut buf = Vec::new();
        write_field_csv(&mut buf, state, &cfg.grid, &ops)?;
        fs::write(common.out.join(name), buf)?;
    }

    if !output.injections.is_empty() {
        let baseline = reference_baseline(&cfg);
        let (_, corrected) = score_run(&output, &baseline);
        for rec in &mut output.injections {
            rec.corrected = corrected;
        }
        let mut buf = Vec::new();
        write_injection_log_csv(&mut buf, cfg.seed, &output.injections)?;
        fs::write(common.out.join("injections.csv"), buf)?;
    }

    write_metrics_json(&common.out.join("metrics.json"), &cfg, &output.status, &output.metrics)?;

    println!(
        "run {}: {:?}, computed {:?}, adopted {:?}, checks {}, corrections {}, moderations {}, cost/team {:.2}, wall {:.1} ms",
        cfg.digest(),
        output.status,
        output.metrics.tasks_computed,
        output.metrics.tasks_adopted,
        output.metrics.checks_performed,
        output.metrics.corrections,
        output.metrics.moderations,
        output.metrics.simulated_cost,
        wall.as_secs_f64() * 1e3,
    );

    Ok(if output.status.is_fatal() { 3 } else { 0 })
}

fn parse_selections(sets: &[String]) -> Result<Vec<CriterionSelection>, CliError> {
    if sets.is_empty() {
        return Ok(CriterionSelection::ALL.to_vec());
    }
    sets.iter()
        .map(|s| match s.as_str() {
            "pa_nan" => Ok(CriterionSelection::PaNan),
            "dt" => Ok(CriterionSelection::Dt),
            "der" => Ok(CriterionSelection::Der),
            "all_rigorous" => Ok(CriterionSelection::AllRigorous),
            "all_lazy" => Ok(CriterionSelection::AllLazy),
            _ => Err(CliError::Config(format!(
                "unknown criterion set `{s}` (pa_nan|dt|der|all_rigorous|all_lazy)"
            ))),
        })
        .collect()
}

fn cmd_sensitivity(common: &Common, sets: &[String]) -> Result<u8, CliError> {
    let cfg = load_config(common)?;
    let selections = parse_selections(sets)?;
    ensure_out(&common.out)?;
    let started = Instant::now();
    let result = sensitivity_campaign(&cfg, &selections)?;
    let wall = started.elapsed();

    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    fs::write(common.out.join("campaign.csv"), buf)?;

    println!("sensitivity campaign {} ({} runs, wall {:.1} s)", result.digest, result.rows.len(), wall.as_secs_f64());
    for point in &result.aggregates {
        println!(
            "  {} e={}: sensitivity {:.2} ({} runs)",
            point.selection, point.error_value, point.sensitivity, point.runs
        );
    }
    Ok(0)
}

fn cmd_tradeoff(common: &Common) -> Result<u8, CliError> {
    let cfg = load_config(common)?;
    ensure_out(&common.out)?;
    let started = Instant::now();
    let result = tradeoff_campaign(&cfg)?;
    let wall = started.elapsed();

    let mut buf = Vec::new();
    result.write_csv(&mut buf)?;
    fs::write(common.out.join("campaign.csv"), buf)?;

    println!("tradeoff campaign {} (wall {:.1} s)", result.digest, wall.as_secs_f64());
    for row in &result.rows {
        println!(
            "  {} mode={} tol_dt={} tol_der={}: sensitivity={} cost/team={:.2} sharing={:.2}",
            row.kind,
            row.mode.map(|m| m.to_string()).unwrap_or_else(|| "-".into()),
            row.tol_dt,
            row.tol_der,
            row.sensitivity.map(|s| format!("{s:.2}")).unwrap_or_else(|| "-".into()),
            row.avg_cost_per_team,
            row.avg_sharing_ratio,
        );
    }
    Ok(0)
}

fn cmd_baseline(common: &Common) -> Result<u8, CliError> {
    let cfg = load_config(common)?;
    ensure_out(&common.out)?;

    // Single-team reference field.
    let ops = DgOperators::new(cfg.solver.order);
    let reference = baseline_run(cfg.initial, &cfg.grid, &cfg.solver, &ops, cfg.steps);
    let mut buf = Vec::new();
    write_field_csv(&mut buf, &reference, &cfg.grid, &ops)?;
    fs::write(common.out.join("field_baseline.csv"), buf)?;

    // Two-team reference runs: sharing without checks, and full redundancy.
    let mut share = cfg.clone();
    share.checks_enabled = false;
    share.sharing_enabled = true;
    share.faults = doubtfire_core::fault::FaultPlan::none();
    let (share_out, trace) = run_simulation(&share)?;
    fs::write(common.out.join("trace.log"), &trace)?;
    write_metrics_json(
        &common.out.join("metrics.json"),
        &share,
        &share_out.status,
        &share_out.metrics,
    )?;

    let mut redundant = share.clone();
    redundant.sharing_enabled = false;
    let (red_out, _) = run_simulation(&redundant)?;

    let mut summary = String::new();
    summary += &format!(
        "baseline_share: cost/team {:.2}, sharing ratio {:.2}\n",
        share_out.metrics.simulated_cost,
        share_out.metrics.mean_sharing_ratio()
    );
    summary += &format!(
        "baseline_redundant: cost/team {:.2}, sharing ratio {:.2}\n",
        red_out.metrics.simulated_cost,
        red_out.metrics.mean_sharing_ratio()
    );
    print!("{summary}");
    let mut f = fs::File::create(common.out.join("baseline_summary.txt"))?;
    f.write_all(summary.as_bytes())?;

    if !doubtfire_core::harness::fields_equal(&share_out.final_states[0], &reference) {
        return Err(CliError::Sim(SimError::Protocol(
            "sharing baseline diverged from the single-team reference".into(),
        )));
    }
    Ok(0)
}
