//! Run configuration: the flat INI-style config file, validation, overrides
//! and the canonical config digest campaigns stamp into their outputs.
//!
//! Format: `[section]` headers with `key = value` lines; `#` or `;` start
//! comments. Repeated `event` keys in `[faults]` accumulate scripted
//! injections. Unknown keys are errors, so sweep scripts fail loudly.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::criteria::{CriterionSet, DerScope};
use crate::fault::{FaultMode, FaultPlan, FaultSite, InjectionTarget};
use crate::protocol::{Mode, Team, Tolerances};
use crate::solver::{Grid, InitialKind, SolverParams, TimeScheme};

/// Simulated message transport between the two teams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// Delivery delay in simulated task-cost units.
    pub latency: f64,
    /// Amplitude of the uniform seeded jitter added to the latency; 0 keeps
    /// deliveries in send order.
    pub jitter: f64,
    pub jitter_seed: u64,
    /// Test scaffolding: silently drop every message (models a dead
    /// counterpart team for starvation tests).
    pub drop_all: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { latency: 0.0, jitter: 0.0, jitter_seed: 0, drop_all: false }
    }
}

/// Simulated cost constants, in units of one predictor task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub task: f64,
    /// The cheap criteria bundle (NaN, admissibility, time-step change).
    pub cheap_criteria: f64,
    /// One smoothness-criterion evaluation.
    pub der_criterion: f64,
    /// One cross-team comparison.
    pub check: f64,
    pub adopt: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { task: 1.0, cheap_criteria: 0.02, der_criterion: 0.15, check: 0.01, adopt: 0.0 }
    }
}

/// Campaign sweep parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Additive error magnitudes; NaN is allowed as a value.
    pub errors: Vec<f64>,
    pub runs_per_point: usize,
    pub tol_dt_grid: Vec<f64>,
    pub tol_der_grid: Vec<f64>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            errors: vec![-1000.0, -100.0, -10.0, -1.0, 1.0, 10.0, 100.0, 1000.0],
            runs_per_point: 100,
            tol_dt_grid: vec![0.0, 0.02],
            tol_der_grid: vec![0.0, 100.0, 10000.0],
        }
    }
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub solver: SolverParams,
    pub initial: InitialKind,
    pub tolerances: Tolerances,
    pub criterion_set: CriterionSet,
    pub der_scope: DerScope,
    pub denom_floor: f64,
    /// Disabled checks mark every outcome trustworthy (baseline mode).
    pub checks_enabled: bool,
    /// Disabled sharing computes everything redundantly (baseline mode).
    pub sharing_enabled: bool,
    pub channel: ChannelConfig,
    pub faults: FaultPlan,
    pub steps: u32,
    pub seed: u64,
    pub cost: CostModel,
    /// Re-schedule bound of a polling check task before the run is declared
    /// deadlocked.
    pub starvation_bound: u64,
    pub campaign: CampaignConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            grid: Grid::new(20, 0.05, 1),
            solver: SolverParams::new(3, 1.4),
            initial: InitialKind::SmoothWave,
            tolerances: Tolerances::strict(),
            criterion_set: CriterionSet::All,
            der_scope: DerScope::Density,
            denom_floor: 1e-12,
            checks_enabled: true,
            sharing_enabled: true,
            channel: ChannelConfig::default(),
            faults: FaultPlan::none(),
            steps: 50,
            seed: 42,
            cost: CostModel::default(),
            starvation_bound: 1_000_000,
            campaign: CampaignConfig::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl SimConfig {
    /// Parses the INI text over the defaults, applies `--set` style
    /// `section.key=value` overrides, then validates.
    pub fn from_ini(
        text: &str,
        overrides: &[(String, String)],
        seed_override: Option<u64>,
    ) -> Result<Self, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut fault_seed_explicit = false;

        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim().to_string();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                section = line[1..line.len() - 1].trim().to_lowercase();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                line: lineno + 1,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_lowercase();
            let value = value.trim();
            cfg.apply(&section, &key, value, &mut fault_seed_explicit).map_err(|message| {
                ConfigError::Parse { line: lineno + 1, message }
            })?;
        }

        for (path, value) in overrides {
            let (section, key) = path.split_once('.').ok_or_else(|| {
                ConfigError::Invalid(format!("override `{path}` must be `section.key`"))
            })?;
            cfg.apply(&section.to_lowercase(), &key.to_lowercase(), value, &mut fault_seed_explicit)
                .map_err(ConfigError::Invalid)?;
        }

        if let Some(seed) = seed_override {
            cfg.seed = seed;
        }
        if !fault_seed_explicit {
            cfg.faults.seed = cfg.seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(
        &mut self,
        section: &str,
        key: &str,
        value: &str,
        fault_seed_explicit: &mut bool,
    ) -> Result<(), String> {
        match (section, key) {
            ("grid", "cells") => self.grid.cells_per_dim = parse(value)?,
            ("grid", "dim") => self.grid.dim = parse(value)?,
            ("grid", "cell_width") => self.grid.cell_width = parse(value)?,
            ("solver", "order") => self.solver.order = parse(value)?,
            ("solver", "cfl") => self.solver.cfl = parse(value)?,
            ("solver", "gamma") => self.solver.gamma = parse(value)?,
            ("solver", "scheme") => {
                self.solver.scheme = match value {
                    "euler" => TimeScheme::ForwardEuler,
                    "rk2" => TimeScheme::SspRk2,
                    _ => return Err(format!("unknown scheme `{value}` (euler|rk2)")),
                }
            }
            ("solver", "initial") => {
                self.initial = match value {
                    "constant" => InitialKind::Constant,
                    "smooth_wave" => InitialKind::SmoothWave,
                    "gaussian_bump" => InitialKind::GaussianBump,
                    _ => {
                        return Err(format!(
                            "unknown initial condition `{value}` (constant|smooth_wave|gaussian_bump)"
                        ))
                    }
                }
            }
            ("tolerances", "tol_y") => self.tolerances.tol_y = parse(value)?,
            ("tolerances", "tol_dt") => self.tolerances.tol_dt = parse(value)?,
            ("tolerances", "tol_der") => self.tolerances.tol_der = parse(value)?,
            ("tolerances", "mode") => {
                self.tolerances.mode = match value {
                    "rigorous" => Mode::Rigorous,
                    "lazy" => Mode::Lazy,
                    _ => return Err(format!("unknown mode `{value}` (rigorous|lazy)")),
                }
            }
            ("criteria", "set") => {
                self.criterion_set = match value {
                    "all" => CriterionSet::All,
                    "pa_nan" => CriterionSet::PaNan,
                    "dt" => CriterionSet::Dt,
                    "der" => CriterionSet::Der,
                    _ => return Err(format!("unknown criterion set `{value}` (all|pa_nan|dt|der)")),
                }
            }
            ("criteria", "der_scope") => {
                self.der_scope = match value {
                    "density" => DerScope::Density,
                    "all" => DerScope::AllUnknowns,
                    _ => return Err(format!("unknown der_scope `{value}` (density|all)")),
                }
            }
            ("criteria", "denom_floor") => self.denom_floor = parse(value)?,
            ("criteria", "enabled") => self.checks_enabled = parse_bool(value)?,
            ("channel", "latency") => self.channel.latency = parse(value)?,
            ("channel", "jitter") => self.channel.jitter = parse(value)?,
            ("channel", "jitter_seed") => self.channel.jitter_seed = parse(value)?,
            ("channel", "sharing") => self.sharing_enabled = parse_bool(value)?,
            ("faults", "mode") => {
                self.faults.mode = match value {
                    "none" => FaultMode::None,
                    "random_once" => FaultMode::RandomOnce,
                    "scripted" => FaultMode::Scripted,
                    _ => {
                        return Err(format!(
                            "unknown fault mode `{value}` (none|random_once|scripted)"
                        ))
                    }
                }
            }
            ("faults", "error") => self.faults.error_value = parse_f64_or_nan(value)?,
            ("faults", "seed") => {
                self.faults.seed = parse(value)?;
                *fault_seed_explicit = true;
            }
            ("faults", "unknown") => {
                self.faults.target = match value {
                    "uniform" => InjectionTarget::AnyUnknown,
                    "density" => InjectionTarget::Density,
                    _ => return Err(format!("unknown injection target `{value}` (uniform|density)")),
                }
            }
            ("faults", "event") => self.faults.scripted.push(parse_fault_event(value)?),
            ("cost", "task") => self.cost.task = parse(value)?,
            ("cost", "cheap_criteria") => self.cost.cheap_criteria = parse(value)?,
            ("cost", "der_criterion") => self.cost.der_criterion = parse(value)?,
            ("cost", "check") => self.cost.check = parse(value)?,
            ("cost", "adopt") => self.cost.adopt = parse(value)?,
            ("run", "steps") => self.steps = parse(value)?,
            ("run", "seed") => self.seed = parse(value)?,
            ("run", "starvation_bound") => self.starvation_bound = parse(value)?,
            ("campaign", "errors") => self.campaign.errors = parse_f64_list(value)?,
            ("campaign", "runs_per_point") => self.campaign.runs_per_point = parse(value)?,
            ("campaign", "tol_dt_grid") => self.campaign.tol_dt_grid = parse_f64_list(value)?,
            ("campaign", "tol_der_grid") => self.campaign.tol_der_grid = parse_f64_list(value)?,
            _ => return Err(format!("unknown key `{key}` in section `[{section}]`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: String| Err(ConfigError::Invalid(m));
        if self.grid.cells_per_dim < 3 {
            return fail("grid.cells must be at least 3".into());
        }
        if !(self.grid.dim == 1 || self.grid.dim == 2) {
            return fail("grid.dim must be 1 or 2".into());
        }
        if !(self.grid.cell_width > 0.0) {
            return fail("grid.cell_width must be positive".into());
        }
        if self.solver.order < 2 {
            return fail("solver.order must be at least 2".into());
        }
        if !(self.solver.cfl > 0.0) {
            return fail("solver.cfl must be positive".into());
        }
        if !(self.solver.gamma > 1.0) {
            return fail("solver.gamma must exceed 1".into());
        }
        if self.tolerances.tol_y < 0.0
            || self.tolerances.tol_dt < 0.0
            || self.tolerances.tol_der < 0.0
        {
            return fail("tolerances must be non-negative".into());
        }
        if !(self.denom_floor > 0.0) {
            return fail("criteria.denom_floor must be positive".into());
        }
        if self.channel.latency < 0.0 || self.channel.jitter < 0.0 {
            return fail("channel latency and jitter must be non-negative".into());
        }
        if self.steps == 0 {
            return fail("run.steps must be at least 1".into());
        }
        if self.campaign.runs_per_point == 0 {
            return fail("campaign.runs_per_point must be at least 1".into());
        }
        if self.faults.mode == FaultMode::Scripted {
            let shape = crate::polynomial::PolyShape::euler(self.solver.order, self.grid.dim);
            for site in &self.faults.scripted {
                if site.step >= self.steps
                    || site.cell as usize >= self.grid.total_cells()
                    || site.unknown >= shape.unknowns
                    || site.node >= shape.nodes()
                {
                    return fail(format!("scripted fault out of range: {site:?}"));
                }
            }
        }
        Ok(())
    }

    /// Lazy pre-filtering is only defined for the full criterion set; single
    /// sets evaluate rigorously.
    pub fn effective_mode(&self) -> Mode {
        if self.criterion_set == CriterionSet::All {
            self.tolerances.mode
        } else {
            Mode::Rigorous
        }
    }

    /// Canonical flat rendering; the digest is its SHA-256 prefix.
    pub fn canonical_string(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_string().as_bytes());
        let out = hasher.finalize();
        out[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(pos) => &line[..pos],
        None => line,
    }
}

fn parse<T: std::str::FromStr>(value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| format!("cannot parse `{value}`: {e}"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "on" | "1" | "yes" => Ok(true),
        "false" | "off" | "0" | "no" => Ok(false),
        _ => Err(format!("cannot parse `{value}` as boolean")),
    }
}

fn parse_f64_or_nan(value: &str) -> Result<f64, String> {
    if value.eq_ignore_ascii_case("nan") {
        Ok(f64::NAN)
    } else {
        parse(value)
    }
}

fn parse_f64_list(value: &str) -> Result<Vec<f64>, String> {
    value.split(',').map(|v| parse_f64_or_nan(v.trim())).collect()
}

/// Scripted fault event: `team,step,cell,unknown,node,error`.
fn parse_fault_event(value: &str) -> Result<FaultSite, String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 6 {
        return Err(format!("fault event `{value}` needs team,step,cell,unknown,node,error"));
    }
    let team = match parts[0] {
        "A" | "a" => Team::A,
        "B" | "b" => Team::B,
        _ => return Err(format!("unknown team `{}`", parts[0])),
    };
    Ok(FaultSite {
        team,
        step: parse(parts[1])?,
        cell: parse(parts[2])?,
        unknown: parse(parts[3])?,
        node: parse(parts[4])?,
        error_value: parse_f64_or_nan(parts[5])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# campaign base configuration
[grid]
cells = 20
dim = 1
cell_width = 0.05

[solver]
order = 3
cfl = 0.2
gamma = 1.4
scheme = euler
initial = smooth_wave

[tolerances]
tol_y = 0
tol_dt = 0.02
tol_der = 100
mode = lazy

[criteria]
set = all
der_scope = all

[channel]
latency = 0.5

[faults]
mode = scripted
event = A, 3, 7, 0, 1, -1000
event = B, 4, 2, 1, 0, nan

[run]
steps = 50
seed = 7
";

    #[test]
    fn parses_sample_config() {
        let cfg = SimConfig::from_ini(SAMPLE, &[], None).unwrap();
        assert_eq!(cfg.grid.cells_per_dim, 20);
        assert_eq!(cfg.solver.order, 3);
        assert_eq!(cfg.tolerances.mode, Mode::Lazy);
        assert_eq!(cfg.tolerances.tol_der, 100.0);
        assert_eq!(cfg.der_scope, DerScope::AllUnknowns);
        assert_eq!(cfg.channel.latency, 0.5);
        assert_eq!(cfg.faults.mode, FaultMode::Scripted);
        assert_eq!(cfg.faults.scripted.len(), 2);
        assert_eq!(cfg.faults.scripted[0].error_value, -1000.0);
        assert!(cfg.faults.scripted[1].error_value.is_nan());
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.faults.seed, 7, "fault seed follows run seed unless set");
    }

    #[test]
    fn overrides_and_seed_env_apply() {
        let overrides =
            vec![("tolerances.mode".to_string(), "rigorous".to_string()),
                 ("faults.mode".to_string(), "none".to_string())];
        let cfg = SimConfig::from_ini(SAMPLE, &overrides, Some(99)).unwrap();
        assert_eq!(cfg.tolerances.mode, Mode::Rigorous);
        assert_eq!(cfg.seed, 99);
        assert_eq!(cfg.faults.seed, 99);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = SimConfig::from_ini("[grid]\nzells = 20\n", &[], None).unwrap_err();
        assert!(err.to_string().contains("zells"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(SimConfig::from_ini("[grid]\ncells = 2\n", &[], None).is_err());
        assert!(SimConfig::from_ini("[solver]\norder = 1\n", &[], None).is_err());
        assert!(SimConfig::from_ini("[run]\nsteps = 0\n", &[], None).is_err());
        assert!(SimConfig::from_ini("[faults]\nmode = scripted\nevent = A,99,0,0,0,1\n", &[], None)
            .is_err());
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = SimConfig::from_ini(SAMPLE, &[], None).unwrap();
        let b = SimConfig::from_ini(SAMPLE, &[], None).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c =
            SimConfig::from_ini(SAMPLE, &[("run.seed".into(), "8".into())], None).unwrap();
        assert_ne!(a.digest(), c.digest());
    }

    #[test]
    fn effective_mode_forces_rigorous_for_single_sets() {
        let mut cfg = SimConfig::default();
        cfg.tolerances.mode = Mode::Lazy;
        cfg.criterion_set = CriterionSet::Der;
        assert_eq!(cfg.effective_mode(), Mode::Rigorous);
        cfg.criterion_set = CriterionSet::All;
        assert_eq!(cfg.effective_mode(), Mode::Lazy);
    }
}
