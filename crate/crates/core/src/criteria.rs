//! The four per-outcome error criteria — arithmetic corruption, physical
//! admissibility, time-step change and smoothness evolution — plus their
//! rigorous/lazy combination into a criteria vector.

use serde::{Deserialize, Serialize};

use crate::basis::SecondDerivative;
use crate::euler::NodeState;
use crate::polynomial::{CellPolynomial, ShapeMismatch};
use crate::protocol::{CriteriaVector, Mode, Tolerances};

/// Which criteria are active. Single-criterion sets are always evaluated
/// rigorously; the lazy pre-filter only makes sense for the full set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriterionSet {
    /// Physical admissibility plus the NaN check.
    PaNan,
    /// Time-step change only.
    Dt,
    /// Smoothness evolution only.
    Der,
    /// All four criteria.
    All,
}

impl CriterionSet {
    pub fn includes_nan(self) -> bool {
        matches!(self, CriterionSet::PaNan | CriterionSet::All)
    }

    pub fn includes_pa(self) -> bool {
        matches!(self, CriterionSet::PaNan | CriterionSet::All)
    }

    pub fn includes_dt(self) -> bool {
        matches!(self, CriterionSet::Dt | CriterionSet::All)
    }

    pub fn includes_der(self) -> bool {
        matches!(self, CriterionSet::Der | CriterionSet::All)
    }
}

impl std::fmt::Display for CriterionSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CriterionSet::PaNan => "pa_nan",
            CriterionSet::Dt => "dt",
            CriterionSet::Der => "der",
            CriterionSet::All => "all",
        })
    }
}

/// Which unknowns feed the smoothness criterion. The density-only default
/// follows the criterion's scalar formulation; spanning all unknowns makes
/// every coefficient perturbation visible to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerScope {
    Density,
    AllUnknowns,
}

/// Configuration of the criteria pipeline for one solver setup.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CriteriaConfig {
    /// Ideal-gas adiabatic index used by the pressure reconstruction.
    pub gamma: f64,
    /// Physical cell width; the second-derivative operator scales with it.
    pub cell_width: f64,
    /// Floor for the smoothness criterion's denominator, turning 0/0 regions
    /// into large-but-finite sensitivity.
    pub denom_floor: f64,
    pub tol: Tolerances,
    pub set: CriterionSet,
    pub der_scope: DerScope,
}

impl CriteriaConfig {
    pub fn new(gamma: f64, cell_width: f64, tol: Tolerances) -> Self {
        assert!(gamma > 1.0, "adiabatic index must exceed 1");
        assert!(cell_width > 0.0, "cell width must be positive");
        Self {
            gamma,
            cell_width,
            denom_floor: 1e-12,
            tol,
            set: CriterionSet::All,
            der_scope: DerScope::Density,
        }
    }
}

/// Arithmetic corruption: +inf if any coefficient is NaN or infinite.
pub fn f_nan(y: &CellPolynomial) -> f64 {
    if y.all_finite() {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Physical admissibility: +inf if any node has non-positive density or
/// non-positive reconstructed pressure. NaN states are the NaN criterion's
/// business and pass through here unflagged.
pub fn f_pa(y: &CellPolynomial, gamma: f64) -> f64 {
    let shape = y.shape();
    let mut vals = [0.0; 4];
    for node in 0..shape.nodes() {
        for u in 0..shape.unknowns {
            vals[u] = y.value(u, node);
        }
        let state = NodeState::from_unknowns(&vals[..shape.unknowns], shape.dim);
        if state.rho <= 0.0 || state.pressure(gamma) <= 0.0 {
            return f64::INFINITY;
        }
    }
    0.0
}

/// Relative change of the cell's admissible time-step size. A degenerate
/// history (zero, negative or non-finite dt, possible once a corrupted
/// outcome slipped into the bookkeeping) counts as an infinite change.
pub fn f_dt(dt_new: f64, dt_old: f64) -> f64 {
    if !(dt_old > 0.0 && dt_old.is_finite()) {
        return f64::INFINITY;
    }
    (dt_new - dt_old).abs() / dt_old
}

/// Smoothness evolution: per direction, the node-averaged relative change of
/// the interpolant's second derivative between the new outcome and the
/// previously accepted solution. NaN payloads propagate NaN; the combining
/// pipeline maps that to +inf.
pub fn f_der(
    y_new: &CellPolynomial,
    y_old: &CellPolynomial,
    d2: &SecondDerivative,
    denom_floor: f64,
    scope: DerScope,
) -> Result<f64, ShapeMismatch> {
    y_new.same_shape(y_old)?;
    let shape = y_new.shape();
    let unknowns: &[usize] = match scope {
        DerScope::Density => &[0],
        DerScope::AllUnknowns => match shape.unknowns {
            3 => &[0, 1, 2],
            _ => &[0, 1, 2, 3],
        },
    };
    let npd = shape.nodes_per_dim();
    let nodes = shape.nodes();
    let mut total = 0.0;
    for &u in unknowns {
        for dir in 0..shape.dim {
            let mut acc = 0.0;
            for_each_line(shape.dim, npd, dir, |line_nodes| {
                let new_line: Vec<f64> = line_nodes.iter().map(|&n| y_new.value(u, n)).collect();
                let old_line: Vec<f64> = line_nodes.iter().map(|&n| y_old.value(u, n)).collect();
                let d2_new = d2.apply_line(&new_line);
                let d2_old = d2.apply_line(&old_line);
                for (dn, do_) in d2_new.iter().zip(&d2_old) {
                    acc += (dn - do_).abs() / do_.abs().max(denom_floor);
                }
            });
            total += acc / nodes as f64;
        }
    }
    Ok(total)
}

/// Visits every grid line of a tensor-product node set along `dir`, passing
/// the node indices of the line in ascending coordinate order.
fn for_each_line(dim: usize, npd: usize, dir: usize, mut visit: impl FnMut(&[usize])) {
    match dim {
        1 => {
            let line: Vec<usize> = (0..npd).collect();
            visit(&line);
        }
        2 => {
            // Node index is iy * npd + ix.
            for ortho in 0..npd {
                let line: Vec<usize> = (0..npd)
                    .map(|i| if dir == 0 { ortho * npd + i } else { i * npd + ortho })
                    .collect();
                visit(&line);
            }
        }
        _ => unreachable!("dim is 1 or 2"),
    }
}

/// Maps non-finite criterion values to +inf so the criteria vector stays
/// totally ordered under the likelihood cascade.
fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// Evaluates the configured criteria for one candidate outcome against the
/// previously accepted solution of the same cell.
///
/// In lazy mode (full set only) the derivative criterion runs iff one of the
/// cheap pre-filtering criteria fired; otherwise `f_der` is 0 with
/// `f_der_evaluated = false`.
pub fn evaluate(
    y_new: &CellPolynomial,
    y_old: &CellPolynomial,
    dt_new: f64,
    dt_old: f64,
    cfg: &CriteriaConfig,
    d2: &SecondDerivative,
) -> Result<CriteriaVector, ShapeMismatch> {
    let f_nan_v = if cfg.set.includes_nan() { f_nan(y_new) } else { 0.0 };
    let f_pa_v = if cfg.set.includes_pa() { f_pa(y_new, cfg.gamma) } else { 0.0 };
    let f_dt_v = if cfg.set.includes_dt() { sanitize(f_dt(dt_new, dt_old)) } else { 0.0 };

    let lazy = cfg.tol.mode == Mode::Lazy && cfg.set == CriterionSet::All;
    let (f_der_v, f_der_evaluated) = if !cfg.set.includes_der() {
        (0.0, false)
    } else if lazy {
        let prefilter_fired = f_nan_v > 0.0 || f_pa_v > 0.0 || f_dt_v > cfg.tol.tol_dt;
        if prefilter_fired {
            (sanitize(f_der(y_new, y_old, d2, cfg.denom_floor, cfg.der_scope)?), true)
        } else {
            (0.0, false)
        }
    } else {
        (sanitize(f_der(y_new, y_old, d2, cfg.denom_floor, cfg.der_scope)?), true)
    };

    Ok(CriteriaVector {
        f_nan: f_nan_v,
        f_pa: f_pa_v,
        f_der: f_der_v,
        f_dt: f_dt_v,
        f_der_evaluated,
    })
}
