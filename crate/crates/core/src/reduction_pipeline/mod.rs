//! Reduction of an instantaneous fuel model to a simplified model.
//!
//! Any [`FuelModel`] can serve as the oracle. The pipeline first classifies
//! the duty class from the fuel rate under hard braking, then fits the floor,
//! the cruise cubic `C(v)`, the acceleration terms `P(v)` and `Q(v)`, and the
//! grade term `Z(v)` one after another, each with nonnegative coefficients.
//! The feasible-acceleration boundary is fitted separately from the oracle's
//! feasibility flag.

pub mod bisect;
mod feasible;
mod fit;
pub mod nnls;
mod oracle;

use serde::Serialize;

pub use bisect::{bisect_root, bisect_transition, max_feasible_accel, Ceiling};
pub use feasible::{fit_feasible_region, FeasibleFit};
pub use fit::{detect_duty, fit_fuel, DutyDetection, FuelFit};
pub use nnls::{kkt_violation, nnls, NnlsSolution};
pub use oracle::CachedOracle;

use crate::simplified_model::{Duty, SimplifiedParams};
use crate::{FuelModel, Result};

/// Diagnostics for one fitting step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: String,
    /// Root-mean-square residual of the step's fit.
    pub rms: f64,
    /// Quadrature grid dimensions.
    pub grid: Vec<usize>,
    pub points_used: usize,
    pub excluded_infeasible: usize,
    /// Points dropped because the floor or fuel-cut sets the fuel rate.
    pub excluded_fuel_cut: usize,
    /// Points outside the oracle's domain or without a detectable crossing.
    pub excluded_other: usize,
    /// Coefficients held at zero by their nonnegativity constraint.
    pub active_constraints: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub duty: Duty,
    pub v_c: Option<f64>,
    pub steps: Vec<StepReport>,
    pub feasible_region: Vec<StepReport>,
    pub oracle_evaluations: usize,
    pub cache_hits: usize,
}

impl FitReport {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the whole pipeline against `oracle` and names the result `name`.
pub fn reduce<M: FuelModel>(oracle: M, name: &str) -> Result<(SimplifiedParams, FitReport)> {
    let cached = CachedOracle::new(oracle);
    let detection = detect_duty(&cached)?;
    let fuel = fit_fuel(&cached, &detection)?;
    let feasible = fit_feasible_region(&cached)?;
    let params = SimplifiedParams::new(name, fuel.floor, fuel.poly, feasible.boundary)?;
    let report = FitReport {
        duty: detection.duty,
        v_c: detection.v_c,
        steps: fuel.steps,
        feasible_region: feasible.steps,
        oracle_evaluations: cached.evaluations(),
        cache_hits: cached.hits(),
    };
    Ok((params, report))
}
