//! Bisection on sign changes and on boolean predicates.

use crate::{FuelModel, OperatingPoint, Result};

/// Default abscissa tolerance.
pub const TOLERANCE: f64 = 1e-4;
/// Bracket used when probing the largest feasible acceleration, m/s².
pub const ACCEL_FLOOR: f64 = -1.0;
pub const ACCEL_CEILING: f64 = 20.0;

/// Finds a root of `f` on `[lo, hi]` to within `tol`. Returns `None` when
/// `f` has the same strict sign at both ends.
pub fn bisect_root<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Option<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi) = (lo, hi);
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if flo == 0.0 {
        return Ok(Some(lo));
    }
    if fhi == 0.0 {
        return Ok(Some(hi));
    }
    if (flo > 0.0) == (fhi > 0.0) {
        return Ok(None);
    }
    let lo_positive = flo > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok(Some(mid));
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Locates where `p` flips between `lo` and `hi`, assuming a single
/// transition. Returns the final bracket, of width at most `tol`, or `None`
/// when `p(lo) == p(hi)`.
pub fn bisect_transition<P>(mut p: P, lo: f64, hi: f64, tol: f64) -> Result<Option<(f64, f64)>>
where
    P: FnMut(f64) -> Result<bool>,
{
    let at_lo = p(lo)?;
    if p(hi)? == at_lo {
        return Ok(None);
    }
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p(mid)? == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some((lo, hi)))
}

/// Outcome of probing for the largest feasible acceleration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ceiling {
    Found(f64),
    /// Infeasible already at [`ACCEL_FLOOR`].
    BelowFloor,
    /// Still feasible at [`ACCEL_CEILING`].
    Unbounded,
}

impl Ceiling {
    pub fn found(self) -> Option<f64> {
        match self {
            Ceiling::Found(a) => Some(a),
            _ => None,
        }
    }
}

/// Largest feasible acceleration at `(v, theta)`, by bisection on the
/// model's feasibility flag over `[ACCEL_FLOOR, ACCEL_CEILING]`.
pub fn max_feasible_accel<M: FuelModel + ?Sized>(model: &M, v: f64, theta: f64) -> Result<Ceiling> {
    let feasible = |a: f64| Ok(model.sample(OperatingPoint::new(v, a, theta))?.feasible);
    if !feasible(ACCEL_FLOOR)? {
        return Ok(Ceiling::BelowFloor);
    }
    if feasible(ACCEL_CEILING)? {
        return Ok(Ceiling::Unbounded);
    }
    let (lo, hi) = bisect_transition(feasible, ACCEL_FLOOR, ACCEL_CEILING, TOLERANCE)?
        .expect("endpoints differ");
    Ok(Ceiling::Found(0.5 * (lo + hi)))
}
