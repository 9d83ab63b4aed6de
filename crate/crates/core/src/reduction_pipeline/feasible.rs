//! Fit of the feasible-acceleration boundary
//! `a_max(v, θ) = min(b1, b2/v − b3 v²) − min(b4, b5 + b6 v)·θ`.

use nalgebra::{DMatrix, DVector};

use super::bisect::{max_feasible_accel, Ceiling};
use super::nnls::nnls;
use super::StepReport;
use crate::linalg::linspace;
use crate::simplified_model::FeasibilityBoundary;
use crate::{Error, FuelModel, Result};

const STAGE: &str = "fit_feasible_region";

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleFit {
    pub boundary: FeasibilityBoundary,
    pub steps: Vec<StepReport>,
}

fn sse(points: &[(f64, f64)], model: impl Fn(f64) -> f64) -> f64 {
    points.iter().map(|&(x, y)| (model(x) - y).powi(2)).sum()
}

fn mean(ys: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = ys.fold((0.0, 0usize), |(s, n), y| (s + y, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Nonnegative least squares of `y` on per-point features.
fn nn_fit(points: &[(f64, f64)], features: impl Fn(f64) -> [f64; 2]) -> Result<[f64; 2]> {
    let a = DMatrix::from_fn(points.len(), 2, |i, j| features(points[i].0)[j]);
    let b = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let c = nnls(&a, &b)?.coeffs;
    Ok([c[0], c[1]])
}

/// `min(b1, b2/x − b3 x²)` with the flat part at low `x`.
fn flat_then_curve(b: [f64; 3], x: f64) -> f64 {
    if x == 0.0 {
        b[0]
    } else {
        b[0].min(b[1] / x - b[2] * x * x)
    }
}

fn fit_flat_curve(flat: &[(f64, f64)], curve: &[(f64, f64)]) -> Result<Option<[f64; 3]>> {
    if curve.len() < 2 || curve.iter().any(|p| p.0 <= 0.0) {
        return Ok(None);
    }
    let Some(b1) = mean(flat.iter().map(|p| p.1)) else {
        return Ok(None);
    };
    let [b2, b3] = nn_fit(curve, |x| [1.0 / x, -x * x])?;
    Ok(Some([b1, b2, b3]))
}

/// Profiles the breakpoint of `min(b1, b2/v − b3 v²)` over the sorted
/// abscissae, then reassigns points to the active branch once and refits.
pub(crate) fn profile_flat_then_curve(points: &[(f64, f64)]) -> Result<([f64; 3], f64)> {
    let mut best: Option<([f64; 3], f64)> = None;
    for k in 1..points.len() {
        if let Some(b) = fit_flat_curve(&points[..k], &points[k..])? {
            let e = sse(points, |x| flat_then_curve(b, x));
            if best.is_none_or(|(_, be)| e < be) {
                best = Some((b, e));
            }
        }
    }
    let (b, e) = best.ok_or_else(|| Error::fit(STAGE, "too few speeds to fit the ceiling"))?;
    let (flat, curve): (Vec<_>, Vec<_>) = points
        .iter()
        .partition(|&&(x, _)| x == 0.0 || b[0] <= b[1] / x - b[2] * x * x);
    if let Some(r) = fit_flat_curve(&flat, &curve)? {
        let er = sse(points, |x| flat_then_curve(r, x));
        if er < e {
            return Ok((r, er));
        }
    }
    Ok((b, e))
}

/// `min(b4, b5 + b6 v)` with the linear part at low `v`.
fn line_then_flat(b: [f64; 3], x: f64) -> f64 {
    b[0].min(b[1] + b[2] * x)
}

fn fit_line_flat(line: &[(f64, f64)], flat: &[(f64, f64)], x_max: f64) -> Result<Option<[f64; 3]>> {
    match (line.len(), mean(flat.iter().map(|p| p.1))) {
        (0, Some(b4)) => Ok(Some([b4, b4, 0.0])),
        (1, _) => Ok(None),
        (_, flat_mean) => {
            let [b5, b6] = nn_fit(line, |x| [1.0, x])?;
            // No flat region: put the cap where it never binds.
            let b4 = flat_mean.unwrap_or(b5 + b6 * x_max);
            Ok(Some([b4, b5, b6]))
        }
    }
}

pub(crate) fn profile_line_then_flat(points: &[(f64, f64)]) -> Result<([f64; 3], f64)> {
    let x_max = points.last().map_or(0.0, |p| p.0);
    let mut best: Option<([f64; 3], f64)> = None;
    for k in 0..=points.len() {
        if let Some(b) = fit_line_flat(&points[..k], &points[k..], x_max)? {
            let e = sse(points, |x| line_then_flat(b, x));
            if best.is_none_or(|(_, be)| e < be) {
                best = Some((b, e));
            }
        }
    }
    let (b, e) = best.ok_or_else(|| Error::fit(STAGE, "too few speeds to fit the grade term"))?;
    let (line, flat): (Vec<_>, Vec<_>) = points.iter().partition(|&&(x, _)| b[1] + b[2] * x < b[0]);
    if let Some(r) = fit_line_flat(&line, &flat, x_max)? {
        let er = sse(points, |x| line_then_flat(r, x));
        if er < e {
            return Ok((r, er));
        }
    }
    Ok((b, e))
}

fn in_domain<M: FuelModel + ?Sized>(oracle: &M, v: f64, theta: f64) -> bool {
    oracle
        .domain()
        .is_none_or(|d| d.contains_speed(v) && theta >= d.theta.0 && theta <= d.theta.1)
}

/// Fits the six boundary coefficients from the oracle's feasibility flag.
///
/// The flat-road ceiling is probed at 500 speeds on `[0, 70]`. The grade
/// sensitivity comes from `a_max(v, −θ) − a_max(v, θ) = 2·min(b4, b5 + b6 v)·θ`
/// on a 200 × 150 grid over `v ∈ [0, 35]`, `θ ∈ [−0.03, 0.03]`.
pub fn fit_feasible_region<M: FuelModel + ?Sized>(oracle: &M) -> Result<FeasibleFit> {
    let mut ceiling = Vec::new();
    let (mut unbounded, mut below, mut outside) = (0, 0, 0);
    for v in linspace(0.0, 70.0, 500) {
        if !in_domain(oracle, v, 0.0) {
            outside += 1;
            continue;
        }
        match max_feasible_accel(oracle, v, 0.0)? {
            Ceiling::Found(a) => ceiling.push((v, a)),
            Ceiling::Unbounded => unbounded += 1,
            Ceiling::BelowFloor => below += 1,
        }
    }
    if ceiling.is_empty() {
        let reason = if unbounded > 0 {
            "no infeasible acceleration found up to 20 m/s^2; the oracle has no ceiling"
        } else {
            "no speed with a feasible acceleration in [-1, 20] m/s^2"
        };
        return Err(Error::fit(STAGE, reason));
    }
    let ([b1, b2, b3], e1) = profile_flat_then_curve(&ceiling)?;
    let step1 = StepReport {
        step: "feasible_step1".into(),
        rms: (e1 / ceiling.len() as f64).sqrt(),
        grid: vec![500],
        points_used: ceiling.len(),
        excluded_infeasible: below,
        excluded_fuel_cut: 0,
        excluded_other: unbounded + outside,
        active_constraints: Vec::new(),
    };

    let thetas = linspace(-0.03, 0.03, 150);
    let positive: Vec<f64> = thetas.iter().copied().filter(|&t| t > 0.0).collect();
    let mut slopes = Vec::new();
    let mut pairs = Vec::new();
    let mut skipped = 0;
    for v in linspace(0.0, 35.0, 200) {
        let (mut num, mut den) = (0.0, 0.0);
        let mut here = Vec::new();
        for &t in &positive {
            if !in_domain(oracle, v, t) || !in_domain(oracle, v, -t) {
                skipped += 1;
                continue;
            }
            let up = max_feasible_accel(oracle, v, t)?.found();
            let down = max_feasible_accel(oracle, v, -t)?.found();
            match (up, down) {
                (Some(u), Some(d)) => {
                    let diff = d - u;
                    num += diff * 2.0 * t;
                    den += 4.0 * t * t;
                    here.push((t, diff));
                }
                _ => skipped += 1,
            }
        }
        if den > 0.0 {
            slopes.push((v, num / den));
            pairs.push((v, here));
        }
    }
    let ([b4, b5, b6], _) = if slopes.is_empty() {
        return Err(Error::fit(STAGE, "no mirrored grade pairs with a finite ceiling"));
    } else if slopes.iter().all(|&(_, g)| g == 0.0) {
        ([0.0; 3], 0.0)
    } else {
        profile_line_then_flat(&slopes)?
    };
    let (mut sq, mut n) = (0.0, 0usize);
    for (v, here) in &pairs {
        let g = line_then_flat([b4, b5, b6], *v);
        for &(t, diff) in here {
            sq += (diff - 2.0 * g * t).powi(2);
            n += 1;
        }
    }
    let step2 = StepReport {
        step: "feasible_step2".into(),
        rms: (sq / n.max(1) as f64).sqrt(),
        grid: vec![200, 150],
        points_used: n,
        excluded_infeasible: 0,
        excluded_fuel_cut: 0,
        excluded_other: skipped,
        active_constraints: Vec::new(),
    };
    Ok(FeasibleFit {
        boundary: FeasibilityBoundary([b1, b2, b3, b4, b5, b6]),
        steps: vec![step1, step2],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{FnModel, ModelSample, OperatingPoint};

    #[test]
    fn synthetic_boundary_is_recovered() {
        let truth = FeasibilityBoundary([3.0, 40.0, 0.0, 50.0, 9.0, 0.0]);
        let m = FnModel(move |pt: OperatingPoint| ModelSample {
            fuel_rate: 1.0,
            feasible: pt.a <= truth.eval(pt.v, pt.theta),
        });
        let fit = fit_feasible_region(&m).unwrap();
        let [b1, b2, b3, b4, b5, b6] = fit.boundary.0;
        assert!((b1 - 3.0).abs() < 0.03, "{b1}");
        assert!((b2 - 40.0).abs() < 0.4, "{b2}");
        assert!(b3.abs() < 1e-3, "{b3}");
        assert!((b4.min(b5 + b6 * 35.0) - 9.0).abs() < 0.09);
        assert!((b5 - 9.0).abs() < 0.09 && b6.abs() < 1e-3, "{b5} {b6}");
    }

    #[test]
    fn grade_symmetric_oracle_has_zero_grade_term() {
        let m = FnModel(|pt: OperatingPoint| ModelSample {
            fuel_rate: 1.0,
            feasible: pt.a <= 2.0,
        });
        let fit = fit_feasible_region(&m).unwrap();
        assert_eq!(&fit.boundary.0[3..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn missing_ceiling_names_the_stage() {
        let m = FnModel(|_| ModelSample { fuel_rate: 1.0, feasible: true });
        let err = fit_feasible_region(&m).unwrap_err();
        assert!(err.to_string().contains("fit_feasible_region"), "{err}");
    }
}
