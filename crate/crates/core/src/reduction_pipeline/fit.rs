//! Duty detection and the stepwise fit of the fuel-rate polynomial.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::bisect::{bisect_transition, TOLERANCE};
use super::nnls::nnls;
use super::StepReport;
use crate::linalg::{least_squares, linspace};
use crate::simplified_model::{Duty, FuelCutBoundary, FuelFloor, FuelPolynomial};
use crate::{Error, FuelModel, OperatingPoint, Result};

/// Acceleration at which fuel-cut and floor behaviour are probed, m/s².
const PROBE_ACCEL: f64 = -3.0;
const V_MAX: f64 = 35.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DutyDetection {
    pub duty: Duty,
    /// Fuel-cut speed, light duty only.
    pub v_c: Option<f64>,
}

fn in_domain<M: FuelModel + ?Sized>(oracle: &M, pt: OperatingPoint) -> bool {
    oracle.domain().is_none_or(|d| d.contains(pt))
}

/// Classifies the oracle by scanning `f(v, −3, 0)` over 100 speeds on
/// `[0, 35]`. A drop from positive to zero fuel marks a light duty vehicle,
/// and the fuel-cut speed is then refined by bisection.
pub fn detect_duty<M: FuelModel + ?Sized>(oracle: &M) -> Result<DutyDetection> {
    let mut probe = Vec::new();
    for v in linspace(0.0, V_MAX, 100) {
        let pt = OperatingPoint::new(v, PROBE_ACCEL, 0.0);
        if !in_domain(oracle, pt) {
            continue;
        }
        let s = oracle.sample(pt)?;
        if s.feasible {
            probe.push((v, s.fuel_rate));
        }
    }
    if probe.is_empty() {
        return Err(Error::fit(
            "detect_duty",
            "oracle is infeasible along the whole probe line a = -3, theta = 0",
        ));
    }
    let drop = probe.windows(2).find(|w| w[0].1 > 0.0 && w[1].1 <= 0.0);
    let Some(w) = drop else {
        return Ok(DutyDetection {
            duty: Duty::MediumHeavyDuty,
            v_c: None,
        });
    };
    let fuelled = |v: f64| Ok(oracle.sample(OperatingPoint::new(v, PROBE_ACCEL, 0.0))?.fuel_rate > 0.0);
    let (lo, hi) = bisect_transition(fuelled, w[0].0, w[1].0, TOLERANCE)?
        .expect("scan found a transition");
    Ok(DutyDetection {
        duty: Duty::LightDuty,
        v_c: Some(0.5 * (lo + hi)),
    })
}

/// Fitted fuel-rate part of a simplified model.
#[derive(Debug, Clone, PartialEq)]
pub struct FuelFit {
    pub floor: FuelFloor,
    pub poly: FuelPolynomial,
    pub steps: Vec<StepReport>,
}

struct Sampled {
    pt: OperatingPoint,
    f: f64,
}

#[derive(Default)]
struct Exclusions {
    infeasible: usize,
    fuel_cut: usize,
    other: usize,
}

fn sample_grid<M, I, K>(oracle: &M, points: I, keep: K) -> Result<(Vec<Sampled>, Exclusions)>
where
    M: FuelModel + ?Sized,
    I: IntoIterator<Item = OperatingPoint>,
    K: Fn(OperatingPoint, f64) -> bool,
{
    let mut out = Vec::new();
    let mut ex = Exclusions::default();
    for pt in points {
        if !in_domain(oracle, pt) {
            ex.other += 1;
            continue;
        }
        let s = oracle.sample(pt)?;
        if !s.feasible {
            ex.infeasible += 1;
        } else if !keep(pt, s.fuel_rate) {
            ex.fuel_cut += 1;
        } else {
            out.push(Sampled { pt, f: s.fuel_rate });
        }
    }
    Ok((out, ex))
}

fn grid2(vs: &[f64], ys: &[f64], make: impl Fn(f64, f64) -> OperatingPoint) -> Vec<OperatingPoint> {
    vs.iter()
        .flat_map(|&v| ys.iter().map(move |&y| (v, y)))
        .map(|(v, y)| make(v, y))
        .collect()
}

/// Nonnegative fit of `target` on `basis` over the kept samples.
fn nnls_step(
    step: &str,
    grid: Vec<usize>,
    data: &[Sampled],
    ex: Exclusions,
    names: &[&str],
    basis: impl Fn(&OperatingPoint) -> Vec<f64>,
    target: impl Fn(&Sampled) -> f64,
) -> Result<(Vec<f64>, StepReport)> {
    if data.is_empty() {
        return Err(Error::fit(step, "every grid point was excluded"));
    }
    let a = DMatrix::from_fn(data.len(), names.len(), |i, j| basis(&data[i].pt)[j]);
    let b = DVector::from_iterator(data.len(), data.iter().map(&target));
    let sol = nnls(&a, &b).map_err(|e| Error::fit(step, e.to_string()))?;
    let report = StepReport {
        step: step.to_string(),
        rms: sol.rms,
        grid,
        points_used: data.len(),
        excluded_infeasible: ex.infeasible,
        excluded_fuel_cut: ex.fuel_cut,
        excluded_other: ex.other,
        active_constraints: sol.active.iter().map(|&j| names[j].to_string()).collect(),
    };
    Ok((sol.coeffs, report))
}

/// Fits the floor and the polynomial `C + P·a + Q·a² + Z·θ` to the oracle.
///
/// Each step holds the coefficients of the earlier steps fixed and fits the
/// next term to the remaining difference, with all polynomial coefficients
/// constrained nonnegative.
pub fn fit_fuel<M: FuelModel + ?Sized>(oracle: &M, detection: &DutyDetection) -> Result<FuelFit> {
    let light = detection.duty == Duty::LightDuty;
    let mut steps = Vec::new();
    let speeds = linspace(0.0, V_MAX, 100);

    let floor = if light {
        let v_c = detection
            .v_c
            .ok_or_else(|| Error::fit("step1", "light duty detection without a fuel-cut speed"))?;
        let (floor, report) = fit_fuel_cut(oracle, v_c)?;
        steps.push(report);
        floor
    } else {
        let (data, ex) = sample_grid(
            oracle,
            speeds.iter().map(|&v| OperatingPoint::new(v, PROBE_ACCEL, 0.0)),
            |_, _| true,
        )?;
        let (h, report) = nnls_step("step1_prime", vec![100], &data, ex, &["h0", "h1"], |p| vec![1.0, p.v], |s| s.f)?;
        steps.push(report);
        FuelFloor::Linear { h0: h[0], h1: h[1] }
    };

    // Points where the floor, not the polynomial, sets the fuel rate.
    let keep = |pt: OperatingPoint, f: f64| match floor {
        FuelFloor::FuelCut { v_c, beta, .. } => (pt.v < v_c && f >= beta) || (pt.v >= v_c && f > 0.0),
        FuelFloor::Linear { .. } => f > 0.0,
    };

    let (data, ex) = sample_grid(oracle, speeds.iter().map(|&v| OperatingPoint::new(v, 0.0, 0.0)), |_, _| true)?;
    let (c, report) = nnls_step(
        "step2",
        vec![100],
        &data,
        ex,
        &["c0", "c1", "c2", "c3"],
        |p| vec![1.0, p.v, p.v * p.v, p.v.powi(3)],
        |s| s.f,
    )?;
    steps.push(report);
    let cruise = |v: f64| c[0] + v * (c[1] + v * (c[2] + v * c[3]));

    let a_lo = if light { -0.3 } else { 0.0 };
    let pts = grid2(&speeds, &linspace(a_lo, 0.3, 100), |v, a| OperatingPoint::new(v, a, 0.0));
    let (data, ex) = sample_grid(oracle, pts, keep)?;
    let (p, report) = nnls_step(
        "step3",
        vec![100, 100],
        &data,
        ex,
        &["p0", "p1", "p2"],
        |pt| vec![pt.a, pt.a * pt.v, pt.a * pt.v * pt.v],
        |s| s.f - cruise(s.pt.v),
    )?;
    steps.push(report);
    let accel = |v: f64| p[0] + v * (p[1] + v * p[2]);

    let pts = grid2(&speeds, &linspace(0.0, 3.0, 100), |v, a| OperatingPoint::new(v, a, 0.0));
    let (data, ex) = sample_grid(oracle, pts, keep)?;
    let (q, report) = nnls_step(
        "step4",
        vec![100, 100],
        &data,
        ex,
        &["q0", "q1"],
        |pt| vec![pt.a * pt.a, pt.v * pt.a * pt.a],
        |s| s.f - cruise(s.pt.v) - accel(s.pt.v) * s.pt.a,
    )?;
    steps.push(report);

    let theta_hi = if light { 0.03 } else { 0.02 };
    let pts = grid2(&speeds, &linspace(0.0, theta_hi, 100), |v, th| OperatingPoint::new(v, 0.0, th));
    let (data, ex) = sample_grid(oracle, pts, keep)?;
    let (z, report) = nnls_step(
        "step5",
        vec![100, 100],
        &data,
        ex,
        &["z0", "z1", "z2"],
        |pt| vec![pt.theta, pt.v * pt.theta, pt.v * pt.v * pt.theta],
        |s| s.f - cruise(s.pt.v),
    )?;
    steps.push(report);

    Ok(FuelFit {
        floor,
        poly: FuelPolynomial {
            cruise: [c[0], c[1], c[2], c[3]],
            accel: [p[0], p[1], p[2]],
            accel_sq: [q[0], q[1]],
            grade: [z[0], z[1], z[2]],
        },
        steps,
    })
}

/// Low-speed floor `β` and the fuel-cut acceleration boundary.
fn fit_fuel_cut<M: FuelModel + ?Sized>(oracle: &M, v_c: f64) -> Result<(FuelFloor, StepReport)> {
    let beta = oracle.sample(OperatingPoint::new(0.0, PROBE_ACCEL, 0.0))?.fuel_rate;
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::fit("step1", format!("idle floor f(0, -3, 0) = {beta} is not positive")));
    }
    if v_c + 1.0 > V_MAX {
        return Err(Error::fit(
            "step1",
            format!("fuel-cut speed {v_c:.3} m/s leaves no speeds for the boundary grid"),
        ));
    }
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    let mut missing = 0;
    for &v in &linspace(v_c + 1.0, V_MAX, 50) {
        for &theta in &linspace(-0.03, 0.0, 50) {
            let fuelled = |a: f64| Ok(oracle.sample(OperatingPoint::new(v, a, theta))?.fuel_rate > 0.0);
            match bisect_transition(fuelled, -3.0, 3.0, TOLERANCE)? {
                Some((lo, hi)) => {
                    rows.push(vec![1.0, v, theta, v * v, v * theta]);
                    targets.push(0.5 * (lo + hi));
                }
                None => missing += 1,
            }
        }
    }
    let names = ["a0", "a1", "a2", "a3", "a4"];
    if rows.len() < names.len() {
        return Err(Error::fit("step1", "too few fuel-cut crossings on the boundary grid"));
    }
    let a = crate::linalg::design_from_rows(&rows, names.len());
    let b = DVector::from_vec(targets);
    let ls = least_squares(&a, &b, &names).map_err(|e| Error::fit("step1", e.to_string()))?;
    let report = StepReport {
        step: "step1".into(),
        rms: ls.rms,
        grid: vec![50, 50],
        points_used: rows.len(),
        excluded_infeasible: 0,
        excluded_fuel_cut: 0,
        excluded_other: missing,
        active_constraints: Vec::new(),
    };
    let c = &ls.coeffs;
    Ok((
        FuelFloor::FuelCut {
            v_c,
            beta,
            boundary: FuelCutBoundary([c[0], c[1], c[2], c[3], c[4]]),
        },
        report,
    ))
}
