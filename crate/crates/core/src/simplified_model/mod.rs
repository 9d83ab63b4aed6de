//! Closed-form simplified fuel model and its feasible-acceleration boundary.
//!
//! The fuel rate is `max{floor, f_p}` where
//!
//! ```text
//! f_p(v, a, θ) = C(v) + P(v)·a₊ + Q(v)·a₊² + Z(v)·θ,   a₊ = max(a, a_min(v))
//! a_min(v)     = -P(v) / (2 Q(v))
//! ```
//!
//! with `C` cubic, `P` and `Z` quadratic, and `Q` linear in speed. For light
//! duty vehicles the floor is `β` up to the fuel-cut speed `v_c` and zero
//! above it; medium and heavy duty vehicles never fuel-cut and use the linear
//! floor `h0 + h1·v`. The feasible region is `a ≤ a_max(v, θ)` with
//!
//! ```text
//! a_max(v, θ) = min(b1, b2/v − b3·v²) − min(b4, b5 + b6·v)·θ
//! ```

mod batch;
mod params;

use serde::{Deserialize, Serialize};

pub use batch::{read_points_csv, write_eval_csv};
pub use params::{bundled, bundled_all, ParamFile, BUNDLED_VEHICLES};

use crate::{Error, FuelModel, ModelSample, OperatingPoint, Result};

/// Lower heating value used for spark-ignition (light duty) vehicles, J/g.
pub const SPARK_IGNITION_SPECIFIC_ENERGY: f64 = 43_500.0;
/// Lower heating value used for compression-ignition (medium/heavy duty)
/// vehicles, J/g.
pub const COMPRESSION_IGNITION_SPECIFIC_ENERGY: f64 = 42_800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Duty {
    #[serde(rename = "light")]
    LightDuty,
    #[serde(rename = "medium_heavy")]
    MediumHeavyDuty,
}

/// Fuel-cut acceleration boundary `a_c(v, θ) = a0 + a1 v + a2 θ + a3 v² + a4 v θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelCutBoundary(pub [f64; 5]);

impl FuelCutBoundary {
    pub fn eval(&self, v: f64, theta: f64) -> f64 {
        let [a0, a1, a2, a3, a4] = self.0;
        a0 + a1 * v + a2 * theta + a3 * v * v + a4 * v * theta
    }
}

/// The duty-class specific lower bound on the fuel rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FuelFloor {
    /// Light duty: `β` for `v ≤ v_c`, zero above.
    FuelCut {
        v_c: f64,
        beta: f64,
        boundary: FuelCutBoundary,
    },
    /// Medium/heavy duty: `h0 + h1·v`.
    Linear { h0: f64, h1: f64 },
}

impl FuelFloor {
    pub fn duty(&self) -> Duty {
        match self {
            FuelFloor::FuelCut { .. } => Duty::LightDuty,
            FuelFloor::Linear { .. } => Duty::MediumHeavyDuty,
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            // Above v_c the floor is zero whether or not a < a_c(v, θ).
            FuelFloor::FuelCut { v_c, beta, .. } => {
                if v <= v_c {
                    beta
                } else {
                    0.0
                }
            }
            FuelFloor::Linear { h0, h1 } => h0 + h1 * v,
        }
    }
}

/// Polynomial coefficients of `f_p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelPolynomial {
    /// `c0..c3` of `C(v)`.
    pub cruise: [f64; 4],
    /// `p0..p2` of `P(v)`.
    pub accel: [f64; 3],
    /// `q0, q1` of `Q(v)`.
    pub accel_sq: [f64; 2],
    /// `z0..z2` of `Z(v)`.
    pub grade: [f64; 3],
}

impl FuelPolynomial {
    pub fn cruise_at(&self, v: f64) -> f64 {
        let [c0, c1, c2, c3] = self.cruise;
        c0 + v * (c1 + v * (c2 + v * c3))
    }

    pub fn accel_at(&self, v: f64) -> f64 {
        let [p0, p1, p2] = self.accel;
        p0 + v * (p1 + v * p2)
    }

    pub fn accel_sq_at(&self, v: f64) -> f64 {
        self.accel_sq[0] + self.accel_sq[1] * v
    }

    pub fn grade_at(&self, v: f64) -> f64 {
        let [z0, z1, z2] = self.grade;
        z0 + v * (z1 + v * z2)
    }

    /// Vertex of the quadratic in `a`, or `None` in the degenerate case
    /// `Q(v) = 0 < P(v)`, where the vertex recedes to −∞.
    pub fn vertex(&self, v: f64) -> Option<f64> {
        let p = self.accel_at(v);
        let q = self.accel_sq_at(v);
        if q > 0.0 {
            Some(-p / (2.0 * q))
        } else if p == 0.0 {
            Some(0.0)
        } else {
            None
        }
    }

    /// Capped acceleration `a₊ = max(a, a_min(v))`. In the degenerate case
    /// this is the `Q → 0⁺` limit, i.e. `a` itself.
    pub fn capped_accel(&self, v: f64, a: f64) -> f64 {
        match self.vertex(v) {
            Some(a_min) => a.max(a_min),
            None => a,
        }
    }

    pub fn eval(&self, v: f64, a: f64, theta: f64) -> f64 {
        let a_plus = self.capped_accel(v, a);
        self.cruise_at(v)
            + self.accel_at(v) * a_plus
            + self.accel_sq_at(v) * a_plus * a_plus
            + self.grade_at(v) * theta
    }
}

/// Six coefficients of the feasible-acceleration boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityBoundary(pub [f64; 6]);

impl FeasibilityBoundary {
    /// Flat-road part `min(b1, b2/v − b3 v²)`; `b2/v` is `+∞` at `v = 0`.
    pub fn flat(&self, v: f64) -> f64 {
        let [b1, b2, b3, ..] = self.0;
        if v == 0.0 {
            b1
        } else {
            b1.min(b2 / v - b3 * v * v)
        }
    }

    /// Grade sensitivity `min(b4, b5 + b6 v)`.
    pub fn grade_slope(&self, v: f64) -> f64 {
        let [_, _, _, b4, b5, b6] = self.0;
        b4.min(b5 + b6 * v)
    }

    pub fn eval(&self, v: f64, theta: f64) -> f64 {
        self.flat(v) - self.grade_slope(v) * theta
    }
}

/// Parameters of one simplified vehicle model.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplifiedParams {
    pub name: String,
    pub floor: FuelFloor,
    pub poly: FuelPolynomial,
    pub feasibility: FeasibilityBoundary,
    specific_energy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Feasibility {
    Feasible = 0,
    Infeasible = 1,
    NegativeSpeed = 2,
}

impl Feasibility {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplifiedEval {
    /// g/s, never negative.
    pub fuel_rate: f64,
    /// Chemical power of the fuel flow, W.
    pub power: f64,
    pub feasibility: Feasibility,
    /// The acceleration was replaced by `a_max(v, θ)` before evaluation.
    pub projected: bool,
}

/// Breakdown of the fuel-rate evaluation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelTerms {
    pub floor: f64,
    pub polynomial: f64,
    pub a_plus: f64,
    /// `max(floor, polynomial, 0)`.
    pub fuel_rate: f64,
}

impl SimplifiedParams {
    /// Builds and validates a parameter set.
    pub fn new(
        name: impl Into<String>,
        floor: FuelFloor,
        poly: FuelPolynomial,
        feasibility: FeasibilityBoundary,
    ) -> Result<Self> {
        let params = Self {
            name: name.into(),
            floor,
            poly,
            feasibility,
            specific_energy: None,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn duty(&self) -> Duty {
        self.floor.duty()
    }

    /// Overrides the specific energy (J/g) used for the power output.
    pub fn with_specific_energy(mut self, joules_per_gram: f64) -> Result<Self> {
        if !(joules_per_gram.is_finite() && joules_per_gram > 0.0) {
            return Err(Error::Config(format!(
                "specific energy must be positive, got {joules_per_gram}"
            )));
        }
        self.specific_energy = Some(joules_per_gram);
        Ok(self)
    }

    pub fn specific_energy(&self) -> f64 {
        self.specific_energy.unwrap_or(match self.duty() {
            Duty::LightDuty => SPARK_IGNITION_SPECIFIC_ENERGY,
            Duty::MediumHeavyDuty => COMPRESSION_IGNITION_SPECIFIC_ENERGY,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: String| Err(Error::Config(format!("{}: {what}", self.name)));
        let p = &self.poly;
        let all: Vec<f64> = p
            .cruise
            .iter()
            .chain(&p.accel)
            .chain(&p.accel_sq)
            .chain(&p.grade)
            .chain(&self.feasibility.0)
            .copied()
            .collect();
        if all.iter().any(|x| !x.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        let labelled = [
            ("c", &p.cruise[..]),
            ("p", &p.accel[..]),
            ("q", &p.accel_sq[..]),
            ("z", &p.grade[..]),
        ];
        for (prefix, coeffs) in labelled {
            if let Some(i) = coeffs.iter().position(|&c| c < 0.0) {
                return bad(format!("{prefix}{i} = {} is negative", coeffs[i]));
            }
        }
        match self.floor {
            FuelFloor::FuelCut { v_c, beta, boundary } => {
                if !(v_c > 0.0 && v_c <= 35.0) {
                    return bad(format!("v_c = {v_c} outside (0, 35]"));
                }
                if !(beta > 0.0 && beta.is_finite()) {
                    return bad(format!("beta = {beta} must be positive"));
                }
                if boundary.0.iter().any(|x| !x.is_finite()) {
                    return bad("non-finite fuel-cut coefficient".into());
                }
            }
            FuelFloor::Linear { h0, h1 } => {
                if !(h0 >= 0.0 && h1 >= 0.0 && h0.is_finite() && h1.is_finite()) {
                    return bad(format!("floor h0 = {h0}, h1 = {h1} must be nonnegative"));
                }
            }
        }
        let [b1, b2, b3, b4, b5, b6] = self.feasibility.0;
        if !(b1 > 0.0 && b2 > 0.0) {
            return bad(format!("b1 = {b1}, b2 = {b2} must be positive"));
        }
        if b3 < 0.0 || b4 < 0.0 || b5 < 0.0 || b6 < 0.0 {
            return bad("b3..b6 must be nonnegative".into());
        }
        if p.accel_sq[0] == 0.0 && p.accel[0] > 0.0 {
            log::warn!(
                "{}: q0 = 0 with p0 > 0, so a_min(0) is unbounded; evaluation at v = 0 uses a₊ = a",
                self.name
            );
        }
        if p.accel_sq == [0.0, 0.0] && p.accel.iter().any(|&c| c > 0.0) {
            log::warn!("{}: Q(v) vanishes identically; a_min is undefined", self.name);
        }
        Ok(())
    }

    /// Fuel-cut boundary `a_c(v, θ)`; light duty only.
    pub fn fuel_cut_boundary(&self, v: f64, theta: f64) -> Result<f64> {
        finite(&[v, theta])?;
        match self.floor {
            FuelFloor::FuelCut { boundary, .. } => Ok(boundary.eval(v, theta)),
            FuelFloor::Linear { .. } => Err(Error::Unsupported(format!(
                "{} is a medium/heavy duty vehicle and has no fuel-cut boundary",
                self.name
            ))),
        }
    }

    /// Acceleration at the vertex of the quadratic, `−P(v)/(2Q(v))`.
    pub fn a_min(&self, v: f64) -> Result<f64> {
        finite(&[v])?;
        self.poly.vertex(v).ok_or(Error::Singularity { v })
    }

    /// Largest feasible acceleration at speed `v ≥ 0` and grade `theta`.
    pub fn a_max_feasible(&self, v: f64, theta: f64) -> Result<f64> {
        finite(&[v, theta])?;
        if v < 0.0 {
            return Err(Error::Input(format!("a_max requires v >= 0, got {v}")));
        }
        Ok(self.feasibility.eval(v, theta))
    }

    /// Fuel-rate terms at an explicit point, without feasibility handling.
    pub fn fuel_terms(&self, v: f64, a: f64, theta: f64) -> FuelTerms {
        let floor = self.floor.eval(v);
        let a_plus = self.poly.capped_accel(v, a);
        let polynomial = self.poly.eval(v, a, theta);
        FuelTerms {
            floor,
            polynomial,
            a_plus,
            fuel_rate: floor.max(polynomial).max(0.0),
        }
    }

    /// Evaluates the model at `pt`.
    ///
    /// Negative speeds return zero fuel with [`Feasibility::NegativeSpeed`].
    /// Infeasible accelerations are still evaluated unless `project` is set,
    /// in which case the acceleration is replaced by `a_max(v, θ)`.
    pub fn eval(&self, pt: OperatingPoint, project: bool) -> Result<SimplifiedEval> {
        pt.check_finite()?;
        if pt.v < 0.0 {
            return Ok(SimplifiedEval {
                fuel_rate: 0.0,
                power: 0.0,
                feasibility: Feasibility::NegativeSpeed,
                projected: false,
            });
        }
        let a_max = self.feasibility.eval(pt.v, pt.theta);
        let infeasible = pt.a > a_max;
        let projected = infeasible && project;
        let a = if projected { a_max } else { pt.a };
        let fuel_rate = self.fuel_terms(pt.v, a, pt.theta).fuel_rate;
        Ok(SimplifiedEval {
            fuel_rate,
            power: fuel_rate * self.specific_energy(),
            feasibility: if infeasible {
                Feasibility::Infeasible
            } else {
                Feasibility::Feasible
            },
            projected,
        })
    }

    pub fn eval_batch(&self, points: &[OperatingPoint], project: bool) -> Result<Vec<SimplifiedEval>> {
        points.iter().map(|&pt| self.eval(pt, project)).collect()
    }

    /// Evaluates on the tensor grid `speeds × accels × grades`, speed-major.
    pub fn eval_grid(
        &self,
        speeds: &[f64],
        accels: &[f64],
        grades: &[f64],
        project: bool,
    ) -> Result<Vec<SimplifiedEval>> {
        let mut out = Vec::with_capacity(speeds.len() * accels.len() * grades.len());
        for &v in speeds {
            for &a in accels {
                for &theta in grades {
                    out.push(self.eval(OperatingPoint::new(v, a, theta), project)?);
                }
            }
        }
        Ok(out)
    }
}

impl FuelModel for SimplifiedParams {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        let e = self.eval(pt, false)?;
        Ok(ModelSample {
            fuel_rate: e.fuel_rate,
            feasible: e.feasibility == Feasibility::Feasible,
        })
    }
}

fn finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("non-finite argument in {xs:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sedan() -> SimplifiedParams {
        bundled("compact_sedan").unwrap()
    }

    fn tractor() -> SimplifiedParams {
        bundled("class8_tractor").unwrap()
    }

    #[test]
    fn compact_sedan_idle_point() {
        let e = sedan().eval(OperatingPoint::new(0.0, 0.0, 0.0), false).unwrap();
        assert!((e.fuel_rate - 0.1592).abs() < 1e-12);
        assert_eq!(e.feasibility, Feasibility::Feasible);
        assert!(!e.projected);
    }

    #[test]
    fn compact_sedan_hard_braking_is_zero() {
        let e = sedan().eval(OperatingPoint::new(10.0, -3.0, 0.0), false).unwrap();
        assert_eq!(e.fuel_rate, 0.0);
    }

    #[test]
    fn compact_sedan_cruise_at_30() {
        let e = sedan().eval(OperatingPoint::new(30.0, 0.0, 0.0), false).unwrap();
        assert!((e.fuel_rate - 1.4240).abs() < 1e-4, "{}", e.fuel_rate);
    }

    #[test]
    fn tractor_floor_dominates_under_braking() {
        let e = tractor().eval(OperatingPoint::new(10.0, -3.0, 0.0), false).unwrap();
        assert!((e.fuel_rate - 0.7426).abs() < 1e-12, "{}", e.fuel_rate);
    }

    #[test]
    fn negative_speed_is_flagged() {
        for p in bundled_all() {
            let e = p.eval(OperatingPoint::new(-1.0, 0.0, 0.0), true).unwrap();
            assert_eq!(e.fuel_rate, 0.0);
            assert_eq!(e.feasibility.code(), 2);
        }
    }

    #[test]
    fn fuel_cut_boundary_values() {
        let s = sedan();
        assert!((s.fuel_cut_boundary(10.0, 0.0).unwrap() + 0.32302).abs() < 1e-5);
        assert_eq!(s.fuel_cut_boundary(0.0, 0.0).unwrap(), -0.2698);
        let pnd = bundled("class4_pnd").unwrap();
        assert!(matches!(pnd.fuel_cut_boundary(5.0, 0.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn a_min_values() {
        let s = sedan();
        assert!((s.a_min(10.0).unwrap() + 2.370).abs() < 1e-3);
        assert!((s.a_min(0.0).unwrap() + 9.357).abs() < 1e-3);
        // Midsize Sedan has q0 = 0 and p0 > 0.
        let m = bundled("midsize_sedan").unwrap();
        assert!(matches!(m.a_min(0.0), Err(Error::Singularity { .. })));
        assert!(m.a_min(1.0).is_ok());
    }

    #[test]
    fn zero_linear_coefficients_give_zero_vertex() {
        let mut s = sedan();
        s.poly.accel = [0.0; 3];
        assert_eq!(s.a_min(12.0).unwrap(), 0.0);
        s.poly.accel_sq = [0.0; 2];
        assert_eq!(s.a_min(12.0).unwrap(), 0.0);
    }

    #[test]
    fn a_max_values() {
        let s = sedan();
        assert!((s.a_max_feasible(20.0, 0.0).unwrap() - 1.9952).abs() < 1e-4);
        assert!((s.a_max_feasible(20.0, 0.01).unwrap() - 1.9065).abs() < 1e-4);
        assert_eq!(s.a_max_feasible(0.0, 0.0).unwrap(), 3.360);
        assert!(s.a_max_feasible(-1.0, 0.0).is_err());
    }

    #[test]
    fn singular_vertex_row_still_evaluates_at_rest() {
        let m = bundled("midsize_sedan").unwrap();
        let e = m.eval(OperatingPoint::new(0.0, 0.5, 0.0), false).unwrap();
        let expected = 0.1983 + 0.2396 * 0.5;
        assert!((e.fuel_rate - expected).abs() < 1e-12);
    }

    #[test]
    fn projection_clamps_to_boundary() {
        let s = sedan();
        let pt = OperatingPoint::new(20.0, 3.0, 0.0);
        let raw = s.eval(pt, false).unwrap();
        let proj = s.eval(pt, true).unwrap();
        assert_eq!(raw.feasibility, Feasibility::Infeasible);
        assert!(!raw.projected);
        assert_eq!(proj.feasibility, Feasibility::Infeasible);
        assert!(proj.projected);
        let at_boundary = s
            .eval(OperatingPoint::new(20.0, s.a_max_feasible(20.0, 0.0).unwrap(), 0.0), false)
            .unwrap();
        assert_eq!(proj.fuel_rate, at_boundary.fuel_rate);
        assert!(proj.fuel_rate < raw.fuel_rate);
    }

    #[test]
    fn power_uses_specific_energy() {
        let s = sedan();
        let e = s.eval(OperatingPoint::new(30.0, 0.0, 0.0), false).unwrap();
        assert_eq!(e.power, e.fuel_rate * SPARK_IGNITION_SPECIFIC_ENERGY);
        let t = tractor().with_specific_energy(40_000.0).unwrap();
        let e = t.eval(OperatingPoint::new(10.0, 0.0, 0.0), false).unwrap();
        assert_eq!(e.power, e.fuel_rate * 40_000.0);
        assert!(tractor().with_specific_energy(-1.0).is_err());
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let s = sedan();
        assert!(matches!(
            s.eval(OperatingPoint::new(f64::NAN, 0.0, 0.0), false),
            Err(Error::Input(_))
        ));
        assert!(s.a_min(f64::INFINITY).is_err());
    }

    #[test]
    fn invalid_params_are_rejected() {
        let s = sedan();
        let mut poly = s.poly;
        poly.cruise[1] = -1.0;
        assert!(matches!(
            SimplifiedParams::new("bad", s.floor, poly, s.feasibility),
            Err(Error::Config(_))
        ));
        let floor = FuelFloor::FuelCut {
            v_c: 40.0,
            beta: 0.1,
            boundary: FuelCutBoundary([0.0; 5]),
        };
        assert!(SimplifiedParams::new("bad", floor, s.poly, s.feasibility).is_err());
        let b = FeasibilityBoundary([0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(SimplifiedParams::new("bad", s.floor, s.poly, b).is_err());
    }

    #[test]
    fn grid_matches_pointwise() {
        let s = sedan();
        let vs = [0.0, 5.0, 17.5];
        let accs = [-2.0, 0.0, 1.0];
        let gs = [-0.02, 0.0, 0.02];
        let grid = s.eval_grid(&vs, &accs, &gs, true).unwrap();
        let mut k = 0;
        for &v in &vs {
            for &a in &accs {
                for &g in &gs {
                    assert_eq!(grid[k], s.eval(OperatingPoint::new(v, a, g), true).unwrap());
                    k += 1;
                }
            }
        }
    }
}
