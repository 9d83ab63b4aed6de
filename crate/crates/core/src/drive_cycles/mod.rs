//! Drive cycles: loading, constant-grade variants, fuel integration and
//! validation against a reference.

mod validation;

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::simplified_model::Duty;
use crate::{Error, FuelModel, OperatingPoint, Result};

pub use validation::{
    moving_average, realizability, relative_error_pct, write_plot_csv, write_report_csv,
    Realizability, ValidationRow, MOVING_WINDOW_S, SPEED_ERROR_THRESHOLD, UNREALIZABLE_FRACTION,
};

/// Largest grade magnitude of the constant-grade study, rad.
pub const LIGHT_DUTY_GRADE_BOUND: f64 = 0.03;
pub const HEAVY_DUTY_GRADE_BOUND: f64 = 0.02;

pub const BUNDLED_CYCLES: [&str; 4] = ["udds", "hwfet", "us06", "wltc_class3"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleSample {
    pub t: f64,
    pub v: f64,
    #[serde(default)]
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriveCycle {
    pub name: String,
    samples: Vec<CycleSample>,
}

impl DriveCycle {
    pub fn new(name: impl Into<String>, samples: Vec<CycleSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            let row = i + 1;
            let bad = |reason: &str| Error::Parse { row, reason: reason.into() };
            if !(s.t.is_finite() && s.v.is_finite() && s.theta.is_finite()) {
                return Err(bad("non-finite value"));
            }
            if s.v < 0.0 {
                return Err(bad("negative speed"));
            }
            if i > 0 && s.t <= samples[i - 1].t {
                return Err(bad("time must be strictly increasing"));
            }
        }
        Ok(Self {
            name: name.into(),
            samples,
        })
    }

    /// CSV with header `t,v` and an optional `theta` column.
    pub fn read_csv<R: Read>(name: impl Into<String>, r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut samples = Vec::new();
        for (i, rec) in rd.deserialize::<CycleSample>().enumerate() {
            samples.push(rec.map_err(|e| Error::Parse {
                row: i + 1,
                reason: e.to_string(),
            })?);
        }
        Self::new(name, samples)
    }

    pub fn samples(&self) -> &[CycleSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    pub fn speeds(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.v).collect()
    }

    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    /// Same speed trace with every grade sample set to `theta`. Grades past
    /// the studied range for `duty` are accepted with a warning.
    pub fn with_constant_grade(&self, theta: f64, duty: Duty) -> Self {
        if !grade_in_range(theta, duty) {
            log::warn!(
                "grade {theta} rad on {} is outside ±{} rad",
                self.name,
                grade_bound(duty)
            );
        }
        Self {
            name: self.name.clone(),
            samples: self.samples.iter().map(|s| CycleSample { theta, ..*s }).collect(),
        }
    }

    pub fn acceleration(&self) -> Result<Vec<f64>> {
        derive_acceleration(&self.times(), &self.speeds())
    }

    pub fn operating_points(&self) -> Result<Vec<OperatingPoint>> {
        let a = self.acceleration()?;
        Ok(self
            .samples
            .iter()
            .zip(a)
            .map(|(s, a)| OperatingPoint::new(s.v, a, s.theta))
            .collect())
    }
}

pub fn grade_bound(duty: Duty) -> f64 {
    match duty {
        Duty::LightDuty => LIGHT_DUTY_GRADE_BOUND,
        Duty::MediumHeavyDuty => HEAVY_DUTY_GRADE_BOUND,
    }
}

pub fn grade_in_range(theta: f64, duty: Duty) -> bool {
    theta.abs() <= grade_bound(duty) + 1e-12
}

pub fn load_cycle(path: impl AsRef<Path>) -> Result<DriveCycle> {
    let path = path.as_ref();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "cycle".into());
    DriveCycle::read_csv(name, std::fs::File::open(path)?)
}

pub fn bundled_cycle(name: &str) -> Result<DriveCycle> {
    let text = match name {
        "udds" => include_str!("../../data/cycles/udds.csv"),
        "hwfet" => include_str!("../../data/cycles/hwfet.csv"),
        "us06" => include_str!("../../data/cycles/us06.csv"),
        "wltc_class3" => include_str!("../../data/cycles/wltc_class3.csv"),
        _ => {
            return Err(Error::Config(format!(
                "unknown bundled cycle {name:?} (available: {})",
                BUNDLED_CYCLES.join(", ")
            )))
        }
    };
    DriveCycle::read_csv(name, text.as_bytes())
}

/// A bundled cycle name or a path to a cycle CSV.
pub fn resolve_cycle(spec: &str) -> Result<DriveCycle> {
    if BUNDLED_CYCLES.contains(&spec) {
        bundled_cycle(spec)
    } else if Path::new(spec).exists() {
        load_cycle(spec)
    } else {
        Err(Error::Config(format!("cycle {spec:?} is neither bundled nor an existing file")))
    }
}

/// Central differences inside, one-sided at the ends.
pub fn derive_acceleration(t: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    if t.len() != v.len() {
        return Err(Error::Input("time and speed lengths differ".into()));
    }
    let n = t.len();
    if n < 2 {
        return Err(Error::Input("acceleration needs at least two samples".into()));
    }
    Ok((0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (v[hi] - v[lo]) / (t[hi] - t[lo])
        })
        .collect())
}

pub fn trapezoid(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2)
        .zip(y.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuelIntegral {
    /// g
    pub total: f64,
    /// g/s per sample.
    pub rates: Vec<f64>,
    pub infeasible: usize,
}

/// Trip fuel of `model` over `cycle` by the trapezoidal rule.
pub fn integrate_fuel<M: FuelModel + ?Sized>(model: &M, cycle: &DriveCycle) -> Result<FuelIntegral> {
    if cycle.len() < 2 {
        let rates = match cycle.samples.first() {
            Some(s) => vec![model.sample(OperatingPoint::new(s.v, 0.0, s.theta))?.fuel_rate],
            None => Vec::new(),
        };
        return Ok(FuelIntegral {
            total: 0.0,
            rates,
            infeasible: 0,
        });
    }
    let mut rates = Vec::with_capacity(cycle.len());
    let mut infeasible = 0;
    for pt in cycle.operating_points()? {
        let s = model.sample(pt)?;
        infeasible += usize::from(!s.feasible);
        rates.push(s.fuel_rate);
    }
    if infeasible > 0 {
        log::info!("{}: {infeasible} of {} samples infeasible", cycle.name, cycle.len());
    }
    Ok(FuelIntegral {
        total: trapezoid(&cycle.times(), &rates),
        rates,
        infeasible,
    })
}
