use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Instantaneous operating point: speed (m/s), acceleration (m/s²) and road
/// grade (rad).
///
/// Grade is used directly as an angle. For the small grades of interest
/// (|grade| ≤ 0.06) the angle, its sine and its tangent agree to within the
/// accuracy of any of the models here, so no conversion is applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v: f64,
    pub a: f64,
    pub theta: f64,
}

impl OperatingPoint {
    pub const fn new(v: f64, a: f64, theta: f64) -> Self {
        Self { v, a, theta }
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.v.is_finite() && self.a.is_finite() && self.theta.is_finite() {
            Ok(())
        } else {
            Err(Error::Input(format!(
                "non-finite operating point (v={}, a={}, theta={})",
                self.v, self.a, self.theta
            )))
        }
    }
}

/// Fuel rate (g/s) and feasibility reported by a model at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSample {
    pub fuel_rate: f64,
    pub feasible: bool,
}

/// Box in (v, a, theta) space on which a model is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub v: (f64, f64),
    pub a: (f64, f64),
    pub theta: (f64, f64),
}

impl Domain {
    pub fn contains_speed(&self, v: f64) -> bool {
        v >= self.v.0 && v <= self.v.1
    }

    pub fn contains(&self, pt: OperatingPoint) -> bool {
        self.contains_speed(pt.v)
            && pt.a >= self.a.0
            && pt.a <= self.a.1
            && pt.theta >= self.theta.0
            && pt.theta <= self.theta.1
    }
}

/// Any instantaneous fuel model: a pure function of the operating point.
///
/// This is the contract the reduction pipeline fits against and the drive
/// cycle harness integrates.
pub trait FuelModel {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample>;

    /// Region where the model is backed by data. `None` means unbounded.
    fn domain(&self) -> Option<Domain> {
        None
    }
}

impl<M: FuelModel + ?Sized> FuelModel for &M {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        (**self).sample(pt)
    }

    fn domain(&self) -> Option<Domain> {
        (**self).domain()
    }
}

impl<M: FuelModel + ?Sized> FuelModel for Box<M> {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        (**self).sample(pt)
    }

    fn domain(&self) -> Option<Domain> {
        (**self).domain()
    }
}

/// Adapter turning a closure into a [`FuelModel`].
pub struct FnModel<F>(pub F);

impl<F> FuelModel for FnModel<F>
where
    F: Fn(OperatingPoint) -> ModelSample,
{
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        pt.check_finite()?;
        Ok((self.0)(pt))
    }
}
