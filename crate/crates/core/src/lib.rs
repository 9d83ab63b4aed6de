//! Vehicle fuel-consumption models and the pipeline that reduces them.
//!
//! The crate is organized around three layers:
//!
//! - [`semi_principled`]: an instantaneous, stateless model that maps speed,
//!   acceleration and road grade to engine operating conditions, gear and fuel
//!   rate by combining physical vehicle constants with fitted engine maps.
//! - [`simplified_model`]: a closed-form polynomial fuel model with a fuel-cut
//!   floor and a feasible-acceleration boundary, with bundled parameter sets
//!   for six vehicle classes.
//! - [`reduction_pipeline`]: fits a simplified model to any instantaneous
//!   fuel model exposed through [`FuelModel`].
//!
//! Supporting modules generate virtual chassis dynamometer schedules and fit
//! engine maps ([`map_fitting`]), and run models over drive cycles
//! ([`drive_cycles`]). The [`cli`] module backs the `energy-models` binary.
//!
//! ```
//! use energy_models::{simplified_model, OperatingPoint};
//!
//! let sedan = simplified_model::bundled("compact_sedan").unwrap();
//! let out = sedan.eval(OperatingPoint::new(30.0, 0.0, 0.0), false).unwrap();
//! assert!((out.fuel_rate - 1.4240).abs() < 1e-3);
//! ```

pub mod cli;
pub mod drive_cycles;
mod error;
pub mod linalg;
pub mod map_fitting;
mod model;
pub mod reduction_pipeline;
pub mod semi_principled;
pub mod simplified_model;

pub use error::{Error, Result};
pub use model::{Domain, FnModel, FuelModel, ModelSample, OperatingPoint};

/// Standard gravitational acceleration used by the wheel-force balance, m/s².
pub const GRAVITY: f64 = 9.81;
