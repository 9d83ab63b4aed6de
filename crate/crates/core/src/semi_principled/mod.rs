//! Instantaneous semi-principled fuel model.
//!
//! For every gear the model computes the wheel force from road-load physics,
//! maps transmission output speed and wheel force to engine speed and torque
//! through fitted per-gear maps, and evaluates a fitted fuel map. The gear is
//! then chosen by minimizing fuel plus weighted penalties for exceeding
//! engine limits or disagreeing with the upshift schedule. First gear runs
//! with an open torque converter; higher gears are locked.

mod eval;
mod export;
pub mod maps;
mod vehicle;

pub use eval::{GearCandidate, SemiOutput};
pub use export::{export_grid, Axis, GridModel, GridSpec};
pub use vehicle::{
    EmpiricalConstants, EmpiricalMaps, GearTable, PrincipledConstants, PrincipledMaps,
    SemiPrincipledVehicle, Transmission, Weights,
};
