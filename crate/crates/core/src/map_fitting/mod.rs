//! VCD schedules, map fitting and empirical constants.

mod constants;
mod fit;
mod vcd;

pub use constants::{
    extract_empirical_constants, median, percentile_nearest_rank, DriveTrace, ExtractedConstants,
    ExtractionDiagnostics, SteadyTorque, TcState, TraceRow, FUEL_CUT_MIN_SPEED, FUEL_CUT_RATE, HIGH_ACCEL,
    IDLE_SPEED, IDLE_TORQUE_RATE, IDLE_WINDOW_S, LOW_ACCEL, REGION_SAMPLES,
};
pub use fit::{
    fit_empirical_maps, fit_engine_speed_map, fit_engine_torque_map, fit_fuel_map,
    fit_hinge_surface, plane_rms, Fitted, MapFitReport, HINGE_MAX_ITERATIONS,
};
pub use vcd::{
    generate_vcd_schedule, pedal_steps, read_samples_csv, run_vcd, write_samples_csv,
    write_schedule_csv, GearSpeedRange, VcdEntry, VcdOracle, VcdSample, VcdSchedule, CAPTURE_AT_S,
    DWELL_S, PEDAL_STEPS, SPEED_CAP, SPEED_STEP,
};
