//! Reduces a black-box fuel model to simplified-model parameters.
//!
//! The oracle here is a bundled simplified model, so the output can be
//! compared against its own parameters.

use energy_models::reduction_pipeline::reduce;
use energy_models::simplified_model::{bundled, ParamFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key = std::env::args().nth(1).unwrap_or_else(|| "class8_tractor".into());
    let oracle = bundled(&key)?;
    let original = ParamFile::from(&oracle);
    let (params, report) = reduce(oracle, &format!("{key} (fitted)"))?;
    println!("duty {:?}, {} oracle calls", report.duty, report.oracle_evaluations);
    for s in report.steps.iter().chain(&report.feasible_region) {
        println!("  {:<14} rms {:.3e} over {} points", s.step, s.rms, s.points_used);
    }
    let fitted = serde_json::to_value(ParamFile::from(&params))?;
    let original = serde_json::to_value(original)?;
    for (name, value) in fitted.as_object().unwrap() {
        if let (Some(got), Some(want)) = (value.as_f64(), original[name].as_f64()) {
            println!("  {name:<4} {got:>12.4e}  (source {want:.4e})");
        }
    }
    Ok(())
}
