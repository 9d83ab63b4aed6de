//! Runs a virtual dynamometer schedule on the synthetic vehicle and refits its
//! empirical maps from the samples.

use std::path::PathBuf;

use energy_models::map_fitting::{fit_empirical_maps, generate_vcd_schedule, run_vcd};
use energy_models::semi_principled::maps::TorqueMap;
use energy_models::semi_principled::SemiPrincipledVehicle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/semi/synthetic_4speed.json");
    let veh = SemiPrincipledVehicle::from_json_file(path)?;
    let schedule = generate_vcd_schedule(&veh.principled_constants);
    for (k, r) in schedule.ranges.iter().enumerate() {
        println!("gear {}: {:.2}..{:.2} m/s", k + 1, r.v_min, r.v_max);
    }
    let samples = run_vcd(&veh, &schedule)?;
    let (maps, report) = fit_empirical_maps(&samples, veh.gears())?;
    println!("{} samples, fuel rms {:.2e}", samples.len(), report.fuel_rms);
    for k in 1..=veh.gears() {
        let kind = match maps.engine_torque_fit.get(k) {
            TorqueMap::Hinge(h) => format!("hinge ({:?})", h.kind),
            TorqueMap::Plane(_) => "plane".into(),
        };
        println!("gear {k}: torque {kind}, rms {:.2e}", report.torque_rms[k - 1]);
    }
    Ok(())
}
