//! Evaluates the synthetic four-speed vehicle, then exports it as a grid dump
//! and reads the dump back as a model.

use std::path::PathBuf;

use energy_models::drive_cycles::{bundled_cycle, integrate_fuel};
use energy_models::semi_principled::{export_grid, GridModel, GridSpec, SemiPrincipledVehicle};
use energy_models::OperatingPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/semi/synthetic_4speed.json");
    let veh = SemiPrincipledVehicle::from_json_file(path)?;
    for (v, a) in [(0.0, 0.0), (5.0, 1.0), (12.0, 0.3), (20.0, 0.0), (20.0, -2.0), (30.0, 0.5)] {
        let o = veh.eval(OperatingPoint::new(v, a, 0.0))?;
        println!(
            "v {v:>4.1} a {a:>4.1}: gear {} N {:>6.1} T {:>6.1} fuel {:.4} g/s{}",
            o.gear,
            o.n,
            o.t,
            o.fuel_rate,
            if o.feasible { "" } else { " (infeasible)" }
        );
    }
    let mut dump = Vec::new();
    export_grid(&veh, &GridSpec::default(), &mut dump)?;
    let grid = GridModel::read(dump.as_slice())?;
    let cycle = bundled_cycle("udds")?;
    let exact = integrate_fuel(&veh, &cycle)?.total;
    let approx = integrate_fuel(&grid, &cycle)?.total;
    println!("dump {} kB; UDDS fuel {exact:.1} g direct, {approx:.1} g from the grid", dump.len() / 1000);
    Ok(())
}
