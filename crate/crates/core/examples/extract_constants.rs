//! Builds a drive trace from the synthetic vehicle over a cycle and recovers
//! the empirical constants from it.

use std::path::PathBuf;

use energy_models::drive_cycles::{bundled_cycle, derive_acceleration};
use energy_models::map_fitting::{extract_empirical_constants, DriveTrace, TcState, TraceRow};
use energy_models::semi_principled::SemiPrincipledVehicle;
use energy_models::OperatingPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/semi/synthetic_4speed.json");
    let veh = SemiPrincipledVehicle::from_json_file(path)?;
    let cycle = bundled_cycle("udds")?;
    let acc = derive_acceleration(&cycle.times(), &cycle.speeds())?;
    let mut rows = Vec::new();
    for (s, a) in cycle.samples().iter().zip(acc) {
        let o = veh.eval(OperatingPoint::new(s.v, a, 0.0))?;
        rows.push(TraceRow {
            t: s.t,
            v: s.v,
            gear: o.gear,
            n: o.n,
            t_engine: o.t,
            fuel: o.fuel_rate,
            f_wheel: o.f_wheel,
            tc_state: if o.gear > 1 { TcState::Locked } else { TcState::Steady },
        });
    }
    let trace = DriveTrace::new(rows)?;
    let got = extract_empirical_constants(&trace, None)?;
    let e = &veh.empirical_constants;
    println!("f_idle {:?} (vehicle {})", got.f_idle, e.f_idle);
    println!("T_min  {:?} (vehicle {})", got.t_min, e.t_min);
    println!("v_c    {:?}", got.v_c);
    println!("F_wc   {:?}", got.f_wc);
    println!("downshift speeds {:?}", got.downshift_speeds);
    if !got.diagnostics.missing.is_empty() {
        println!("not recovered: {}", got.diagnostics.missing.join(", "));
    }
    Ok(())
}
