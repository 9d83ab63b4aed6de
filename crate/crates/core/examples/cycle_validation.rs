//! Compares two bundled models over the bundled cycles at several grades and
//! prints the relative fuel error table.

use energy_models::drive_cycles::{bundled_cycle, integrate_fuel, relative_error_pct, BUNDLED_CYCLES};
use energy_models::simplified_model::bundled;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = bundled("midsize_suv")?;
    let reference = bundled("midsize_pickup")?;
    let grades = [-0.02, 0.0, 0.02];
    print!("{:<12}", "cycle");
    for g in grades {
        print!("{g:>10}");
    }
    println!();
    for name in BUNDLED_CYCLES {
        let base = bundled_cycle(name)?;
        print!("{name:<12}");
        for g in grades {
            let c = base.with_constant_grade(g, model.duty());
            let m = integrate_fuel(&model, &c)?;
            let r = integrate_fuel(&reference, &c)?;
            match relative_error_pct(m.total, r.total) {
                Some(e) => print!("{e:>9.1}%"),
                None => print!("{:>10}", "-"),
            }
        }
        println!();
    }
    Ok(())
}
