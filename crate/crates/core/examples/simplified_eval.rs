//! Evaluates a bundled simplified model at a few operating points and prints
//! the feasible acceleration ceiling.

use energy_models::simplified_model::bundled;
use energy_models::OperatingPoint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sedan = bundled("compact_sedan")?;
    println!("{} ({:?})", sedan.name, sedan.duty());
    println!("{:>6} {:>6} {:>7} {:>9} {:>10} {:>11}", "v", "a", "theta", "fuel g/s", "power kW", "feasibility");
    for (v, a, th) in [(0.0, 0.0, 0.0), (10.0, -3.0, 0.0), (15.0, 1.0, 0.01), (30.0, 0.0, 0.0), (25.0, 3.0, 0.02)] {
        let out = sedan.eval(OperatingPoint::new(v, a, th), false)?;
        println!(
            "{v:>6.1} {a:>6.1} {th:>7.3} {:>9.4} {:>10.2} {:>11}",
            out.fuel_rate,
            out.power / 1e3,
            out.feasibility.code()
        );
    }
    // Projection clips infeasible accelerations onto the ceiling.
    let p = sedan.eval(OperatingPoint::new(25.0, 3.0, 0.02), true)?;
    println!("projected: {:.4} g/s", p.fuel_rate);
    for v in [5.0, 15.0, 30.0] {
        println!("a_max({v}, 0) = {:.3} m/s²", sedan.a_max_feasible(v, 0.0)?);
    }
    Ok(())
}
