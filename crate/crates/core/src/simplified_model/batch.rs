//! CSV batch input and output for the simplified model.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SimplifiedEval;
use crate::{Error, OperatingPoint, Result};

#[derive(Debug, Deserialize)]
struct PointRow {
    v: f64,
    a: f64,
    theta: f64,
}

#[derive(Debug, Serialize)]
struct EvalRow {
    v: f64,
    a: f64,
    theta: f64,
    fuel_rate: f64,
    power: f64,
    feasibility: u8,
    projected: u8,
}

/// Reads `v,a,theta` rows. Errors name the 1-based data row.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Vec<OperatingPoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<PointRow>().enumerate() {
        let row = i + 1;
        let r = rec.map_err(|e| Error::Parse {
            row,
            reason: e.to_string(),
        })?;
        let pt = OperatingPoint::new(r.v, r.a, r.theta);
        pt.check_finite().map_err(|e| Error::Parse {
            row,
            reason: e.to_string(),
        })?;
        out.push(pt);
    }
    Ok(out)
}

/// Writes `v,a,theta,fuel_rate,power,feasibility,projected` rows.
pub fn write_eval_csv<W: Write>(
    writer: W,
    points: &[OperatingPoint],
    evals: &[SimplifiedEval],
) -> Result<()> {
    if points.len() != evals.len() {
        return Err(Error::Input(format!(
            "{} points but {} evaluations",
            points.len(),
            evals.len()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    for (p, e) in points.iter().zip(evals) {
        w.serialize(EvalRow {
            v: p.v,
            a: p.a,
            theta: p.theta,
            fuel_rate: e.fuel_rate,
            power: e.power,
            feasibility: e.feasibility.code(),
            projected: e.projected as u8,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplified_model::bundled;

    #[test]
    fn round_trip_through_csv() {
        let input = "v,a,theta\n0,0,0\n20, 3, 0\n-1,0,0\n";
        let pts = read_points_csv(input.as_bytes()).unwrap();
        assert_eq!(pts.len(), 3);
        let evals = bundled("compact_sedan").unwrap().eval_batch(&pts, true).unwrap();
        let mut buf = Vec::new();
        write_eval_csv(&mut buf, &pts, &evals).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "v,a,theta,fuel_rate,power,feasibility,projected");
        assert!(lines[2].ends_with(",1,1"));
        assert!(lines[3].ends_with(",2,0"));
    }

    #[test]
    fn bad_row_is_located() {
        let input = "v,a,theta\n0,0,0\n1,x,0\n";
        match read_points_csv(input.as_bytes()) {
            Err(Error::Parse { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
    }
}
