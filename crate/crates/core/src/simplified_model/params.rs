//! Flat JSON parameter files and the bundled vehicle set.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    Duty, FeasibilityBoundary, FuelCutBoundary, FuelFloor, FuelPolynomial, SimplifiedParams,
};
use crate::{Error, Result};

/// On-disk layout: one flat object of named coefficients. Fuel-cut fields
/// are present only for light duty vehicles and `h0`/`h1` only for
/// medium/heavy duty ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub name: String,
    pub duty: Duty,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a4: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub q0: f64,
    pub q1: f64,
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub b4: f64,
    pub b5: f64,
    pub b6: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub specific_energy: Option<f64>,
}

fn required(name: &str, key: &str, value: Option<f64>) -> Result<f64> {
    value.ok_or_else(|| Error::Config(format!("{name}: missing `{key}`")))
}

impl TryFrom<ParamFile> for SimplifiedParams {
    type Error = Error;

    fn try_from(f: ParamFile) -> Result<Self> {
        let n = f.name.as_str();
        let floor = match f.duty {
            Duty::LightDuty => {
                if f.h0.is_some() || f.h1.is_some() {
                    return Err(Error::Config(format!(
                        "{n}: light duty vehicles take `beta`, not `h0`/`h1`"
                    )));
                }
                FuelFloor::FuelCut {
                    v_c: required(n, "v_c", f.v_c)?,
                    beta: required(n, "beta", f.beta)?,
                    boundary: FuelCutBoundary([
                        required(n, "a0", f.a0)?,
                        required(n, "a1", f.a1)?,
                        required(n, "a2", f.a2)?,
                        required(n, "a3", f.a3)?,
                        required(n, "a4", f.a4)?,
                    ]),
                }
            }
            Duty::MediumHeavyDuty => {
                let stray = [f.v_c, f.beta, f.a0, f.a1, f.a2, f.a3, f.a4];
                if stray.iter().any(Option::is_some) {
                    return Err(Error::Config(format!(
                        "{n}: medium/heavy duty vehicles have no fuel-cut parameters"
                    )));
                }
                FuelFloor::Linear {
                    h0: required(n, "h0", f.h0)?,
                    h1: required(n, "h1", f.h1)?,
                }
            }
        };
        let poly = FuelPolynomial {
            cruise: [f.c0, f.c1, f.c2, f.c3],
            accel: [f.p0, f.p1, f.p2],
            accel_sq: [f.q0, f.q1],
            grade: [f.z0, f.z1, f.z2],
        };
        let feas = FeasibilityBoundary([f.b1, f.b2, f.b3, f.b4, f.b5, f.b6]);
        let params = SimplifiedParams::new(f.name, floor, poly, feas)?;
        match f.specific_energy {
            Some(e) => params.with_specific_energy(e),
            None => Ok(params),
        }
    }
}

impl From<&SimplifiedParams> for ParamFile {
    fn from(p: &SimplifiedParams) -> Self {
        let (mut v_c, mut beta, mut a, mut h0, mut h1) = (None, None, None, None, None);
        match p.floor {
            FuelFloor::FuelCut { v_c: vc, beta: b, boundary } => {
                v_c = Some(vc);
                beta = Some(b);
                a = Some(boundary.0);
            }
            FuelFloor::Linear { h0: x, h1: y } => {
                h0 = Some(x);
                h1 = Some(y);
            }
        }
        let ai = |i: usize| a.map(|a: [f64; 5]| a[i]);
        let [c0, c1, c2, c3] = p.poly.cruise;
        let [p0, p1, p2] = p.poly.accel;
        let [q0, q1] = p.poly.accel_sq;
        let [z0, z1, z2] = p.poly.grade;
        let [b1, b2, b3, b4, b5, b6] = p.feasibility.0;
        ParamFile {
            name: p.name.clone(),
            duty: p.duty(),
            v_c,
            a0: ai(0),
            a1: ai(1),
            a2: ai(2),
            a3: ai(3),
            a4: ai(4),
            beta,
            h0,
            h1,
            c0,
            c1,
            c2,
            c3,
            p0,
            p1,
            p2,
            q0,
            q1,
            z0,
            z1,
            z2,
            b1,
            b2,
            b3,
            b4,
            b5,
            b6,
            specific_energy: p.specific_energy,
        }
    }
}

impl SimplifiedParams {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(s)
            .map_err(|e| Error::Config(format!("invalid parameter file: {e}")))?;
        file.try_into()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ParamFile::from(self))?)
    }
}

/// Keys of the bundled vehicles, in table order.
pub const BUNDLED_VEHICLES: [&str; 6] = [
    "compact_sedan",
    "midsize_sedan",
    "midsize_suv",
    "midsize_pickup",
    "class4_pnd",
    "class8_tractor",
];

fn bundled_source(key: &str) -> Option<&'static str> {
    Some(match key {
        "compact_sedan" => include_str!("../../data/vehicles/compact_sedan.json"),
        "midsize_sedan" => include_str!("../../data/vehicles/midsize_sedan.json"),
        "midsize_suv" => include_str!("../../data/vehicles/midsize_suv.json"),
        "midsize_pickup" => include_str!("../../data/vehicles/midsize_pickup.json"),
        "class4_pnd" => include_str!("../../data/vehicles/class4_pnd.json"),
        "class8_tractor" => include_str!("../../data/vehicles/class8_tractor.json"),
        _ => return None,
    })
}

/// Loads a bundled vehicle by key (e.g. `"compact_sedan"`).
pub fn bundled(key: &str) -> Result<SimplifiedParams> {
    let src = bundled_source(key).ok_or_else(|| {
        Error::Config(format!(
            "unknown vehicle `{key}`; bundled vehicles are {}",
            BUNDLED_VEHICLES.join(", ")
        ))
    })?;
    SimplifiedParams::from_json_str(src)
}

pub fn bundled_all() -> Vec<SimplifiedParams> {
    BUNDLED_VEHICLES
        .iter()
        .map(|k| bundled(k).expect("bundled parameter files are valid"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundled_load() {
        let all = bundled_all();
        assert_eq!(all.len(), 6);
        let light = all.iter().filter(|p| p.duty() == Duty::LightDuty).count();
        assert_eq!(light, 4);
    }

    #[test]
    fn json_round_trip() {
        for p in bundled_all() {
            let back = SimplifiedParams::from_json_str(&p.to_json_string().unwrap()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn unknown_key_is_config_error() {
        assert!(matches!(bundled("bus"), Err(Error::Config(_))));
    }

    #[test]
    fn missing_field_is_reported() {
        let mut v: serde_json::Value =
            serde_json::from_str(bundled_source("compact_sedan").unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("beta");
        let err = SimplifiedParams::from_json_str(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn mixed_duty_fields_are_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(bundled_source("class8_tractor").unwrap()).unwrap();
        v["beta"] = 0.1.into();
        assert!(SimplifiedParams::from_json_str(&v.to_string()).is_err());
    }

    #[test]
    fn specific_energy_override_from_file() {
        let mut v: serde_json::Value =
            serde_json::from_str(bundled_source("compact_sedan").unwrap()).unwrap();
        v["specific_energy"] = 44_000.0.into();
        let p = SimplifiedParams::from_json_str(&v.to_string()).unwrap();
        assert_eq!(p.specific_energy(), 44_000.0);
    }
}
