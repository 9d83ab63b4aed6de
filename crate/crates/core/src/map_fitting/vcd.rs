//! Virtual chassis dynamometer: gear-by-gear steady-state test schedule and
//! sample capture from a vehicle oracle.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::semi_principled::{PrincipledConstants, SemiPrincipledVehicle};
use crate::{Error, Result};

/// Speed increment between schedule points, m/s.
pub const SPEED_STEP: f64 = 0.1;
/// Number of pedal increments between 0 and 1.
pub const PEDAL_STEPS: usize = 50;
/// Upper speed cap of the schedule, m/s.
pub const SPEED_CAP: f64 = 34.0;
pub const DWELL_S: f64 = 10.0;
pub const CAPTURE_AT_S: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcdEntry {
    pub gear: usize,
    pub target_speed: f64,
    pub pedal: f64,
    pub dwell_s: f64,
    pub capture_at_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GearSpeedRange {
    pub gear: usize,
    pub v_min: f64,
    pub v_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcdSchedule {
    pub ranges: Vec<GearSpeedRange>,
    /// Gear-major, then speed, then pedal.
    pub entries: Vec<VcdEntry>,
}

/// Pedal fractions `0, 0.02, …, 1`.
pub fn pedal_steps() -> Vec<f64> {
    (0..=PEDAL_STEPS).map(|i| i as f64 / PEDAL_STEPS as f64).collect()
}

/// Builds the schedule from the speeds at which each gear keeps the engine
/// between `N_min` and `N_max`, capped at 34 m/s.
pub fn generate_vcd_schedule(c: &PrincipledConstants) -> VcdSchedule {
    let pedals = pedal_steps();
    let mut ranges = Vec::new();
    let mut entries = Vec::new();
    for (k, &g_r) in c.g_r.iter() {
        let per_rad = c.r_tire / (g_r * c.d_r);
        let v_min = (c.n_min * per_rad).max(0.0);
        let v_max = (c.n_max * per_rad).min(SPEED_CAP);
        ranges.push(GearSpeedRange { gear: k, v_min, v_max });
        if v_min > v_max {
            log::warn!("gear {k}: v_min {v_min:.3} exceeds v_max {v_max:.3}; no test points");
            continue;
        }
        let count = ((v_max - v_min) / SPEED_STEP + 1e-9).floor() as usize + 1;
        for i in 0..count {
            let v = v_min + i as f64 * SPEED_STEP;
            for &pedal in &pedals {
                entries.push(VcdEntry {
                    gear: k,
                    target_speed: v,
                    pedal,
                    dwell_s: DWELL_S,
                    capture_at_s: CAPTURE_AT_S,
                });
            }
        }
    }
    VcdSchedule { ranges, entries }
}

/// One steady-state capture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VcdSample {
    pub gear: usize,
    pub v: f64,
    pub pedal: f64,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub fuel: f64,
    #[serde(rename = "N_output")]
    pub n_output: f64,
    #[serde(rename = "F_wheel")]
    pub f_wheel: f64,
    #[serde(with = "bool_as_int")]
    pub tc_locked: bool,
}

mod bool_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*b as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        let s = String::deserialize(d)?;
        match s.trim() {
            "1" | "true" => Ok(true),
            "0" | "false" => Ok(false),
            other => Err(serde::de::Error::custom(format!("expected 0/1, got `{other}`"))),
        }
    }
}

/// A vehicle that can be held at a gear, speed and pedal position.
pub trait VcdOracle {
    fn capture(&self, entry: &VcdEntry) -> Result<VcdSample>;
}

impl VcdOracle for SemiPrincipledVehicle {
    /// Reports the vehicle's own engine maps at the commanded wheel force
    /// `pedal · T_wmax(v, k) / r_tire`, without the idle floors and fuel-cut
    /// that instantaneous evaluation applies.
    fn capture(&self, e: &VcdEntry) -> Result<VcdSample> {
        let c = &self.principled_constants;
        if e.gear == 0 || e.gear > self.gears() {
            return Err(Error::Input(format!("gear {} outside 1..={}", e.gear, self.gears())));
        }
        if !(e.target_speed.is_finite() && e.pedal.is_finite()) {
            return Err(Error::Input("non-finite schedule entry".into()));
        }
        let n_output = c.d_r * e.target_speed / c.r_tire;
        let t_wmax = self.principled_maps.t_wmax_of_v_k.get(e.gear).eval(e.target_speed);
        let f_wheel = e.pedal * t_wmax / c.r_tire;
        let em = &self.empirical_maps;
        let n = em.engine_speed_fit.get(e.gear).eval(n_output, f_wheel);
        let t = em.engine_torque_fit.get(e.gear).eval(n_output, f_wheel);
        Ok(VcdSample {
            gear: e.gear,
            v: e.target_speed,
            pedal: e.pedal,
            n,
            t,
            fuel: em.fuel_poly.eval(n, t),
            n_output,
            f_wheel,
            tc_locked: e.gear > 1,
        })
    }
}

pub fn run_vcd<O: VcdOracle + ?Sized>(oracle: &O, schedule: &VcdSchedule) -> Result<Vec<VcdSample>> {
    schedule.entries.iter().map(|e| oracle.capture(e)).collect()
}

pub fn write_samples_csv<W: Write>(w: W, samples: &[VcdSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for s in samples {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<VcdSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<VcdSample>().enumerate() {
        let row = i + 1;
        let s = rec.map_err(|e| Error::Parse { row, reason: e.to_string() })?;
        let finite = [s.v, s.pedal, s.n, s.t, s.fuel, s.n_output, s.f_wheel]
            .iter()
            .all(|x| x.is_finite());
        if !finite || s.gear == 0 {
            return Err(Error::Parse {
                row,
                reason: "non-finite value or gear 0".into(),
            });
        }
        out.push(s);
    }
    Ok(out)
}

pub fn write_schedule_csv<W: Write>(w: W, schedule: &VcdSchedule) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    for e in &schedule.entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}
