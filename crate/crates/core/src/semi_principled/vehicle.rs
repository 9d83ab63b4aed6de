//! Vehicle definition: constants, maps and weights, with JSON I/O.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::maps::{BivariatePoly, GearGrid, Grid1d, Line, SpeedMap, TorqueMap};
use crate::{Error, Result, GRAVITY};

/// Values indexed by gear `1..=n`, stored on disk as an object keyed by the
/// gear number.
#[derive(Debug, Clone, PartialEq)]
pub struct GearTable<T>(Vec<T>);

impl<T> GearTable<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self(values)
    }

    pub fn gears(&self) -> usize {
        self.0.len()
    }

    /// Value for 1-based gear `k`.
    pub fn get(&self, k: usize) -> &T {
        &self.0[k - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &T)> {
        self.0.iter().enumerate().map(|(i, v)| (i + 1, v))
    }
}

impl<T: Serialize> Serialize for GearTable<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_map(self.iter().map(|(k, v)| (k.to_string(), v)))
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for GearTable<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<usize, T>::deserialize(d)?;
        let n = map.len();
        if map.keys().copied().ne(1..=n) {
            return Err(serde::de::Error::custom(format!(
                "gear keys must be exactly 1..={n}"
            )));
        }
        Ok(Self(map.into_values().collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipledConstants {
    /// kg
    pub m_vehicle: f64,
    /// Vehicle mass plus driveline inertia per gear, kg.
    pub m_general: GearTable<f64>,
    /// m
    pub r_tire: f64,
    /// N·s²/m²
    #[serde(rename = "R_a")]
    pub r_a: f64,
    /// N·s/m
    #[serde(rename = "R_r")]
    pub r_r: f64,
    /// N
    #[serde(rename = "R_g")]
    pub r_g: f64,
    pub d_r: f64,
    pub g_r: GearTable<f64>,
    /// rad/s
    #[serde(rename = "N_max")]
    pub n_max: f64,
    /// rad/s
    #[serde(rename = "N_min")]
    pub n_min: f64,
    #[serde(default = "default_gravity")]
    pub g_const: f64,
}

fn default_gravity() -> f64 {
    GRAVITY
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConstants {
    /// Nm
    #[serde(rename = "T_min")]
    pub t_min: f64,
    /// g/s
    pub f_idle: f64,
    /// m/s
    pub v_c: f64,
    /// N
    #[serde(rename = "F_wc")]
    pub f_wc: f64,
    /// Braking downshift speed for each pair `k → k−1`, keyed by `k ≥ 2`.
    pub downshift_speeds: BTreeMap<usize, f64>,
    /// First-gear torque correction as a function of acceleration, Nm.
    pub torque_correction: Line,
}

impl EmpiricalConstants {
    /// Gear selected while braking at speed `v`.
    pub fn downshift_gear(&self, v: f64) -> usize {
        1 + self.downshift_speeds.values().filter(|&&s| s < v).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipledMaps {
    #[serde(rename = "K_upshift")]
    pub k_upshift: GearGrid,
    /// Maximum engine torque against engine speed.
    #[serde(rename = "T_max_of_N")]
    pub t_max_of_n: Grid1d,
    /// Maximum wheel torque against vehicle speed.
    #[serde(rename = "T_wmax_of_v")]
    pub t_wmax_of_v: Grid1d,
    /// Maximum wheel torque against vehicle speed, per gear.
    #[serde(rename = "T_wmax_of_v_k")]
    pub t_wmax_of_v_k: GearTable<Grid1d>,
    /// Manual only: speed against pedal angle for the upshift into gear `k`.
    #[serde(rename = "V_upshift", default, skip_serializing_if = "Option::is_none")]
    pub v_upshift: Option<BTreeMap<usize, Grid1d>>,
    /// Manual only: speed against pedal angle for the downshift out of gear `k`.
    #[serde(rename = "V_downshift", default, skip_serializing_if = "Option::is_none")]
    pub v_downshift: Option<BTreeMap<usize, Grid1d>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMaps {
    /// Fuel rate (g/s) against engine speed and torque.
    pub fuel_poly: BivariatePoly,
    pub engine_speed_fit: GearTable<SpeedMap>,
    pub engine_torque_fit: GearTable<TorqueMap>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Transmission {
    #[default]
    Automatic,
    Manual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub w_t: f64,
    pub w_n: f64,
    pub w_f: f64,
    pub w_g: f64,
    /// Manual transmissions: gear penalty per m/s below the upshift speed.
    pub c_m: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w_t: 10.0,
            w_n: 10.0,
            w_f: 100.0,
            w_g: 100.0,
            c_m: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiPrincipledVehicle {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub transmission: Transmission,
    pub principled_constants: PrincipledConstants,
    pub empirical_constants: EmpiricalConstants,
    pub principled_maps: PrincipledMaps,
    pub empirical_maps: EmpiricalMaps,
    #[serde(default)]
    pub weights: Weights,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {x}")))
    }
}

fn check_shift_maps(name: &str, maps: &BTreeMap<usize, Grid1d>, gears: usize) -> Result<()> {
    if maps.keys().copied().ne(2..=gears) {
        return Err(Error::Config(format!("{name}: gear keys must be exactly 2..={gears}")));
    }
    for (k, g) in maps {
        g.validate(&format!("{name}[{k}]"))?;
    }
    Ok(())
}

impl SemiPrincipledVehicle {
    pub fn gears(&self) -> usize {
        self.principled_constants.g_r.gears()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let v: Self = serde_json::from_str(s)
            .map_err(|e| Error::Config(format!("invalid vehicle definition: {e}")))?;
        v.validate()?;
        Ok(v)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        let pc = &self.principled_constants;
        let n = self.gears();
        if n == 0 {
            return Err(Error::Config("vehicle has no gears".into()));
        }
        for (name, x) in [
            ("m_vehicle", pc.m_vehicle),
            ("r_tire", pc.r_tire),
            ("R_a", pc.r_a),
            ("R_r", pc.r_r),
            ("R_g", pc.r_g),
            ("d_r", pc.d_r),
            ("N_max", pc.n_max),
            ("N_min", pc.n_min),
            ("g_const", pc.g_const),
        ] {
            positive(name, x)?;
        }
        if pc.n_min >= pc.n_max {
            return Err(Error::Config("N_min must be below N_max".into()));
        }
        let sizes = [
            ("m_general", pc.m_general.gears()),
            ("T_wmax_of_v_k", self.principled_maps.t_wmax_of_v_k.gears()),
            ("engine_speed_fit", self.empirical_maps.engine_speed_fit.gears()),
            ("engine_torque_fit", self.empirical_maps.engine_torque_fit.gears()),
        ];
        for (name, m) in sizes {
            if m != n {
                return Err(Error::Config(format!("{name} has {m} gears, g_r has {n}")));
            }
        }
        for (k, &m) in pc.m_general.iter() {
            positive("m_general", m)?;
            if m < pc.m_vehicle {
                return Err(Error::Config(format!(
                    "m_general[{k}] = {m} is below m_vehicle = {}",
                    pc.m_vehicle
                )));
            }
        }
        for (_, &g) in pc.g_r.iter() {
            positive("g_r", g)?;
        }
        if pc.g_r.0.windows(2).any(|w| w[1] >= w[0]) {
            log::warn!("{}: gear ratios are not strictly decreasing", self.name);
        }

        let ec = &self.empirical_constants;
        positive("f_idle", ec.f_idle)?;
        positive("v_c", ec.v_c)?;
        if !(ec.t_min.is_finite() && ec.f_wc.is_finite()) {
            return Err(Error::Config("T_min and F_wc must be finite".into()));
        }
        if ec.downshift_speeds.keys().copied().ne(2..=n) {
            return Err(Error::Config(format!(
                "downshift_speeds must be keyed by gears 2..={n}"
            )));
        }
        let speeds: Vec<f64> = ec.downshift_speeds.values().copied().collect();
        if speeds.iter().any(|s| !s.is_finite()) || speeds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "downshift speeds must be finite and strictly increasing with gear".into(),
            ));
        }
        let tc = ec.torque_correction;
        if tc.intercept != 0.0 || !tc.slope.is_finite() {
            return Err(Error::Config(
                "torque correction must be a finite line through the origin".into(),
            ));
        }

        let pm = &self.principled_maps;
        pm.k_upshift.validate("K_upshift", n)?;
        pm.t_max_of_n.validate("T_max_of_N")?;
        pm.t_wmax_of_v.validate("T_wmax_of_v")?;
        if pm.t_wmax_of_v.y.iter().any(|&t| t <= 0.0) {
            return Err(Error::Config("T_wmax_of_v must be positive".into()));
        }
        for (k, g) in pm.t_wmax_of_v_k.iter() {
            g.validate(&format!("T_wmax_of_v_k[{k}]"))?;
            let exceeds = g
                .x
                .iter()
                .zip(&g.y)
                .filter(|(x, _)| pm.t_wmax_of_v.x.contains(x))
                .any(|(&x, &y)| y > pm.t_wmax_of_v.eval(x));
            if exceeds {
                log::warn!("{}: T_wmax_of_v_k[{k}] exceeds T_wmax_of_v", self.name);
            }
        }
        if self.transmission == Transmission::Manual {
            let missing = || Error::Config("manual transmission needs V_upshift, V_downshift and alpha_s".into());
            check_shift_maps("V_upshift", pm.v_upshift.as_ref().ok_or_else(missing)?, n)?;
            check_shift_maps("V_downshift", pm.v_downshift.as_ref().ok_or_else(missing)?, n)?;
            let a = pm.alpha_s.ok_or_else(missing)?;
            if !a.is_finite() {
                return Err(Error::Config("alpha_s must be finite".into()));
            }
        }

        let em = &self.empirical_maps;
        em.fuel_poly.check_degrees("fuel_poly", 2, 3)?;
        for (k, m) in em.engine_speed_fit.iter() {
            match (k, m) {
                (1, SpeedMap::Poly(p)) => p.check_degrees("engine_speed_fit[1]", 3, 2)?,
                (1, SpeedMap::Line(_)) => {
                    return Err(Error::Config(
                        "engine_speed_fit[1] must be a degree 3 × 2 polynomial".into(),
                    ))
                }
                (_, SpeedMap::Line(l)) if l.slope.is_finite() && l.intercept.is_finite() => {}
                _ => {
                    return Err(Error::Config(format!(
                        "engine_speed_fit[{k}] must be a finite line"
                    )))
                }
            }
        }
        for (k, m) in em.engine_torque_fit.iter() {
            match m {
                TorqueMap::Hinge(h) if k == 1 => h.validate("engine_torque_fit[1]")?,
                TorqueMap::Hinge(_) => {
                    return Err(Error::Config(format!(
                        "engine_torque_fit[{k}] must be a plane"
                    )))
                }
                TorqueMap::Plane(p) => {
                    if !(p.c0.is_finite() && p.cx.is_finite() && p.cy.is_finite()) {
                        return Err(Error::Config(format!(
                            "engine_torque_fit[{k}] has a non-finite coefficient"
                        )));
                    }
                }
            }
        }

        let w = &self.weights;
        for (name, x) in [("w_T", w.w_t), ("w_N", w.w_n), ("w_F", w.w_f), ("w_g", w.w_g), ("c_m", w.c_m)] {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::Config(format!("weight {name} must be nonnegative")));
            }
        }
        Ok(())
    }
}
