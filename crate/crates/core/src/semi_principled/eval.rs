//! Instantaneous evaluation: per-gear engine state, penalties and gear choice.

use serde::Serialize;

use super::vehicle::{SemiPrincipledVehicle, Transmission};
use crate::{Domain, Error, FuelModel, ModelSample, OperatingPoint, Result};

/// Engine and wheel state for one candidate gear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GearCandidate {
    pub gear: usize,
    /// Commanded wheel force in this gear, N.
    pub f_wheel: f64,
    /// Transmission output speed and wheel force fed to the engine maps
    /// (clamped in first gear).
    pub n_output_in: f64,
    pub f_wheel_in: f64,
    pub alpha: f64,
    /// Gear the upshift map would select at this pedal angle.
    pub g_upshift_map: usize,
    pub f_wmax: f64,
    pub n: f64,
    pub t: f64,
    pub t_max: f64,
    pub fuel: f64,
    pub fuel_cut: bool,
    /// Gear penalty already scaled to g/s.
    pub gear_cost: f64,
    pub n_penalty: f64,
    pub t_penalty: f64,
    pub f_penalty: f64,
}

impl GearCandidate {
    /// Weighted engine penalty `w_T T_pen + w_N N_pen + w_F F_pen`.
    pub fn engine_penalty(&self, v: &SemiPrincipledVehicle) -> f64 {
        let w = &v.weights;
        w.w_t * self.t_penalty + w.w_n * self.n_penalty + w.w_f * self.f_penalty
    }

    pub fn objective(&self, v: &SemiPrincipledVehicle) -> f64 {
        self.fuel + self.engine_penalty(v) + self.gear_cost
    }

    pub fn has_engine_penalty(&self) -> bool {
        self.n_penalty > 0.0 || self.t_penalty > 0.0 || self.f_penalty > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemiOutput {
    /// Engine speed, rad/s.
    #[serde(rename = "N")]
    pub n: f64,
    /// Engine torque, Nm.
    #[serde(rename = "T")]
    pub t: f64,
    pub fuel_rate: f64,
    #[serde(rename = "N_output")]
    pub n_output: f64,
    #[serde(rename = "F_wheel")]
    pub f_wheel: f64,
    #[serde(rename = "P_wheel")]
    pub p_wheel: f64,
    #[serde(rename = "P_engine")]
    pub p_engine: f64,
    pub gear: usize,
    pub feasible: bool,
    /// Weighted engine penalty at the selected gear, g/s.
    pub penalty: f64,
    /// Number of map lookups clamped to a grid edge during this call.
    pub extrapolations: u32,
}

impl SemiPrincipledVehicle {
    /// `m_general[k]·a + R_a v² + R_r v + R_g + m_vehicle·sin(θ)·g`.
    pub fn wheel_force(&self, gear: usize, pt: OperatingPoint) -> Result<f64> {
        let c = &self.principled_constants;
        if gear == 0 || gear > self.gears() {
            return Err(Error::Input(format!("gear {gear} outside 1..={}", self.gears())));
        }
        let (v, a) = (pt.v, pt.a);
        Ok(c.m_general.get(gear) * a
            + c.r_a * v * v
            + c.r_r * v
            + c.r_g
            + c.m_vehicle * pt.theta.sin() * c.g_const)
    }

    /// First-gear engine torque at speed `v` and wheel force `f_wheel` before
    /// the acceleration correction.
    pub fn steady_first_gear_torque(&self, v: f64, f_wheel: f64) -> f64 {
        let c = &self.principled_constants;
        let f_wmax = self.principled_maps.t_wmax_of_v_k.get(1).eval(v) / c.r_tire;
        let n_output = (c.d_r * v / c.r_tire).min(c.n_max / c.g_r.get(1));
        self.empirical_maps
            .engine_torque_fit
            .get(1)
            .eval(n_output, f_wheel.min(f_wmax))
            .max(self.empirical_constants.t_min)
    }

    /// Per-gear states at `pt` (non-idle path), in gear order.
    pub fn candidates(&self, pt: OperatingPoint, clamps: &mut u32) -> Result<Vec<GearCandidate>> {
        pt.check_finite()?;
        let c = &self.principled_constants;
        let e = &self.empirical_constants;
        let pm = &self.principled_maps;
        let em = &self.empirical_maps;
        let v = pt.v;
        let n_output = c.d_r * v / c.r_tire;
        let t_wmax_v = pm.t_wmax_of_v.eval_counted(v, clamps);
        if t_wmax_v == 0.0 {
            return Err(Error::MapDomain(format!(
                "maximum wheel torque is zero at v = {v}; pedal angle undefined"
            )));
        }
        let mut out = Vec::with_capacity(self.gears());
        for k in 1..=self.gears() {
            let f_wheel = self.wheel_force(k, pt)?;
            let alpha = f_wheel * c.r_tire / t_wmax_v;
            let g_upshift_map = pm.k_upshift.eval_counted(alpha, v, clamps);
            let f_wmax = pm.t_wmax_of_v_k.get(k).eval_counted(v, clamps) / c.r_tire;
            let (n_output_in, f_wheel_in) = if k == 1 {
                (n_output.min(c.n_max / c.g_r.get(1)), f_wheel.min(f_wmax))
            } else {
                (n_output, f_wheel)
            };
            let n = em.engine_speed_fit.get(k).eval(n_output_in, f_wheel_in).max(c.n_min);
            let mut t = em.engine_torque_fit.get(k).eval(n_output_in, f_wheel_in).max(e.t_min);
            if k == 1 {
                t += e.torque_correction.eval(pt.a.max(0.0));
            }
            let t_max = pm.t_max_of_n.eval_counted(n, clamps);
            let fuel_cut = v > e.v_c && f_wheel_in < e.f_wc;
            let mut cand = GearCandidate {
                gear: k,
                f_wheel,
                n_output_in,
                f_wheel_in,
                alpha,
                g_upshift_map,
                f_wmax,
                n,
                t,
                t_max,
                fuel: if fuel_cut { 0.0 } else { em.fuel_poly.eval(n, t).max(0.0) },
                fuel_cut,
                gear_cost: 0.0,
                n_penalty: 0.0,
                t_penalty: 0.0,
                f_penalty: 0.0,
            };
            if !fuel_cut {
                cand.gear_cost = self.gear_cost(k, alpha, v, g_upshift_map, clamps);
                cand.n_penalty = (n - c.n_max).max(0.0);
                cand.t_penalty = (t - t_max).max(0.0);
                // The penalty compares the commanded force, not the clamped
                // first-gear map input, so an overloaded first gear is flagged.
                cand.f_penalty = (f_wheel - f_wmax).max(0.0);
            }
            out.push(cand);
        }
        Ok(out)
    }

    fn gear_cost(&self, k: usize, alpha: f64, v: f64, g_map: usize, clamps: &mut u32) -> f64 {
        match self.transmission {
            Transmission::Automatic => {
                if k > 1 && g_map < k {
                    self.weights.w_g * (k - g_map) as f64
                } else {
                    0.0
                }
            }
            Transmission::Manual => {
                let up = self.principled_maps.v_upshift.as_ref().and_then(|m| m.get(&k));
                match up {
                    Some(map) => {
                        let v_up = map.eval_counted(alpha, clamps);
                        if v < v_up {
                            self.weights.c_m * (v_up - v)
                        } else {
                            0.0
                        }
                    }
                    None => 0.0,
                }
            }
        }
    }

    fn idle_output(&self, pt: OperatingPoint) -> Result<SemiOutput> {
        let c = &self.principled_constants;
        let e = &self.empirical_constants;
        Ok(SemiOutput {
            n: c.n_min,
            t: e.t_min,
            fuel_rate: e.f_idle,
            n_output: 0.0,
            f_wheel: self.wheel_force(1, pt)?,
            p_wheel: 0.0,
            p_engine: c.n_min * e.t_min,
            gear: 1,
            feasible: true,
            penalty: 0.0,
            extrapolations: 0,
        })
    }

    fn output_at(&self, pt: OperatingPoint, cand: &GearCandidate, clamps: u32) -> SemiOutput {
        let c = &self.principled_constants;
        SemiOutput {
            n: cand.n,
            t: cand.t,
            fuel_rate: cand.fuel,
            n_output: c.d_r * pt.v / c.r_tire,
            f_wheel: cand.f_wheel,
            p_wheel: cand.f_wheel * pt.v,
            p_engine: cand.n * cand.t,
            gear: cand.gear,
            feasible: !cand.has_engine_penalty(),
            penalty: cand.engine_penalty(self),
            extrapolations: clamps,
        }
    }

    /// Evaluates the vehicle at `pt`, dispatching on the transmission type.
    pub fn eval(&self, pt: OperatingPoint) -> Result<SemiOutput> {
        match self.transmission {
            Transmission::Automatic => self.eval_automatic(pt),
            Transmission::Manual => self.eval_manual(pt),
        }
    }

    fn prepare(&self, pt: OperatingPoint) -> Result<Option<SemiOutput>> {
        pt.check_finite()?;
        if pt.v < 0.0 {
            return Err(Error::Input(format!(
                "negative speed {} is outside the model",
                pt.v
            )));
        }
        if pt.v == 0.0 && pt.a == 0.0 {
            return self.idle_output(pt).map(Some);
        }
        Ok(None)
    }

    fn argmin(&self, cands: &[GearCandidate]) -> usize {
        let mut best = 0;
        for (i, c) in cands.iter().enumerate().skip(1) {
            if c.objective(self) < cands[best].objective(self) {
                best = i;
            }
        }
        best
    }

    /// Automatic transmission: penalized fuel minimization over gears, with
    /// the braking downshift map taking over when the wheel force is negative.
    pub fn eval_automatic(&self, pt: OperatingPoint) -> Result<SemiOutput> {
        if let Some(idle) = self.prepare(pt)? {
            return Ok(idle);
        }
        let mut clamps = 0;
        let cands = self.candidates(pt, &mut clamps)?;
        let mut best = self.argmin(&cands);
        if cands[best].f_wheel < 0.0 {
            best = self.empirical_constants.downshift_gear(pt.v) - 1;
        }
        Ok(self.output_at(pt, &cands[best], clamps))
    }

    /// Manual transmission: as automatic, but with a small upshift-speed gear
    /// penalty, and below the flat-shift pedal angle the gear is read back
    /// from the downshift speed map.
    pub fn eval_manual(&self, pt: OperatingPoint) -> Result<SemiOutput> {
        if let Some(idle) = self.prepare(pt)? {
            return Ok(idle);
        }
        let pm = &self.principled_maps;
        let (Some(down), Some(alpha_s)) = (pm.v_downshift.as_ref(), pm.alpha_s) else {
            return Err(Error::Config(
                "manual evaluation needs V_downshift and alpha_s".into(),
            ));
        };
        let mut clamps = 0;
        let cands = self.candidates(pt, &mut clamps)?;
        let mut best = self.argmin(&cands);
        let alpha = cands[best].alpha;
        if alpha < alpha_s {
            let mut gear = 1;
            for (&k, map) in down {
                if pt.v >= map.eval_counted(alpha, &mut clamps) {
                    gear = gear.max(k);
                }
            }
            best = gear - 1;
        }
        Ok(self.output_at(pt, &cands[best], clamps))
    }
}

impl FuelModel for SemiPrincipledVehicle {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        pt.check_finite()?;
        if pt.v < 0.0 {
            return Ok(ModelSample {
                fuel_rate: 0.0,
                feasible: false,
            });
        }
        let out = self.eval(pt)?;
        Ok(ModelSample {
            fuel_rate: out.fuel_rate,
            feasible: out.feasible,
        })
    }

    fn domain(&self) -> Option<Domain> {
        let xs = &self.principled_maps.t_wmax_of_v.x;
        Some(Domain {
            v: (0.0, xs[xs.len() - 1]),
            a: (f64::NEG_INFINITY, f64::INFINITY),
            theta: (f64::NEG_INFINITY, f64::INFINITY),
        })
    }
}
