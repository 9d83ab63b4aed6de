//! Straight-line reimplementation of the per-gear objective, used to check
//! gear choice by exhaustive scan.

use energy_models::semi_principled::maps::{SpeedMap, TorqueMap};
use energy_models::semi_principled::{SemiPrincipledVehicle, Transmission};
use energy_models::OperatingPoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let n = xs.len();
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let mut i = 0;
    while xs[i + 1] <= x {
        i += 1;
    }
    if x == xs[i] {
        return ys[i];
    }
    ys[i] + (x - xs[i]) / (xs[i + 1] - xs[i]) * (ys[i + 1] - ys[i])
}

fn lower_index(xs: &[f64], x: f64) -> usize {
    let mut i = 0;
    while i + 1 < xs.len() && xs[i + 1] <= x {
        i += 1;
    }
    i
}

fn poly(c: &[Vec<f64>], x: f64, y: f64) -> f64 {
    let mut s = 0.0;
    for (i, row) in c.iter().enumerate() {
        for (j, cij) in row.iter().enumerate() {
            s += cij * x.powi(i as i32) * y.powi(j as i32);
        }
    }
    s
}

#[derive(Debug, Clone, Copy)]
pub struct GearState {
    pub f_wheel: f64,
    pub alpha: f64,
    pub fuel: f64,
    pub objective: f64,
    pub engine_penalty: f64,
}

/// Objective of every gear at `(v, a, theta)`.
pub fn gear_states(veh: &SemiPrincipledVehicle, v: f64, a: f64, theta: f64) -> Vec<GearState> {
    let c = &veh.principled_constants;
    let e = &veh.empirical_constants;
    let pm = &veh.principled_maps;
    let em = &veh.empirical_maps;
    let w = &veh.weights;
    let n_out = c.d_r * v / c.r_tire;
    let tw = interp(&pm.t_wmax_of_v.x, &pm.t_wmax_of_v.y, v);
    (1..=veh.gears())
        .map(|k| {
            let f = c.m_general.get(k) * a + c.r_a * v * v + c.r_r * v + c.r_g + c.m_vehicle * theta.sin() * c.g_const;
            let alpha = f * c.r_tire / tw;
            let g_map = pm.k_upshift.gear[lower_index(&pm.k_upshift.alpha, alpha)][lower_index(&pm.k_upshift.v, v)];
            let twk = pm.t_wmax_of_v_k.get(k);
            let f_max = interp(&twk.x, &twk.y, v) / c.r_tire;
            let (x, y) = if k == 1 {
                (n_out.min(c.n_max / c.g_r.get(1)), f.min(f_max))
            } else {
                (n_out, f)
            };
            let n_raw = match em.engine_speed_fit.get(k) {
                SpeedMap::Poly(p) => poly(&p.coeffs, x, y),
                SpeedMap::Line(l) => l.slope * x + l.intercept,
            };
            let t_raw = match em.engine_torque_fit.get(k) {
                TorqueMap::Plane(p) => p.c0 + p.cx * x + p.cy * y,
                TorqueMap::Hinge(h) => {
                    let (p, q) = (h.p.c0 + h.p.cx * x + h.p.cy * y, h.q.c0 + h.q.cx * x + h.q.cy * y);
                    match h.kind {
                        energy_models::semi_principled::maps::HingeKind::Max => p.max(q),
                        energy_models::semi_principled::maps::HingeKind::Min => p.min(q),
                    }
                }
            };
            let n = n_raw.max(c.n_min);
            let mut t = t_raw.max(e.t_min);
            if k == 1 {
                t += e.torque_correction.slope * a.max(0.0) + e.torque_correction.intercept;
            }
            let t_max = interp(&pm.t_max_of_n.x, &pm.t_max_of_n.y, n);
            let cut = v > e.v_c && y < e.f_wc;
            let fuel = if cut { 0.0 } else { poly(&em.fuel_poly.coeffs, n, t).max(0.0) };
            let (mut gear_pen, mut engine_pen) = (0.0, 0.0);
            if !cut {
                gear_pen = match veh.transmission {
                    Transmission::Automatic if k > 1 && g_map < k => w.w_g * (k - g_map) as f64,
                    Transmission::Automatic => 0.0,
                    Transmission::Manual => match pm.v_upshift.as_ref().and_then(|m| m.get(&k)) {
                        Some(g) => {
                            let v_up = interp(&g.x, &g.y, alpha);
                            if v < v_up {
                                w.c_m * (v_up - v)
                            } else {
                                0.0
                            }
                        }
                        None => 0.0,
                    },
                };
                engine_pen = w.w_n * (n - c.n_max).max(0.0)
                    + w.w_t * (t - t_max).max(0.0)
                    + w.w_f * (f - f_max).max(0.0);
            }
            GearState {
                f_wheel: f,
                alpha,
                fuel,
                objective: fuel + gear_pen + engine_pen,
                engine_penalty: engine_pen,
            }
        })
        .collect()
}

/// Lowest gear attaining the minimum objective.
pub fn argmin_gear(states: &[GearState]) -> usize {
    let mut best = 0;
    for (i, s) in states.iter().enumerate() {
        if s.objective < states[best].objective {
            best = i;
        }
    }
    best + 1
}

/// Two-stage manual rule: objective minimum, then the downshift-map
/// read-back below the flat-shift pedal angle.
pub fn manual_gear(veh: &SemiPrincipledVehicle, states: &[GearState], v: f64) -> usize {
    let k = argmin_gear(states);
    let alpha = states[k - 1].alpha;
    if alpha >= veh.principled_maps.alpha_s.unwrap() {
        return k;
    }
    let down = veh.principled_maps.v_downshift.as_ref().unwrap();
    let mut gear = 1;
    for (&kk, g) in down {
        if v >= interp(&g.x, &g.y, alpha) && kk > gear {
            gear = kk;
        }
    }
    gear
}

pub fn sample_point(rng: &mut ChaCha8Rng) -> OperatingPoint {
    OperatingPoint::new(rng.gen_range(0.05..35.0), rng.gen_range(-3.0..3.0), rng.gen_range(-0.03..0.03))
}

/// Scans random points until `want` feasible non-braking cases are seen and
/// returns (matches, total).
pub fn gear_scan(veh: &SemiPrincipledVehicle, want: usize, seed: u64, manual: bool) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut hits, mut seen) = (0, 0);
    while seen < want {
        let p = sample_point(&mut rng);
        let out = veh.eval(p).unwrap();
        let states = gear_states(veh, p.v, p.a, p.theta);
        let k = argmin_gear(&states);
        if !out.feasible || states[k - 1].f_wheel < 0.0 {
            continue;
        }
        seen += 1;
        let expect = if manual { manual_gear(veh, &states, p.v) } else { k };
        if out.gear == expect {
            hits += 1;
        } else {
            eprintln!("{p:?}: library {} oracle {expect}", out.gear);
        }
    }
    (hits, seen)
}
