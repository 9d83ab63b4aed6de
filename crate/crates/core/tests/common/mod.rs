#![allow(dead_code)]
pub mod oracle;


use std::collections::BTreeMap;
use std::path::PathBuf;

use energy_models::map_fitting::{DriveTrace, TcState, TraceRow, VcdSample};
use energy_models::reduction_pipeline::{kkt_violation, nnls};
use energy_models::semi_principled::maps::{BivariatePoly, Grid1d, Plane, SpeedMap, TorqueMap};
use energy_models::semi_principled::{EmpiricalMaps, SemiPrincipledVehicle, Transmission};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const KEYS: [&str; 6] = [
    "compact_sedan",
    "midsize_sedan",
    "midsize_suv",
    "midsize_pickup",
    "class4_pnd",
    "class8_tractor",
];

/// Published parameter table, one column per vehicle in `KEYS` order. `None`
/// marks a dash.
pub const TABLE: [(&str, [Option<f64>; 6]); 27] = {
    const N: Option<f64> = None;
    const fn s(x: f64) -> Option<f64> {
        Some(x)
    }
    [
        ("v_c", [s(5.040e+00), s(5.070e+00), s(9.160e+00), s(1.100e+01), N, N]),
        ("a0", [s(-2.698e-01), s(-1.574e-01), s(-2.685e-01), s(-2.646e-01), N, N]),
        ("a1", [s(-2.400e-03), s(-3.788e-04), s(-1.527e-03), s(-1.382e-03), N, N]),
        ("a2", [s(-9.062e+00), s(-9.112e+00), s(-9.430e+00), s(-9.494e+00), N, N]),
        ("a3", [s(-2.922e-04), s(-2.296e-04), s(-3.284e-04), s(-3.981e-04), N, N]),
        ("a4", [s(-1.190e-02), s(-1.156e-02), s(-5.382e-03), s(-4.408e-03), N, N]),
        ("beta", [s(9.720e-02), s(1.271e-01), s(1.637e-01), s(1.999e-01), N, N]),
        ("h0", [N, N, N, N, s(0.0), s(4.911e-01)]),
        ("h1", [N, N, N, N, s(3.172e-02), s(2.515e-02)]),
        ("c0", [s(1.592e-01), s(1.983e-01), s(2.250e-01), s(2.632e-01), s(2.429e-01), s(5.945e-01)]),
        ("c1", [s(1.346e-02), s(2.112e-02), s(2.129e-02), s(2.343e-02), s(3.827e-02), s(8.261e-02)]),
        ("c2", [s(0.0), s(0.0), s(0.0), s(0.0), s(0.0), s(0.0)]),
        ("c3", [s(3.189e-05), s(2.780e-05), s(3.765e-05), s(5.521e-05), s(1.870e-04), s(2.728e-04)]),
        ("p0", [s(4.783e-02), s(2.396e-01), s(1.742e-01), s(2.380e-01), s(6.501e-01), s(2.048e-01)]),
        ("p1", [s(8.697e-02), s(8.059e-03), s(9.462e-02), s(1.029e-01), s(3.338e-01), s(1.196e+00)]),
        ("p2", [s(6.825e-08), s(2.774e-03), s(7.135e-04), s(1.259e-03), s(2.552e-03), s(1.912e-02)]),
        ("q0", [s(2.556e-03), s(0.0), s(0.0), s(0.0), s(3.674e-01), s(0.0)]),
        ("q1", [s(1.910e-02), s(5.056e-02), s(2.884e-02), s(3.028e-02), s(4.294e-02), s(1.442e-01)]),
        ("z0", [s(1.328e-01), s(2.523e+00), s(2.321e+00), s(3.766e+00), s(2.069e+00), s(8.815e-01)]),
        ("z1", [s(7.798e-01), s(7.646e-01), s(7.445e-01), s(6.924e-01), s(3.772e+00), s(1.119e+01)]),
        ("z2", [s(1.973e-03), s(6.021e-03), s(1.307e-02), s(2.378e-02), s(0.0), s(1.884e-01)]),
        ("b1", [s(3.360e+00), s(3.922e+00), s(3.338e+00), s(3.016e+00), s(1.264e+00), s(2.423e+00)]),
        ("b2", [s(4.160e+01), s(4.899e+01), s(5.346e+01), s(6.038e+01), s(1.496e+01), s(8.446e+00)]),
        ("b3", [s(2.119e-04), s(1.396e-04), s(2.390e-04), s(3.833e-04), s(4.953e-04), s(2.627e-04)]),
        ("b4", [s(8.936e+00), s(8.904e+00), s(9.185e+00), s(9.133e+00), s(9.569e+00), s(9.739e+00)]),
        ("b5", [s(3.976e+00), s(6.189e+00), s(8.140e+00), s(8.913e+00), s(7.503e+00), s(8.617e+00)]),
        ("b6", [s(2.448e-01), s(1.005e-01), s(3.430e-02), s(6.303e-03), s(9.943e-02), s(1.576e-01)]),
    ]
};

/// Table column for one vehicle as a name → value map.
pub fn column(key: &str) -> BTreeMap<&'static str, f64> {
    let i = KEYS.iter().position(|k| *k == key).expect("known key");
    TABLE
        .iter()
        .filter_map(|(name, col)| col[i].map(|x| (*name, x)))
        .collect()
}

pub fn is_light(key: &str) -> bool {
    column(key).contains_key("v_c")
}

/// Straight substitution into the simplified fuel formula, written
/// independently of the library.
pub fn hand_fuel(key: &str, v: f64, a: f64, th: f64) -> f64 {
    let c = column(key);
    if v < 0.0 {
        return 0.0;
    }
    let cap_c = c["c0"] + c["c1"] * v + c["c2"] * v * v + c["c3"] * v * v * v;
    let cap_p = c["p0"] + c["p1"] * v + c["p2"] * v * v;
    let cap_q = c["q0"] + c["q1"] * v;
    let cap_z = c["z0"] + c["z1"] * v + c["z2"] * v * v;
    let a_plus = if cap_q > 0.0 { a.max(-cap_p / (2.0 * cap_q)) } else { a };
    let fp = cap_c + cap_p * a_plus + cap_q * a_plus * a_plus + cap_z * th;
    let floor = if is_light(key) {
        if v <= c["v_c"] {
            c["beta"]
        } else {
            0.0
        }
    } else {
        c["h0"] + c["h1"] * v
    };
    fp.max(floor).max(0.0)
}

pub fn hand_a_max(key: &str, v: f64, th: f64) -> f64 {
    let c = column(key);
    let first = if v == 0.0 {
        c["b1"]
    } else {
        c["b1"].min(c["b2"] / v - c["b3"] * v * v)
    };
    first - c["b4"].min(c["b5"] + c["b6"] * v) * th
}

pub fn close(got: f64, want: f64, rel: f64, abs: f64) -> bool {
    (got - want).abs() <= abs.max(rel * want.abs())
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn synthetic_vehicle() -> SemiPrincipledVehicle {
    SemiPrincipledVehicle::from_json_file(data_dir().join("semi/synthetic_4speed.json")).unwrap()
}

/// Manual variant of the synthetic vehicle. Upshift speeds rise with pedal
/// angle; downshift speeds sit 2 m/s below them.
pub fn manual_vehicle() -> SemiPrincipledVehicle {
    let mut v = synthetic_vehicle();
    v.transmission = Transmission::Manual;
    let alpha = vec![0.0, 0.5, 1.0];
    let base = [(2, 4.0), (3, 8.0), (4, 12.0)];
    let up: BTreeMap<usize, Grid1d> = base
        .iter()
        .map(|&(k, s)| (k, Grid1d::new(alpha.clone(), vec![s, s + 3.0, s + 6.0]).unwrap()))
        .collect();
    let down = base
        .iter()
        .map(|&(k, s)| (k, Grid1d::new(alpha.clone(), vec![s - 2.0, s + 1.0, s + 4.0]).unwrap()))
        .collect();
    v.principled_maps.v_upshift = Some(up);
    v.principled_maps.v_downshift = Some(down);
    v.principled_maps.alpha_s = Some(0.1);
    v.validate().unwrap();
    v
}

/// Exhaustive NNLS: every passive subset solved by the normal equations,
/// keeping the best one whose coefficients are all positive. Returns the
/// coefficients and the indices held at zero.
pub fn nnls_brute(a: &[Vec<f64>], b: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = a[0].len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << n) {
        let cols: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
        let mut x = vec![0.0; n];
        if !cols.is_empty() {
            let k = cols.len();
            let mut m = vec![vec![0.0; k + 1]; k];
            for (r, row) in a.iter().enumerate() {
                for i in 0..k {
                    for j in 0..k {
                        m[i][j] += row[cols[i]] * row[cols[j]];
                    }
                    m[i][k] += row[cols[i]] * b[r];
                }
            }
            let z = gauss_solve(m);
            if z.iter().any(|&v| v <= 0.0) {
                continue;
            }
            for (i, &c) in cols.iter().enumerate() {
                x[c] = z[i];
            }
        }
        let sse: f64 = a
            .iter()
            .zip(b)
            .map(|(row, bi)| {
                let r = row.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() - bi;
                r * r
            })
            .sum();
        if best.as_ref().is_none_or(|(s, _)| sse < *s) {
            best = Some((sse, x));
        }
    }
    let x = best.unwrap().1;
    let zeros = (0..n).filter(|&j| x[j] == 0.0).collect();
    (x, zeros)
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
pub fn gauss_solve(mut m: Vec<Vec<f64>>) -> Vec<f64> {
    let k = m.len();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, p);
        let pivot = m[c].clone();
        for row in m.iter_mut().skip(c + 1) {
            let f = row[c] / pivot[c];
            for (x, p) in row.iter_mut().zip(&pivot).skip(c) {
                *x -= f * p;
            }
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|j| m[r][j] * x[j]).sum();
        x[r] = (m[r][k] - s) / m[r][r];
    }
    x
}

/// Values planted in [`planted_trace`].
pub struct Planted {
    pub f_idle: f64,
    pub t_min: f64,
    pub v_c: f64,
    pub f_wc: f64,
    pub downshift: BTreeMap<usize, f64>,
}

/// Drive trace at 10 Hz with an idle stretch, a coast-down with fuel cut at
/// 6..20 m/s, and braking downshifts at known speeds.
pub fn planted_trace() -> (DriveTrace, Planted) {
    let mut rows = Vec::new();
    let mut push = |v: f64, gear: usize, t_engine: f64, fuel: f64, f_wheel: f64| {
        rows.push(TraceRow {
            t: rows.len() as f64 * 0.1,
            v,
            gear,
            n: 80.0 + 30.0 * v,
            t_engine,
            fuel,
            f_wheel,
            tc_state: TcState::Steady,
        });
    };
    for _ in 0..60 {
        push(0.0, 1, 12.0, 0.3, 0.0);
    }
    for i in 0..20 {
        push(1.0 + i as f64 * 0.5, 2, 60.0 + i as f64, 1.2, 400.0);
    }
    // Coast-down, fuel cut, F_wheel −240..−100 in steps of 10.
    for i in 0..15 {
        push(20.0 - i as f64, 3, 10.0, 0.0, -240.0 + 10.0 * i as f64);
    }
    let events = [(4, [12.0, 13.5, 12.5].as_slice()), (3, &[8.0, 7.0]), (2, &[3.0, 3.5, 2.5, 2.0])];
    for (k, speeds) in events {
        for &s in speeds {
            push(s + 0.4, k, 30.0, 0.4, 50.0);
            push(s, k - 1, 20.0, 0.2, -150.0);
            push(s, k - 1, 25.0, 0.4, 50.0);
        }
    }
    let downshift = [(4, 12.5), (3, 7.5), (2, 2.75)].into_iter().collect();
    (
        DriveTrace::new(rows).unwrap(),
        Planted {
            f_idle: 0.3,
            t_min: 12.0,
            v_c: 6.0,
            f_wc: -100.0,
            downshift,
        },
    )
}

/// 50 × 3 system with a signed planted solution plus noise.
pub fn random_system(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>) {
    let a: Vec<Vec<f64>> = (0..50).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
    let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b = a
        .iter()
        .map(|r| r.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() + rng.gen_range(-0.1..0.1))
        .collect();
    (a, b)
}

/// Runs the library NNLS against [`nnls_brute`] on `cases` random systems.
/// Returns how many cases had a binding constraint.
pub fn nnls_agreement(cases: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constrained = 0;
    for case in 0..cases {
        let (rows, b) = random_system(&mut rng);
        let (want, zeros) = nnls_brute(&rows, &b);
        let a = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
        let bv = DVector::from_vec(b);
        let got = nnls(&a, &bv).map_err(|e| format!("case {case}: {e}"))?;
        if got.active != zeros {
            return Err(format!("case {case}: active {:?} vs {zeros:?}", got.active));
        }
        for (g, w) in got.coeffs.iter().zip(&want) {
            if (g - w).abs() > 1e-9 * w.abs().max(1.0) {
                return Err(format!("case {case}: {g} vs {w}"));
            }
        }
        if kkt_violation(&a, &bv, &got.coeffs) >= 1e-9 {
            return Err(format!("case {case}: KKT violated"));
        }
        constrained += usize::from(!zeros.is_empty());
    }
    Ok(constrained)
}

/// Coefficient-wise comparison at 1e-6 relative. Coefficients that should be
/// zero are judged by their largest contribution over `inputs`.
pub fn poly_match(got: &BivariatePoly, want: &BivariatePoly, inputs: &[(f64, f64)], what: &str) -> Result<(), String> {
    if got.degrees() != want.degrees() {
        return Err(format!("{what}: degrees {:?} vs {:?}", got.degrees(), want.degrees()));
    }
    let (xm, ym) = inputs.iter().fold((0.0f64, 0.0f64), |m, p| (m.0.max(p.0.abs()), m.1.max(p.1.abs())));
    let peak = inputs.iter().map(|p| want.eval(p.0, p.1).abs()).fold(0.0, f64::max);
    for (i, (gr, wr)) in got.coeffs.iter().zip(&want.coeffs).enumerate() {
        for (j, (g, w)) in gr.iter().zip(wr).enumerate() {
            let reach = xm.powi(i as i32) * ym.powi(j as i32);
            let ok = if *w != 0.0 {
                (g - w).abs() <= 1e-6 * w.abs()
            } else {
                (g - w).abs() * reach <= 1e-6 * peak
            };
            if !ok {
                return Err(format!("{what} c{i}{j}: {g} vs {w}"));
            }
        }
    }
    Ok(())
}

pub fn plane_match(got: &Plane, want: &Plane) -> bool {
    let c = |g: f64, w: f64| (g - w).abs() <= 1e-6 * w.abs().max(1e-9);
    c(got.c0, want.c0) && c(got.cx, want.cx) && c(got.cy, want.cy)
}

/// Refitted maps against the originals. Hinge facets may come back in
/// either order.
pub fn maps_match(got: &EmpiricalMaps, want: &EmpiricalMaps, samples: &[VcdSample]) -> Result<(), String> {
    let nt: Vec<_> = samples.iter().map(|s| (s.n, s.t)).collect();
    poly_match(&got.fuel_poly, &want.fuel_poly, &nt, "fuel")?;
    for (k, _) in want.engine_speed_fit.iter() {
        let inputs: Vec<_> = samples.iter().filter(|s| s.gear == k).map(|s| (s.n_output, s.f_wheel)).collect();
        match (got.engine_speed_fit.get(k), want.engine_speed_fit.get(k)) {
            (SpeedMap::Poly(g), SpeedMap::Poly(w)) => poly_match(g, w, &inputs, &format!("speed {k}"))?,
            (SpeedMap::Line(g), SpeedMap::Line(w)) => {
                let x_max = inputs.iter().map(|p| p.0).fold(0.0, f64::max);
                if (g.slope - w.slope).abs() > 1e-6 * w.slope.abs()
                    || (g.intercept - w.intercept).abs() > 1e-6 * (w.slope * x_max).abs()
                {
                    return Err(format!("speed {k}: {g:?} vs {w:?}"));
                }
            }
            other => return Err(format!("speed {k}: map kind changed {other:?}")),
        }
        match (got.engine_torque_fit.get(k), want.engine_torque_fit.get(k)) {
            (TorqueMap::Hinge(g), TorqueMap::Hinge(w)) => {
                let same = plane_match(&g.p, &w.p) && plane_match(&g.q, &w.q);
                let swapped = plane_match(&g.p, &w.q) && plane_match(&g.q, &w.p);
                if g.kind != w.kind || !(same || swapped) {
                    return Err(format!("torque {k}: {g:?} vs {w:?}"));
                }
            }
            (TorqueMap::Plane(g), TorqueMap::Plane(w)) if plane_match(g, w) => {}
            other => return Err(format!("torque {k}: {other:?}")),
        }
    }
    Ok(())
}
