mod common;

use common::oracle::{argmin_gear, gear_scan, gear_states, sample_point};
use common::{manual_vehicle, synthetic_vehicle};
use energy_models::drive_cycles::{bundled_cycle, integrate_fuel, BUNDLED_CYCLES};
use energy_models::semi_principled::{export_grid, Axis, GridModel, GridSpec, SemiPrincipledVehicle};
use energy_models::simplified_model::{bundled, Duty};
use energy_models::{Error, FuelModel, OperatingPoint};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pt(v: f64, a: f64, th: f64) -> OperatingPoint {
    OperatingPoint::new(v, a, th)
}

#[test]
fn idle_is_short_circuited() {
    let veh = synthetic_vehicle();
    for th in [-0.03, 0.0, 0.02] {
        let out = veh.eval(pt(0.0, 0.0, th)).unwrap();
        assert_eq!(out.gear, 1);
        assert_eq!(out.n, veh.principled_constants.n_min);
        assert_eq!(out.t, veh.empirical_constants.t_min);
        assert_eq!(out.fuel_rate, veh.empirical_constants.f_idle);
        assert!(out.feasible);
    }
    let creeping = veh.eval(pt(0.0, 0.1, 0.0)).unwrap();
    assert_ne!(creeping.fuel_rate, veh.empirical_constants.f_idle);
}

#[test]
fn strong_braking_cuts_fuel() {
    let veh = synthetic_vehicle();
    let out = veh.eval(pt(10.0, -2.0, 0.0)).unwrap();
    assert!(out.f_wheel < veh.empirical_constants.f_wc);
    assert_eq!(out.fuel_rate, 0.0);
    assert_eq!(out.gear, veh.empirical_constants.downshift_gear(10.0));
    // Same force below the cut-off speed keeps fuelling.
    let slow = veh.eval(pt(4.0, -2.0, 0.0)).unwrap();
    assert!(slow.fuel_rate > 0.0);
}

#[test]
fn braking_follows_the_downshift_speeds() {
    let veh = synthetic_vehicle();
    for (v, want) in [(2.0, 1), (5.0, 2), (10.0, 3), (20.0, 4)] {
        assert_eq!(veh.eval(pt(v, -1.5, 0.0)).unwrap().gear, want, "v = {v}");
    }
}

#[test]
fn automatic_gear_matches_exhaustive_scan() {
    let (hits, seen) = gear_scan(&synthetic_vehicle(), 10_000, 7, false);
    assert_eq!(hits, seen);
}

#[test]
fn manual_gear_matches_two_stage_scan() {
    let (hits, seen) = gear_scan(&manual_vehicle(), 3_000, 11, true);
    assert_eq!(hits, seen);
}

#[test]
fn fuel_and_objective_agree_with_oracle() {
    let veh = synthetic_vehicle();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let p = sample_point(&mut rng);
        let out = veh.eval(p).unwrap();
        let states = gear_states(&veh, p.v, p.a, p.theta);
        let s = states[out.gear - 1];
        assert!((out.fuel_rate - s.fuel).abs() <= 1e-9 * s.fuel.abs().max(1.0));
        assert!((out.penalty - s.engine_penalty).abs() <= 1e-9 * s.engine_penalty.max(1.0));
    }
}

#[test]
fn manual_without_shift_maps_is_a_config_error() {
    let mut veh = manual_vehicle();
    veh.principled_maps.alpha_s = None;
    assert!(matches!(veh.eval(pt(10.0, 0.5, 0.0)), Err(Error::Config(_))));
}

#[test]
fn manual_idle_and_full_pedal() {
    let veh = manual_vehicle();
    let idle = veh.eval(pt(0.0, 0.0, 0.0)).unwrap();
    assert_eq!((idle.gear, idle.fuel_rate), (1, veh.empirical_constants.f_idle));
    // Well above the flat-shift angle the objective decides alone.
    let p = pt(15.0, 1.5, 0.0);
    let states = gear_states(&veh, p.v, p.a, p.theta);
    let k = argmin_gear(&states);
    assert!(states[k - 1].alpha >= veh.principled_maps.alpha_s.unwrap());
    assert_eq!(veh.eval(p).unwrap().gear, k);
}

#[test]
fn negative_speed_is_rejected_but_flagged_through_the_trait() {
    let veh = synthetic_vehicle();
    assert!(matches!(veh.eval(pt(-1.0, 0.0, 0.0)), Err(Error::Input(_))));
    let s = veh.sample(pt(-1.0, 0.0, 0.0)).unwrap();
    assert_eq!((s.fuel_rate, s.feasible), (0.0, false));
    assert!(veh.eval(pt(f64::NAN, 0.0, 0.0)).is_err());
}

#[test]
fn json_round_trip_and_validation() {
    let veh = synthetic_vehicle();
    let back = SemiPrincipledVehicle::from_json_str(&veh.to_json_string().unwrap()).unwrap();
    assert_eq!(veh, back);
    let mut bad = veh.clone();
    bad.principled_constants.r_tire = 0.0;
    assert!(bad.validate().is_err());
    let mut bad = veh;
    bad.principled_maps.t_max_of_n.x.reverse();
    assert!(bad.validate().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn powers_and_penalty(v in 0.05..35.0f64, a in -3.0..3.0f64, th in -0.03..0.03f64) {
        let veh = synthetic_vehicle();
        let out = veh.eval(pt(v, a, th)).unwrap();
        prop_assert_eq!(out.p_engine, out.n * out.t);
        prop_assert_eq!(out.p_wheel, out.f_wheel * v);
        prop_assert!(out.fuel_rate >= 0.0);
        if out.feasible {
            prop_assert_eq!(out.penalty, 0.0);
        } else {
            prop_assert!(out.penalty > 0.0);
        }
        let again = veh.eval(pt(v, a, th)).unwrap();
        prop_assert_eq!(out, again);
    }

    #[test]
    fn torque_correction_only_under_acceleration(v in 0.5..6.0f64, a in -1.0..0.0f64) {
        let veh = synthetic_vehicle();
        let f = veh.wheel_force(1, pt(v, a, 0.0)).unwrap();
        let mut clamps = 0;
        let c = veh.candidates(pt(v, a, 0.0), &mut clamps).unwrap();
        prop_assert_eq!(c[0].t, veh.steady_first_gear_torque(v, f));
    }
}

fn small_spec() -> GridSpec {
    GridSpec {
        v: Axis::new(0.0, 30.0, 31).unwrap(),
        a: Axis::new(-2.0, 2.0, 21).unwrap(),
        theta: Axis::new(-0.02, 0.02, 5).unwrap(),
    }
}

#[test]
fn grid_export_is_exact_at_nodes() {
    let veh = synthetic_vehicle();
    let spec = small_spec();
    let mut buf = Vec::new();
    export_grid(&veh, &spec, &mut buf).unwrap();
    let grid = GridModel::read(buf.as_slice()).unwrap();
    for v in spec.v.nodes().into_iter().step_by(5) {
        for a in spec.a.nodes().into_iter().step_by(4) {
            for th in spec.theta.nodes() {
                let want = veh.sample(pt(v, a, th)).unwrap().fuel_rate;
                assert_eq!(grid.fuel_rate(pt(v, a, th)), want, "({v},{a},{th})");
            }
        }
    }
    let mut again = Vec::new();
    export_grid(&veh, &spec, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn default_grid_tracks_the_simplified_model_over_cycles() {
    for key in ["compact_sedan", "class8_tractor"] {
        let model = bundled(key).unwrap();
        let mut buf = Vec::new();
        export_grid(&model, &GridSpec::default(), &mut buf).unwrap();
        assert!(buf.len() < 10_000_000, "{} bytes", buf.len());
        let grid = GridModel::read(buf.as_slice()).unwrap();
        for name in BUNDLED_CYCLES {
            let cycle = bundled_cycle(name).unwrap().with_constant_grade(0.01, Duty::LightDuty);
            let exact = integrate_fuel(&model, &cycle).unwrap().total;
            let approx = integrate_fuel(&grid, &cycle).unwrap().total;
            let err = (approx - exact).abs() / exact;
            assert!(err < 0.005, "{key}/{name}: {:.4}%", err * 100.0);
        }
    }
}

#[test]
fn truncated_dump_is_rejected() {
    let veh = synthetic_vehicle();
    let mut buf = Vec::new();
    export_grid(&veh, &small_spec(), &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let cut: String = text.lines().take(200).map(|l| format!("{l}\n")).collect();
    assert!(GridModel::read(cut.as_bytes()).is_err());
}
