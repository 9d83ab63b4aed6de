//! Least-squares fits of the engine maps to VCD samples.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::vcd::VcdSample;
use crate::linalg::{least_squares, rms_residual};
use crate::semi_principled::maps::{
    BivariatePoly, HingeKind, HingeSurface, Line, Plane, SpeedMap, TorqueMap,
};
use crate::semi_principled::{EmpiricalMaps, GearTable};
use crate::{Error, Result};

/// Iteration cap of the alternating hinge fit.
pub const HINGE_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fitted<T> {
    pub map: T,
    pub rms: f64,
}

fn poly_fit(
    what: &str,
    deg_x: usize,
    deg_y: usize,
    pts: impl Iterator<Item = (f64, f64, f64)>,
) -> Result<Fitted<BivariatePoly>> {
    let pts: Vec<_> = pts.collect();
    let cols = (deg_x + 1) * (deg_y + 1);
    let names: Vec<String> = (0..=deg_x)
        .flat_map(|i| (0..=deg_y).map(move |j| format!("x^{i}y^{j}")))
        .collect();
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let a = DMatrix::from_fn(pts.len(), cols, |r, c| {
        BivariatePoly::basis(deg_x, deg_y, pts[r].0, pts[r].1)[c]
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.2));
    let ls = least_squares(&a, &b, &names).map_err(|e| Error::fit(what, e.to_string()))?;
    Ok(Fitted {
        map: BivariatePoly::from_flat(deg_x, deg_y, &ls.coeffs),
        rms: ls.rms,
    })
}

/// Fuel rate against engine speed (degree 2) and torque (degree 3), over
/// every sample.
pub fn fit_fuel_map(samples: &[VcdSample]) -> Result<Fitted<BivariatePoly>> {
    poly_fit("fuel map", 2, 3, samples.iter().map(|s| (s.n, s.t, s.fuel)))
}

fn gear_samples(samples: &[VcdSample], gear: usize) -> Vec<&VcdSample> {
    samples.iter().filter(|s| s.gear == gear).collect()
}

/// Engine speed map for `gear`: degree 3 × 2 in `(N_output, F_wheel)` for
/// first gear, a line in `N_output` otherwise.
pub fn fit_engine_speed_map(samples: &[VcdSample], gear: usize) -> Result<Fitted<SpeedMap>> {
    let data = gear_samples(samples, gear);
    let what = format!("engine speed map, gear {gear}");
    if gear == 1 {
        let f = poly_fit(&what, 3, 2, data.iter().map(|s| (s.n_output, s.f_wheel, s.n)))?;
        return Ok(Fitted { map: SpeedMap::Poly(f.map), rms: f.rms });
    }
    let a = DMatrix::from_fn(data.len(), 2, |r, c| if c == 0 { 1.0 } else { data[r].n_output });
    let b = DVector::from_iterator(data.len(), data.iter().map(|s| s.n));
    let ls = least_squares(&a, &b, &["1", "N_output"]).map_err(|e| Error::fit(&what, e.to_string()))?;
    Ok(Fitted {
        map: SpeedMap::Line(Line {
            intercept: ls.coeffs[0],
            slope: ls.coeffs[1],
        }),
        rms: ls.rms,
    })
}

fn plane_design(pts: &[(f64, f64, f64)]) -> (DMatrix<f64>, DVector<f64>) {
    let a = DMatrix::from_fn(pts.len(), 3, |r, c| match c {
        0 => 1.0,
        1 => pts[r].0,
        _ => pts[r].1,
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.2));
    (a, b)
}

fn fit_plane(what: &str, pts: &[(f64, f64, f64)]) -> Result<Fitted<Plane>> {
    let (a, b) = plane_design(pts);
    let ls = least_squares(&a, &b, &["1", "x", "y"]).map_err(|e| Error::fit(what, e.to_string()))?;
    let c = &ls.coeffs;
    Ok(Fitted {
        map: Plane { c0: c[0], cx: c[1], cy: c[2] },
        rms: ls.rms,
    })
}

/// Two independent planes, one on each side of a partition.
fn fit_split(pts: &[(f64, f64, f64)], side: &[bool]) -> Option<(Plane, Plane)> {
    let a = DMatrix::from_fn(pts.len(), 6, |r, c| {
        let (x, y, _) = pts[r];
        let on = side[r] == (c < 3);
        if !on {
            return 0.0;
        }
        match c % 3 {
            0 => 1.0,
            1 => x,
            _ => y,
        }
    });
    let b = DVector::from_iterator(pts.len(), pts.iter().map(|p| p.2));
    let names = ["1a", "xa", "ya", "1b", "xb", "yb"];
    let c = least_squares(&a, &b, &names).ok()?.coeffs;
    Some((
        Plane { c0: c[0], cx: c[1], cy: c[2] },
        Plane { c0: c[3], cx: c[4], cy: c[5] },
    ))
}

fn hinge_sse(pts: &[(f64, f64, f64)], h: &HingeSurface) -> f64 {
    pts.iter().map(|&(x, y, z)| (h.eval(x, y) - z).powi(2)).sum()
}

/// Alternates between fitting a plane per side and moving the partition to
/// the line where the planes meet. Returns the surface if the partition
/// settles within the iteration cap.
fn refine_hinge(pts: &[(f64, f64, f64)], mut side: Vec<bool>) -> Option<HingeSurface> {
    for _ in 0..HINGE_MAX_ITERATIONS {
        let (p, q) = fit_split(pts, &side)?;
        let above: Vec<bool> = pts.iter().map(|&(x, y, _)| p.eval(x, y) > q.eval(x, y)).collect();
        let agree = above.iter().zip(&side).filter(|(a, s)| a == s).count();
        // `p` holds where it is the larger facet (max) or the smaller (min).
        let (kind, next): (HingeKind, Vec<bool>) = if 2 * agree >= pts.len() {
            (HingeKind::Max, above)
        } else {
            (HingeKind::Min, above.iter().map(|a| !a).collect())
        };
        if next == side {
            return Some(HingeSurface { p, q, kind });
        }
        side = next;
    }
    None
}

/// Candidate partitions: lines at 24 orientations through 9 quantile
/// offsets of the standardized inputs.
fn seed_partitions(pts: &[(f64, f64, f64)]) -> Vec<Vec<bool>> {
    let n = pts.len() as f64;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let sx = (pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / n).sqrt().max(f64::MIN_POSITIVE);
    let sy = (pts.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / n).sqrt().max(f64::MIN_POSITIVE);
    let mut seeds = Vec::new();
    for i in 0..24 {
        let phi = std::f64::consts::PI * i as f64 / 24.0;
        let (c, s) = (phi.cos(), phi.sin());
        let proj: Vec<f64> = pts
            .iter()
            .map(|p| c * (p.0 - mx) / sx + s * (p.1 - my) / sy)
            .collect();
        let mut sorted = proj.clone();
        sorted.sort_by(f64::total_cmp);
        for q in 1..10 {
            let cut = sorted[(sorted.len() * q / 10).min(sorted.len() - 1)];
            seeds.push(proj.iter().map(|&v| v > cut).collect());
        }
    }
    seeds
}

/// Continuous two-facet fit, seeded from a plane fit. Falls back to the
/// plane, with a warning, when no seed converges or the hinge does not
/// reduce the residual.
pub fn fit_hinge_surface(what: &str, pts: &[(f64, f64, f64)]) -> Result<Fitted<TorqueMap>> {
    let plane = fit_plane(what, pts)?;
    let plane_sse = plane.rms.powi(2) * pts.len() as f64;
    let scale: f64 = pts.iter().map(|p| p.2 * p.2).sum::<f64>().max(f64::MIN_POSITIVE);
    let as_plane = || Fitted {
        map: TorqueMap::Plane(plane.map),
        rms: plane.rms,
    };
    if plane_sse <= 1e-24 * scale {
        return Ok(as_plane());
    }

    let mut seeds: Vec<(f64, Vec<bool>)> = seed_partitions(pts)
        .into_iter()
        .filter_map(|side| {
            let (p, q) = fit_split(pts, &side)?;
            let e: f64 = pts
                .iter()
                .zip(&side)
                .map(|(&(x, y, z), &s)| (if s { p.eval(x, y) } else { q.eval(x, y) } - z).powi(2))
                .sum();
            Some((e, side))
        })
        .collect();
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<(HingeSurface, f64)> = None;
    let mut converged = false;
    for (_, side) in seeds.into_iter().take(8) {
        if let Some(h) = refine_hinge(pts, side) {
            converged = true;
            let e = hinge_sse(pts, &h);
            if best.is_none_or(|(_, be)| e < be) {
                best = Some((h, e));
            }
        }
    }
    match best {
        Some((h, e)) if e < plane_sse => Ok(Fitted {
            map: TorqueMap::Hinge(h),
            rms: (e / pts.len() as f64).sqrt(),
        }),
        _ => {
            if converged {
                log::warn!("{what}: two-facet fit does not improve on the plane; using the plane");
            } else {
                log::warn!(
                    "{what}: two-facet fit did not converge in {HINGE_MAX_ITERATIONS} iterations; using the plane"
                );
            }
            Ok(as_plane())
        }
    }
}

/// Engine torque map for `gear`: a continuous two-facet surface for first
/// gear, a plane in `(N_output, F_wheel)` otherwise.
pub fn fit_engine_torque_map(samples: &[VcdSample], gear: usize) -> Result<Fitted<TorqueMap>> {
    let pts: Vec<_> = gear_samples(samples, gear)
        .iter()
        .map(|s| (s.n_output, s.f_wheel, s.t))
        .collect();
    let what = format!("engine torque map, gear {gear}");
    if gear == 1 {
        return fit_hinge_surface(&what, &pts);
    }
    let f = fit_plane(&what, &pts)?;
    Ok(Fitted {
        map: TorqueMap::Plane(f.map),
        rms: f.rms,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapFitReport {
    pub fuel_rms: f64,
    pub speed_rms: Vec<f64>,
    pub torque_rms: Vec<f64>,
}

/// Fits every empirical map for gears `1..=gears`.
pub fn fit_empirical_maps(samples: &[VcdSample], gears: usize) -> Result<(EmpiricalMaps, MapFitReport)> {
    if gears == 0 {
        return Err(Error::Input("at least one gear is required".into()));
    }
    let fuel = fit_fuel_map(samples)?;
    let mut speed = Vec::with_capacity(gears);
    let mut torque = Vec::with_capacity(gears);
    for k in 1..=gears {
        speed.push(fit_engine_speed_map(samples, k)?);
        torque.push(fit_engine_torque_map(samples, k)?);
    }
    let report = MapFitReport {
        fuel_rms: fuel.rms,
        speed_rms: speed.iter().map(|f| f.rms).collect(),
        torque_rms: torque.iter().map(|f| f.rms).collect(),
    };
    let maps = EmpiricalMaps {
        fuel_poly: fuel.map,
        engine_speed_fit: GearTable::new(speed.into_iter().map(|f| f.map).collect()),
        engine_torque_fit: GearTable::new(torque.into_iter().map(|f| f.map).collect()),
    };
    Ok((maps, report))
}

/// Residual of a plane-fit design, exposed for comparisons in tests.
pub fn plane_rms(pts: &[(f64, f64, f64)]) -> Result<f64> {
    let f = fit_plane("plane", pts)?;
    let (a, b) = plane_design(pts);
    Ok(rms_residual(&a, &b, &[f.map.c0, f.map.cx, f.map.cy]))
}
