//! Empirical constants extracted from drive traces.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::semi_principled::maps::Line;
use crate::semi_principled::EmpiricalConstants;
use crate::{Error, Result};

/// Standstill speed threshold, m/s.
pub const IDLE_SPEED: f64 = 0.1;
/// Torque rate bound for a settled idle, Nm/s.
pub const IDLE_TORQUE_RATE: f64 = 0.01;
/// Half-width of the settled-idle window, s.
pub const IDLE_WINDOW_S: f64 = 1.0;
/// Fuel rate below which a moving sample counts as fuel-cut, g/s.
pub const FUEL_CUT_RATE: f64 = 0.05;
pub const FUEL_CUT_MIN_SPEED: f64 = 1.0;
/// Upper acceleration bound of the low region, m/s².
pub const LOW_ACCEL: f64 = 1.0;
/// Lower acceleration bound of the high region, m/s².
pub const HIGH_ACCEL: f64 = 2.0;
pub const REGION_SAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TcState {
    Locked,
    Steady,
    Transient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub v: f64,
    pub gear: usize,
    #[serde(rename = "N")]
    pub n: f64,
    #[serde(rename = "T")]
    pub t_engine: f64,
    pub fuel: f64,
    #[serde(rename = "F_wheel")]
    pub f_wheel: f64,
    pub tc_state: TcState,
}

/// Uniformly sampled drive trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTrace {
    rows: Vec<TraceRow>,
    dt: f64,
}

impl DriveTrace {
    pub fn new(rows: Vec<TraceRow>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Input("drive trace needs at least two samples".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            let vals = [r.t, r.v, r.n, r.t_engine, r.fuel, r.f_wheel];
            if vals.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    row: i + 1,
                    reason: "non-finite value".into(),
                });
            }
            if r.gear == 0 {
                return Err(Error::Parse {
                    row: i + 1,
                    reason: "gear must be at least 1".into(),
                });
            }
        }
        let dt = rows[1].t - rows[0].t;
        if dt <= 0.0 {
            return Err(Error::Parse {
                row: 2,
                reason: "time must be strictly increasing".into(),
            });
        }
        for (i, w) in rows.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            if step <= 0.0 {
                return Err(Error::Parse {
                    row: i + 2,
                    reason: "time must be strictly increasing".into(),
                });
            }
            if (step - dt).abs() > 1e-6 * dt.max(1.0) {
                return Err(Error::Parse {
                    row: i + 2,
                    reason: format!("non-uniform time step {step} (expected {dt})"),
                });
            }
        }
        Ok(Self { rows, dt })
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let mut rows = Vec::new();
        for (i, rec) in rd.deserialize::<TraceRow>().enumerate() {
            rows.push(rec.map_err(|e| Error::Parse {
                row: i + 1,
                reason: e.to_string(),
            })?);
        }
        Self::new(rows)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Central differences, one-sided at the ends.
    pub fn derivative(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        let n = self.rows.len();
        (0..n)
            .map(|i| {
                let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (f(&self.rows[hi]) - f(&self.rows[lo])) / ((hi - lo) as f64 * self.dt)
            })
            .collect()
    }

    pub fn acceleration(&self) -> Vec<f64> {
        self.derivative(|r| r.v)
    }
}

/// Nearest-rank percentile: the value at rank `ceil(p/100 · n)`.
pub fn percentile_nearest_rank(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = ((p / 100.0) * s.len() as f64).ceil() as usize;
    Some(s[rank.clamp(1, s.len()) - 1])
}

/// Middle value; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

/// Running mean; constant inputs come back unchanged.
fn mean(values: &[f64]) -> Option<f64> {
    let mut m = *values.first()?;
    for (k, x) in values.iter().enumerate().skip(1) {
        m += (x - m) / (k + 1) as f64;
    }
    Some(m)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractionDiagnostics {
    pub idle_samples: usize,
    pub fuel_cut_samples: usize,
    /// Downshift events per upper gear of the pair.
    pub downshift_events: BTreeMap<usize, usize>,
    pub low_accel_candidates: usize,
    pub high_accel_candidates: usize,
    pub missing: Vec<String>,
}

/// Constants recovered from a trace. A field is `None` when the trace has no
/// qualifying samples for it.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractedConstants {
    pub t_min: Option<f64>,
    pub f_idle: Option<f64>,
    pub v_c: Option<f64>,
    pub f_wc: Option<f64>,
    pub downshift_speeds: BTreeMap<usize, f64>,
    /// Slope of the first-gear torque correction, Nm per m/s².
    pub torque_correction_slope: Option<f64>,
    /// Region means `(a, error)` behind the slope.
    pub correction_points: Vec<(f64, f64)>,
    pub diagnostics: ExtractionDiagnostics,
}

impl ExtractedConstants {
    /// Completes the constants, taking missing fields from `fallback`.
    pub fn into_empirical(self, fallback: Option<&EmpiricalConstants>) -> Result<EmpiricalConstants> {
        fn pick(name: &str, v: Option<f64>, fb: Option<f64>) -> Result<f64> {
            v.or(fb)
                .ok_or_else(|| Error::Config(format!("{name} not found in the trace and no fallback given")))
        }
        let mut downshift_speeds = fallback.map(|f| f.downshift_speeds.clone()).unwrap_or_default();
        downshift_speeds.extend(self.downshift_speeds);
        let slope = pick(
            "torque correction",
            self.torque_correction_slope,
            fallback.map(|f| f.torque_correction.slope),
        )?;
        Ok(EmpiricalConstants {
            t_min: pick("T_min", self.t_min, fallback.map(|f| f.t_min))?,
            f_idle: pick("f_idle", self.f_idle, fallback.map(|f| f.f_idle))?,
            v_c: pick("v_c", self.v_c, fallback.map(|f| f.v_c))?,
            f_wc: pick("F_wc", self.f_wc, fallback.map(|f| f.f_wc))?,
            downshift_speeds,
            torque_correction: Line { slope, intercept: 0.0 },
        })
    }
}

/// Three samples nearest the centroid acceleration of a region, as
/// `(a, error)` means.
fn region_mean(cands: &[(f64, f64)]) -> Option<(f64, f64)> {
    let centroid = mean(&cands.iter().map(|c| c.0).collect::<Vec<_>>())?;
    let mut by_dist = cands.to_vec();
    by_dist.sort_by(|x, y| {
        (x.0 - centroid)
            .abs()
            .total_cmp(&(y.0 - centroid).abs())
            .then(x.0.total_cmp(&y.0))
            .then(x.1.total_cmp(&y.1))
    });
    by_dist.truncate(REGION_SAMPLES);
    let k = by_dist.len() as f64;
    Some((
        by_dist.iter().map(|c| c.0).sum::<f64>() / k,
        by_dist.iter().map(|c| c.1).sum::<f64>() / k,
    ))
}

/// First-gear torque predictor: `(row, a) -> T`.
pub type SteadyTorque<'a> = dyn Fn(&TraceRow, f64) -> Result<f64> + 'a;

/// Extracts the empirical constants from `trace`.
///
/// `steady_torque` predicts the first-gear engine torque from
/// `(v, a, F_wheel)` without any correction; the torque correction is only
/// estimated when it is given.
pub fn extract_empirical_constants(
    trace: &DriveTrace,
    steady_torque: Option<&SteadyTorque<'_>>,
) -> Result<ExtractedConstants> {
    let rows = trace.rows();
    let mut out = ExtractedConstants::default();
    let d = &mut out.diagnostics;

    let dtdt = trace.derivative(|r| r.t_engine);
    let half = (IDLE_WINDOW_S / trace.dt() + 1e-9).floor() as usize;
    let idle: Vec<&TraceRow> = (0..rows.len())
        .filter(|&i| {
            let (lo, hi) = (i.saturating_sub(half), (i + half).min(rows.len() - 1));
            rows[i].v < IDLE_SPEED && (lo..=hi).all(|j| dtdt[j].abs() < IDLE_TORQUE_RATE)
        })
        .map(|i| &rows[i])
        .collect();
    d.idle_samples = idle.len();
    out.t_min = median(&idle.iter().map(|r| r.t_engine).collect::<Vec<_>>());
    out.f_idle = mean(&idle.iter().map(|r| r.fuel).collect::<Vec<_>>());

    let cut: Vec<&TraceRow> = rows
        .iter()
        .filter(|r| r.fuel < FUEL_CUT_RATE && r.v > FUEL_CUT_MIN_SPEED)
        .collect();
    d.fuel_cut_samples = cut.len();
    out.v_c = percentile_nearest_rank(&cut.iter().map(|r| r.v).collect::<Vec<_>>(), 1.0);
    out.f_wc = percentile_nearest_rank(&cut.iter().map(|r| r.f_wheel).collect::<Vec<_>>(), 95.0);

    let mut events: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for w in rows.windows(2) {
        if w[1].gear + 1 == w[0].gear && w[1].f_wheel < 0.0 {
            events.entry(w[0].gear).or_default().push(w[1].v);
        }
    }
    for (k, speeds) in &events {
        d.downshift_events.insert(*k, speeds.len());
        out.downshift_speeds.insert(*k, median(speeds).expect("non-empty"));
    }

    if let Some(predict) = steady_torque {
        let accel = trace.acceleration();
        let (mut low, mut high) = (Vec::new(), Vec::new());
        for (r, &a) in rows.iter().zip(&accel) {
            if r.gear != 1 || r.tc_state != TcState::Steady || a <= 0.0 {
                continue;
            }
            if a < LOW_ACCEL {
                low.push((a, r.t_engine - predict(r, a)?));
            } else if a > HIGH_ACCEL {
                high.push((a, r.t_engine - predict(r, a)?));
            }
        }
        d.low_accel_candidates = low.len();
        d.high_accel_candidates = high.len();
        out.correction_points = [region_mean(&low), region_mean(&high)].into_iter().flatten().collect();
        if !out.correction_points.is_empty() {
            let sa2: f64 = out.correction_points.iter().map(|p| p.0 * p.0).sum();
            let sae: f64 = out.correction_points.iter().map(|p| p.0 * p.1).sum();
            out.torque_correction_slope = Some(sae / sa2);
        }
    }

    let missing = [
        ("T_min/f_idle", out.t_min.is_none()),
        ("v_c/F_wc", out.v_c.is_none()),
        ("downshift_speeds", out.downshift_speeds.is_empty()),
        ("torque_correction", out.torque_correction_slope.is_none()),
    ];
    out.diagnostics.missing = missing
        .iter()
        .filter(|m| m.1)
        .map(|m| m.0.to_string())
        .collect();
    for m in &out.diagnostics.missing {
        log::warn!("drive trace has no qualifying samples for {m}");
    }
    Ok(out)
}
