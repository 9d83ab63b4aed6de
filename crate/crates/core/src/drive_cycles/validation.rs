use std::io::Write;

use serde::Serialize;

use crate::{Error, Result};

/// 2 mi/h in m/s.
pub const SPEED_ERROR_THRESHOLD: f64 = 2.0 * 1609.344 / 3600.0;
/// A pairing stops being realizable above this fraction of off-trace samples.
pub const UNREALIZABLE_FRACTION: f64 = 0.25;
/// Plot smoothing window, s.
pub const MOVING_WINDOW_S: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Realizability {
    pub fraction: f64,
    pub realizable: bool,
}

/// Share of samples where the achieved speed misses the target by at least
/// 2 mi/h.
pub fn realizability(target: &[f64], achieved: &[f64]) -> Result<Realizability> {
    if target.len() != achieved.len() {
        return Err(Error::Input(format!(
            "speed traces differ in length ({} vs {})",
            target.len(),
            achieved.len()
        )));
    }
    if target.is_empty() {
        return Ok(Realizability {
            fraction: 0.0,
            realizable: true,
        });
    }
    let off = target
        .iter()
        .zip(achieved)
        .filter(|(t, a)| (*t - *a).abs() >= SPEED_ERROR_THRESHOLD)
        .count();
    let fraction = off as f64 / target.len() as f64;
    Ok(Realizability {
        fraction,
        realizable: fraction <= UNREALIZABLE_FRACTION,
    })
}

/// Centered moving average over `window_s`, truncated at the ends. The
/// window spans `round(window_s / (2 dt))` samples on each side.
pub fn moving_average(series: &[f64], dt: f64, window_s: f64) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let half = (window_s / (2.0 * dt)).round().max(0.0) as usize;
    let mut prefix = vec![0.0; n + 1];
    for (i, x) in series.iter().enumerate() {
        prefix[i + 1] = prefix[i] + x;
    }
    (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(half), (i + half).min(n - 1));
            (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64
        })
        .collect()
}

/// `(model − reference) / reference × 100`, undefined for a non-positive
/// reference.
pub fn relative_error_pct(model: f64, reference: f64) -> Option<f64> {
    (reference > 0.0).then(|| (model - reference) / reference * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub vehicle: String,
    pub model: String,
    pub cycle: String,
    pub grade: f64,
    #[serde(skip)]
    pub model_fuel: f64,
    #[serde(skip)]
    pub reference_fuel: f64,
    pub rel_error_pct: Option<f64>,
    /// Unknown unless the reference carries an achieved speed trace.
    pub realizable: Option<bool>,
}

pub fn write_report_csv<W: Write>(w: W, rows: &[ValidationRow]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

/// `t` followed by one column per named series.
pub fn write_plot_csv<W: Write>(w: W, t: &[f64], columns: &[(String, Vec<f64>)]) -> Result<()> {
    if let Some((name, _)) = columns.iter().find(|(_, c)| c.len() != t.len()) {
        return Err(Error::Input(format!("plot column {name} has the wrong length")));
    }
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend(columns.iter().map(|c| c.0.clone()));
    wr.write_record(&header)?;
    for (i, ti) in t.iter().enumerate() {
        let mut rec = vec![ti.to_string()];
        rec.extend(columns.iter().map(|c| c.1[i].to_string()));
        wr.write_record(&rec)?;
    }
    wr.flush()?;
    Ok(())
}
