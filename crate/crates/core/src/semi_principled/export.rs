//! Black-box grid dumps of any fuel model and an interpolating loader.
//!
//! The dump is a CSV file. Leading `# axis,<name>,<start>,<end>,<count>`
//! lines declare the regular axes for `v`, `a` and `theta`, followed by
//! `v,a,theta,fuel_rate,feasible,a_max` rows in `v`-major order. `a_max` is
//! the largest feasible acceleration at `(v, theta)`, probed on `[-1, 20]`;
//! it is written on the first `a` row of each `(v, theta)` pair only and left
//! empty elsewhere. Coordinates are informational: the axis headers define
//! the grid.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::linalg::linspace;
use crate::reduction_pipeline::bisect::{max_feasible_accel, Ceiling, ACCEL_CEILING, ACCEL_FLOOR};
use crate::{Domain, Error, FuelModel, ModelSample, OperatingPoint, Result};

/// A regular axis: `count` equally spaced nodes from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(start: f64, end: f64, count: usize) -> Result<Self> {
        let ok = start.is_finite()
            && end.is_finite()
            && ((count == 1 && start == end) || (count >= 2 && end > start));
        if !ok {
            return Err(Error::Config(format!(
                "invalid axis {start}..{end} with {count} nodes"
            )));
        }
        Ok(Self { start, end, count })
    }

    pub fn nodes(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub v: Axis,
    pub a: Axis,
    pub theta: Axis,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            v: Axis { start: 0.0, end: 35.0, count: 141 },
            a: Axis { start: -3.0, end: 3.0, count: 121 },
            theta: Axis { start: -0.03, end: 0.03, count: 13 },
        }
    }
}

#[derive(Deserialize)]
struct DumpRow {
    v: f64,
    a: f64,
    theta: f64,
    fuel_rate: f64,
    a_max: Option<f64>,
}

/// Node coordinate without floating-point noise from the spacing.
fn coord(x: f64) -> String {
    let r = (x * 1e9).round() / 1e9;
    format!("{}", if r == 0.0 { 0.0 } else { r })
}

/// Samples `model` on `spec` and writes the dump.
pub fn export_grid<M: FuelModel + ?Sized, W: Write>(model: &M, spec: &GridSpec, mut out: W) -> Result<()> {
    for (name, ax) in [("v", spec.v), ("a", spec.a), ("theta", spec.theta)] {
        writeln!(out, "# axis,{name},{},{},{}", ax.start, ax.end, ax.count)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v", "a", "theta", "fuel_rate", "feasible", "a_max"])?;
    let (vs, accs, gs) = (spec.v.nodes(), spec.a.nodes(), spec.theta.nodes());
    for &v in &vs {
        let a_max: Vec<f64> = gs
            .iter()
            .map(|&g| {
                Ok(match max_feasible_accel(model, v, g)? {
                    Ceiling::Found(a) => a.clamp(ACCEL_FLOOR, ACCEL_CEILING),
                    Ceiling::BelowFloor => ACCEL_FLOOR,
                    Ceiling::Unbounded => ACCEL_CEILING,
                })
            })
            .collect::<Result<_>>()?;
        for (ia, &a) in accs.iter().enumerate() {
            for (j, &theta) in gs.iter().enumerate() {
                let s = model.sample(OperatingPoint::new(v, a, theta))?;
                let ceiling = if ia == 0 { a_max[j].to_string() } else { String::new() };
                w.write_record([
                    coord(v),
                    coord(a),
                    coord(theta),
                    s.fuel_rate.to_string(),
                    u8::from(s.feasible).to_string(),
                    ceiling,
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Model reconstructed from a grid dump by trilinear interpolation of the
/// fuel rate. A point is feasible when `a` does not exceed the bilinear
/// interpolant of `a_max(v, theta)`. Queries outside the grid are clamped.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub spec: GridSpec,
    v: Vec<f64>,
    a: Vec<f64>,
    theta: Vec<f64>,
    /// `fuel[(i * na + j) * nt + k]`
    fuel: Vec<f64>,
    /// `a_max[i * nt + k]`
    a_max: Vec<f64>,
}

fn parse_axis(line: &str) -> Result<(String, Axis)> {
    let parts: Vec<&str> = line.trim_start_matches('#').trim().split(',').collect();
    let bad = || Error::Parse {
        row: 0,
        reason: format!("malformed axis header `{line}`"),
    };
    if parts.len() != 5 || parts[0] != "axis" {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let count = parts[4].trim().parse::<usize>().map_err(|_| bad())?;
    let axis = Axis::new(num(parts[2])?, num(parts[3])?, count)?;
    Ok((parts[1].trim().to_string(), axis))
}

/// Finds the cell containing `x` and the fraction within it, clamping to the
/// axis. Exact node hits return a fraction of 0 or 1.
fn cell(nodes: &[f64], x: f64) -> (usize, f64) {
    let n = nodes.len();
    if n == 1 || x <= nodes[0] {
        return (0, 0.0);
    }
    if x >= nodes[n - 1] {
        return (n - 2, 1.0);
    }
    let i = nodes.partition_point(|&g| g <= x) - 1;
    (i, (x - nodes[i]) / (nodes[i + 1] - nodes[i]))
}

fn lerp(lo: f64, hi: f64, t: f64) -> f64 {
    if t == 0.0 {
        lo
    } else if t == 1.0 {
        hi
    } else {
        lo + t * (hi - lo)
    }
}

impl GridModel {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut axes: Vec<(String, Axis)> = Vec::new();
        let mut line = String::new();
        let mut header = String::new();
        loop {
            line.clear();
            if reader.read_line(&mut line)? == 0 {
                break;
            }
            if line.starts_with('#') {
                axes.push(parse_axis(line.trim_end())?);
            } else {
                header = line.clone();
                break;
            }
        }
        let find = |name: &str| {
            axes.iter()
                .find(|(n, _)| n == name)
                .map(|(_, a)| *a)
                .ok_or_else(|| Error::Parse {
                    row: 0,
                    reason: format!("grid dump lacks an axis header for `{name}`"),
                })
        };
        let spec = GridSpec {
            v: find("v")?,
            a: find("a")?,
            theta: find("theta")?,
        };
        let (nv, na, nt) = (spec.v.count, spec.a.count, spec.theta.count);
        let (vs, accs, gs) = (spec.v.nodes(), spec.a.nodes(), spec.theta.nodes());
        let mut fuel = Vec::with_capacity(nv * na * nt);
        let mut a_max = vec![f64::NAN; nv * nt];
        let body = header.as_bytes().chain(reader);
        let mut rdr = csv::Reader::from_reader(body);
        for (row, rec) in rdr.deserialize::<DumpRow>().enumerate() {
            let r = rec.map_err(|e| Error::Parse {
                row: row + 1,
                reason: e.to_string(),
            })?;
            let idx = fuel.len();
            if idx >= nv * na * nt {
                return Err(Error::Parse {
                    row: row + 1,
                    reason: "more rows than the declared axes allow".into(),
                });
            }
            let (i, j, k) = (idx / (na * nt), (idx / nt) % na, idx % nt);
            let expected = [(r.v, vs[i]), (r.a, accs[j]), (r.theta, gs[k])];
            if expected.iter().any(|(got, want)| (got - want).abs() > 1e-6 * want.abs().max(1.0)) {
                return Err(Error::Parse {
                    row: row + 1,
                    reason: format!(
                        "coordinates ({}, {}, {}) do not match node ({}, {}, {})",
                        r.v, r.a, r.theta, vs[i], accs[j], gs[k]
                    ),
                });
            }
            fuel.push(r.fuel_rate);
            if let Some(m) = r.a_max {
                a_max[i * nt + k] = m;
            }
        }
        if fuel.len() != nv * na * nt {
            return Err(Error::Parse {
                row: fuel.len(),
                reason: format!("expected {} rows, found {}", nv * na * nt, fuel.len()),
            });
        }
        if let Some(i) = a_max.iter().position(|m| m.is_nan()) {
            return Err(Error::Parse {
                row: 0,
                reason: format!("no a_max for v = {}, theta = {}", vs[i / nt], gs[i % nt]),
            });
        }
        Ok(Self {
            v: vs,
            a: accs,
            theta: gs,
            spec,
            fuel,
            a_max,
        })
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn fuel_rate(&self, pt: OperatingPoint) -> f64 {
        let (na, nt) = (self.a.len(), self.theta.len());
        let (i, ti) = cell(&self.v, pt.v);
        let (j, tj) = cell(&self.a, pt.a);
        let (k, tk) = cell(&self.theta, pt.theta);
        let at = |di: usize, dj: usize, dk: usize| {
            let ii = (i + di).min(self.v.len() - 1);
            let jj = (j + dj).min(na - 1);
            let kk = (k + dk).min(nt - 1);
            self.fuel[(ii * na + jj) * nt + kk]
        };
        let along_k = |di, dj| lerp(at(di, dj, 0), at(di, dj, 1), tk);
        let along_j = |di| lerp(along_k(di, 0), along_k(di, 1), tj);
        lerp(along_j(0), along_j(1), ti)
    }

    pub fn a_max(&self, v: f64, theta: f64) -> f64 {
        let nt = self.theta.len();
        let (i, ti) = cell(&self.v, v);
        let (k, tk) = cell(&self.theta, theta);
        let at = |di: usize, dk: usize| {
            let ii = (i + di).min(self.v.len() - 1);
            let kk = (k + dk).min(nt - 1);
            self.a_max[ii * nt + kk]
        };
        lerp(lerp(at(0, 0), at(0, 1), tk), lerp(at(1, 0), at(1, 1), tk), ti)
    }
}

impl FuelModel for GridModel {
    fn sample(&self, pt: OperatingPoint) -> Result<ModelSample> {
        pt.check_finite()?;
        if pt.v < 0.0 {
            return Ok(ModelSample {
                fuel_rate: 0.0,
                feasible: false,
            });
        }
        Ok(ModelSample {
            fuel_rate: self.fuel_rate(pt),
            feasible: pt.a <= self.a_max(pt.v, pt.theta),
        })
    }

    fn domain(&self) -> Option<Domain> {
        let s = &self.spec;
        Some(Domain {
            v: (s.v.start, s.v.end),
            a: (s.a.start, s.a.end),
            theta: (s.theta.start, s.theta.end),
        })
    }
}
