//! Gridded lookup tables and the closed-form surfaces used as engine maps.
//!
//! Gridded maps clamp queries to the table edge instead of extrapolating.
//! Every `*_counted` lookup adds one to the caller's tally per clamped axis.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

fn check_axis(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Config(format!("{name}: empty grid")));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!("{name}: non-finite abscissa")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!(
            "{name}: abscissae must be strictly increasing"
        )));
    }
    Ok(())
}

/// Locates `x` on `xs`: returns the lower cell index and the fraction within
/// the cell, clamping outside the axis.
fn locate(xs: &[f64], x: f64, clamps: &mut u32) -> (usize, f64) {
    let n = xs.len();
    if n == 1 {
        if x != xs[0] {
            *clamps += 1;
        }
        return (0, 0.0);
    }
    if x <= xs[0] {
        if x < xs[0] {
            *clamps += 1;
        }
        return (0, 0.0);
    }
    if x >= xs[n - 1] {
        if x > xs[n - 1] {
            *clamps += 1;
        }
        return (n - 2, 1.0);
    }
    let i = xs.partition_point(|&g| g <= x) - 1;
    (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
}

/// Piecewise-linear table `y(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid1d {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Grid1d {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let g = Self { x, y };
        g.validate("grid")?;
        Ok(g)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        check_axis(name, &self.x)?;
        if self.y.len() != self.x.len() {
            return Err(Error::Config(format!(
                "{name}: {} abscissae but {} values",
                self.x.len(),
                self.y.len()
            )));
        }
        if self.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{name}: non-finite value")));
        }
        Ok(())
    }

    pub fn eval_counted(&self, x: f64, clamps: &mut u32) -> f64 {
        let (i, t) = locate(&self.x, x, clamps);
        if t == 0.0 {
            self.y[i]
        } else if t == 1.0 {
            self.y[i + 1]
        } else {
            self.y[i] + t * (self.y[i + 1] - self.y[i])
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_counted(x, &mut 0)
    }
}

/// Bilinear table `z(x, y)` with `z[i][j]` at `(x[i], y[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2d {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<Vec<f64>>,
}

impl Grid2d {
    pub fn new(x: Vec<f64>, y: Vec<f64>, z: Vec<Vec<f64>>) -> Result<Self> {
        let g = Self { x, y, z };
        g.validate("grid")?;
        Ok(g)
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        check_axis(name, &self.x)?;
        check_axis(name, &self.y)?;
        if self.z.len() != self.x.len() || self.z.iter().any(|r| r.len() != self.y.len()) {
            return Err(Error::Config(format!(
                "{name}: value table must be {}×{}",
                self.x.len(),
                self.y.len()
            )));
        }
        if self.z.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("{name}: non-finite value")));
        }
        Ok(())
    }

    pub fn eval_counted(&self, x: f64, y: f64, clamps: &mut u32) -> f64 {
        let (i, s) = locate(&self.x, x, clamps);
        let (j, t) = locate(&self.y, y, clamps);
        let at = |di: usize, dj: usize| {
            let ii = (i + di).min(self.x.len() - 1);
            let jj = (j + dj).min(self.y.len() - 1);
            self.z[ii][jj]
        };
        // Exact node hits skip the blend so grid values round-trip bit-exactly.
        let row = |dj: usize| {
            if s == 0.0 {
                at(0, dj)
            } else if s == 1.0 {
                at(1, dj)
            } else {
                at(0, dj) + s * (at(1, dj) - at(0, dj))
            }
        };
        if t == 0.0 {
            row(0)
        } else if t == 1.0 {
            row(1)
        } else {
            let (lo, hi) = (row(0), row(1));
            lo + t * (hi - lo)
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.eval_counted(x, y, &mut 0)
    }
}

/// Integer-valued table looked up by nearest lower cell, used for the
/// upshift gear map `K(α, v)` with `gear[i][j]` at `(alpha[i], v[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GearGrid {
    pub alpha: Vec<f64>,
    pub v: Vec<f64>,
    pub gear: Vec<Vec<usize>>,
}

impl GearGrid {
    pub fn validate(&self, name: &str, gears: usize) -> Result<()> {
        check_axis(name, &self.alpha)?;
        check_axis(name, &self.v)?;
        if self.gear.len() != self.alpha.len()
            || self.gear.iter().any(|r| r.len() != self.v.len())
        {
            return Err(Error::Config(format!(
                "{name}: gear table must be {}×{}",
                self.alpha.len(),
                self.v.len()
            )));
        }
        if self.gear.iter().flatten().any(|&g| g == 0 || g > gears) {
            return Err(Error::Config(format!("{name}: gear outside 1..={gears}")));
        }
        Ok(())
    }

    fn lower(xs: &[f64], x: f64, clamps: &mut u32) -> usize {
        if x < xs[0] {
            *clamps += 1;
            return 0;
        }
        if x > xs[xs.len() - 1] {
            *clamps += 1;
        }
        xs.partition_point(|&g| g <= x) - 1
    }

    pub fn eval_counted(&self, alpha: f64, v: f64, clamps: &mut u32) -> usize {
        let i = Self::lower(&self.alpha, alpha, clamps);
        let j = Self::lower(&self.v, v, clamps);
        self.gear[i][j]
    }

    pub fn eval(&self, alpha: f64, v: f64) -> usize {
        self.eval_counted(alpha, v, &mut 0)
    }
}

/// `Σ c[i][j] xⁱ yʲ`; the degrees are the table dimensions minus one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BivariatePoly {
    pub coeffs: Vec<Vec<f64>>,
}

impl BivariatePoly {
    pub fn zeros(deg_x: usize, deg_y: usize) -> Self {
        Self {
            coeffs: vec![vec![0.0; deg_y + 1]; deg_x + 1],
        }
    }

    /// Builds from a flat coefficient vector in [`Self::basis`] order.
    pub fn from_flat(deg_x: usize, deg_y: usize, flat: &[f64]) -> Self {
        assert_eq!(flat.len(), (deg_x + 1) * (deg_y + 1));
        Self {
            coeffs: flat.chunks(deg_y + 1).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn degrees(&self) -> (usize, usize) {
        (
            self.coeffs.len().saturating_sub(1),
            self.coeffs.first().map_or(0, |r| r.len().saturating_sub(1)),
        )
    }

    pub fn flat(&self) -> Vec<f64> {
        self.coeffs.iter().flatten().copied().collect()
    }

    pub fn check_degrees(&self, name: &str, deg_x: usize, deg_y: usize) -> Result<()> {
        let ok = self.coeffs.len() == deg_x + 1
            && self.coeffs.iter().all(|r| r.len() == deg_y + 1);
        if !ok {
            return Err(Error::Config(format!(
                "{name}: expected degree {deg_x} × {deg_y} coefficient table"
            )));
        }
        if self.coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Config(format!("{name}: non-finite coefficient")));
        }
        Ok(())
    }

    /// Monomials `xⁱ yʲ`, `i` major.
    pub fn basis(deg_x: usize, deg_y: usize, x: f64, y: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity((deg_x + 1) * (deg_y + 1));
        let mut xi = 1.0;
        for _ in 0..=deg_x {
            let mut yj = 1.0;
            for _ in 0..=deg_y {
                out.push(xi * yj);
                yj *= y;
            }
            xi *= x;
        }
        out
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        // Horner in x over Horner-in-y rows.
        self.coeffs.iter().rev().fold(0.0, |acc, row| {
            acc * x + row.iter().rev().fold(0.0, |r, &c| r * y + c)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// `c0 + cx·x + cy·y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Plane {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.c0 + self.cx * x + self.cy * y
    }

    fn is_finite(&self) -> bool {
        self.c0.is_finite() && self.cx.is_finite() && self.cy.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HingeKind {
    Max,
    Min,
}

/// Continuous two-facet surface `max(p, q)` or `min(p, q)`; the facets meet
/// on the line `p = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HingeSurface {
    pub p: Plane,
    pub q: Plane,
    pub kind: HingeKind,
}

impl HingeSurface {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (a, b) = (self.p.eval(x, y), self.q.eval(x, y));
        match self.kind {
            HingeKind::Max => a.max(b),
            HingeKind::Min => a.min(b),
        }
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if !(self.p.is_finite() && self.q.is_finite()) {
            return Err(Error::Config(format!("{name}: non-finite facet")));
        }
        Ok(())
    }
}

/// Engine speed map for one gear, as a function of transmission output speed
/// and wheel force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedMap {
    /// Open converter (gear 1): bivariate polynomial in `(N_output, F_wheel)`.
    Poly(BivariatePoly),
    /// Locked converter: line in `N_output` only.
    Line(Line),
}

impl SpeedMap {
    pub fn eval(&self, n_output: f64, f_wheel: f64) -> f64 {
        match self {
            SpeedMap::Poly(p) => p.eval(n_output, f_wheel),
            SpeedMap::Line(l) => l.eval(n_output),
        }
    }
}

/// Engine torque map for one gear over `(N_output, F_wheel)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TorqueMap {
    Hinge(HingeSurface),
    Plane(Plane),
}

impl TorqueMap {
    pub fn eval(&self, n_output: f64, f_wheel: f64) -> f64 {
        match self {
            TorqueMap::Hinge(h) => h.eval(n_output, f_wheel),
            TorqueMap::Plane(p) => p.eval(n_output, f_wheel),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid1d_midpoint_and_clamp() {
        let g = Grid1d::new(vec![0.0, 10.0], vec![0.0, 10.0]).unwrap();
        let mut n = 0;
        assert_eq!(g.eval_counted(5.0, &mut n), 5.0);
        assert_eq!(n, 0);
        assert_eq!(g.eval_counted(12.0, &mut n), 10.0);
        assert_eq!(g.eval_counted(-1.0, &mut n), 0.0);
        assert_eq!(n, 2);
        assert_eq!(g.eval_counted(10.0, &mut n), 10.0);
        assert_eq!(n, 2);
    }

    #[test]
    fn grid2d_bilinear() {
        let f = |x: f64, y: f64| x + 2.0 * y;
        let g = Grid2d::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![vec![f(0.0, 0.0), f(0.0, 1.0)], vec![f(1.0, 0.0), f(1.0, 1.0)]],
        )
        .unwrap();
        assert!((g.eval(0.5, 0.5) - 1.5).abs() < 1e-15);
        let mut n = 0;
        assert_eq!(g.eval_counted(2.0, -1.0, &mut n), f(1.0, 0.0));
        assert_eq!(n, 2);
    }

    #[test]
    fn empty_and_unsorted_grids_are_rejected() {
        assert!(Grid1d::new(vec![], vec![]).is_err());
        assert!(Grid1d::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Grid1d::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(Grid2d::new(vec![0.0], vec![0.0, 1.0], vec![vec![1.0]]).is_err());
    }

    #[test]
    fn gear_grid_uses_lower_cell() {
        let k = GearGrid {
            alpha: vec![0.0, 0.5],
            v: vec![0.0, 5.0, 10.0],
            gear: vec![vec![1, 2, 3], vec![1, 1, 2]],
        };
        k.validate("k", 3).unwrap();
        assert_eq!(k.eval(0.2, 7.0), 2);
        assert_eq!(k.eval(0.6, 12.0), 2);
        assert_eq!(k.eval(0.49, 9.99), 2);
        let mut n = 0;
        assert_eq!(k.eval_counted(-0.1, 1.0, &mut n), 1);
        assert_eq!(n, 1);
        assert!(k.validate("k", 2).is_err());
    }

    #[test]
    fn poly_eval_matches_basis() {
        let p = BivariatePoly::from_flat(2, 3, &(1..=12).map(f64::from).collect::<Vec<_>>());
        let (x, y) = (1.3, -0.7);
        let direct: f64 = BivariatePoly::basis(2, 3, x, y)
            .iter()
            .zip(p.flat())
            .map(|(b, c)| b * c)
            .sum();
        assert!((p.eval(x, y) - direct).abs() < 1e-12);
        assert_eq!(p.degrees(), (2, 3));
        assert!(p.check_degrees("f", 2, 3).is_ok());
        assert!(p.check_degrees("f", 3, 2).is_err());
    }

    #[test]
    fn hinge_is_continuous_on_the_crease() {
        let h = HingeSurface {
            p: Plane { c0: 1.0, cx: 2.0, cy: 0.0 },
            q: Plane { c0: 0.0, cx: 0.0, cy: 1.0 },
            kind: HingeKind::Max,
        };
        // Crease: 1 + 2x = y.
        for x in [-1.0, 0.0, 2.5] {
            let y = 1.0 + 2.0 * x;
            let e = 1e-9;
            assert!((h.eval(x, y - e) - h.eval(x, y + e)).abs() < 1e-8);
        }
    }
}
