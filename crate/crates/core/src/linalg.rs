//! Dense least-squares helpers shared by the fitting code.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative singular-value threshold below which a scaled design is treated
/// as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// `n` equispaced values on `[start, end]`, both ends included exactly.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let span = end - start;
            let last = (n - 1) as f64;
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        end
                    } else {
                        start + span * (i as f64) / last
                    }
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coeffs: Vec<f64>,
    /// Root-mean-square residual over the rows.
    pub rms: f64,
}

/// Unconstrained least squares `min |A x - b|` with column equilibration.
///
/// `names` labels the columns; a rank-deficient design produces a fitting
/// error naming the columns that span the null directions.
pub fn least_squares(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    names: &[&str],
) -> Result<LeastSquares> {
    let (m, n) = design.shape();
    if target.len() != m {
        return Err(Error::Input(format!(
            "design has {m} rows but target has {} entries",
            target.len()
        )));
    }
    if m < n {
        return Err(Error::fit(
            "least squares",
            format!("{m} samples cannot determine {n} coefficients"),
        ));
    }
    let scale = column_scale(design);
    let mut scaled = design.clone();
    for (j, s) in scale.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }

    let svd = scaled.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let deficient: Vec<usize> = (0..n)
        .filter(|&k| smax == 0.0 || svd.singular_values[k] <= RANK_TOL * smax)
        .collect();
    if !deficient.is_empty() {
        let mut dirs = Vec::new();
        for k in deficient {
            let row = v_t.row(k);
            let terms: Vec<String> = (0..n)
                .filter(|&j| row[j].abs() > 0.1)
                .map(|j| format!("{}{:+.3}", names.get(j).copied().unwrap_or("?"), row[j]))
                .collect();
            dirs.push(format!("[{}]", terms.join(" ")));
        }
        return Err(Error::fit(
            "least squares",
            format!("rank-deficient design; null directions {}", dirs.join(", ")),
        ));
    }

    let mut x = svd
        .solve(target, 0.0)
        .map_err(|e| Error::fit("least squares", e.to_string()))?;
    // One step of iterative refinement against the residual.
    let r = target - &scaled * &x;
    if let Ok(dx) = svd.solve(&r, 0.0) {
        x += dx;
    }
    let coeffs: Vec<f64> = x.iter().zip(&scale).map(|(xi, s)| xi / s).collect();
    let rms = rms_residual(design, target, &coeffs);
    Ok(LeastSquares { coeffs, rms })
}

/// Euclidean column norms, with zero columns mapped to 1.
pub(crate) fn column_scale(design: &DMatrix<f64>) -> Vec<f64> {
    (0..design.ncols())
        .map(|j| {
            let n = design.column(j).norm();
            if n > 0.0 {
                n
            } else {
                1.0
            }
        })
        .collect()
}

pub fn rms_residual(design: &DMatrix<f64>, target: &DVector<f64>, coeffs: &[f64]) -> f64 {
    let m = design.nrows();
    if m == 0 {
        return 0.0;
    }
    let x = DVector::from_column_slice(coeffs);
    let r = target - design * x;
    (r.norm_squared() / m as f64).sqrt()
}

/// Builds a design matrix from per-row feature vectors.
pub fn design_from_rows(rows: &[Vec<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j])
}
