//! Nonnegative least squares (Lawson–Hanson active set).

use nalgebra::{DMatrix, DVector};

use crate::linalg::{column_scale, rms_residual};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub coeffs: Vec<f64>,
    /// Indices of coefficients held at zero by their constraint.
    pub active: Vec<usize>,
    pub rms: f64,
    pub iterations: usize,
}

fn solve_passive(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[usize]) -> Vec<f64> {
    let sub = a.select_columns(passive);
    let svd = sub.svd(true, true);
    let tol = f64::EPSILON * svd.singular_values.max() * (a.nrows().max(passive.len()) as f64);
    let z = svd.solve(b, tol).expect("U and V^T were computed");
    let mut s = vec![0.0; a.ncols()];
    for (k, &j) in passive.iter().enumerate() {
        s[j] = z[k];
    }
    s
}

/// Minimizes `|A x − b|` subject to `x ≥ 0`.
///
/// Columns are scaled to unit norm internally. Fails with a non-convergence
/// error if the active set has not settled after `30·n` outer iterations.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<NnlsSolution> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Input(format!(
            "design has {m} rows but target has {} entries",
            b.len()
        )));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Input("non-finite entry in NNLS problem".into()));
    }
    let scale = column_scale(a);
    let mut sa = a.clone();
    for (j, s) in scale.iter().enumerate() {
        sa.column_mut(j).scale_mut(1.0 / s);
    }
    let tol = 10.0 * f64::EPSILON * (m.max(n) as f64) * sa.abs().row_sum().max().max(1.0);

    let mut x = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let max_outer = 30 * n.max(1);
    let mut iterations = 0;
    loop {
        let xv = DVector::from_column_slice(&x);
        let w = sa.tr_mul(&(b - &sa * xv));
        let candidate = (0..n)
            .filter(|j| !passive.contains(j))
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate.filter(|&t| w[t] > tol) else {
            break;
        };
        iterations += 1;
        if iterations > max_outer {
            return Err(Error::NonConvergence {
                what: "NNLS".into(),
                iterations: max_outer,
            });
        }
        passive.push(t);
        loop {
            let s = solve_passive(&sa, b, &passive);
            if passive.iter().all(|&j| s[j] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &j in &passive {
                if s[j] <= 0.0 {
                    alpha = alpha.min(x[j] / (x[j] - s[j]));
                }
            }
            for j in 0..n {
                x[j] += alpha * (s[j] - x[j]);
            }
            let before = passive.len();
            passive.retain(|&j| x[j] > tol);
            for (j, xj) in x.iter_mut().enumerate() {
                if !passive.contains(&j) {
                    *xj = 0.0;
                }
            }
            if passive.len() == before {
                // Numerical stall: drop the most negative trial coefficient.
                let worst = *passive
                    .iter()
                    .min_by(|&&i, &&j| s[i].total_cmp(&s[j]))
                    .expect("passive set is non-empty");
                passive.retain(|&j| j != worst);
                x[worst] = 0.0;
            }
            if passive.is_empty() {
                break;
            }
        }
    }
    let coeffs: Vec<f64> = x.iter().zip(&scale).map(|(xi, s)| xi / s).collect();
    let active = (0..n).filter(|&j| coeffs[j] == 0.0).collect();
    let rms = rms_residual(a, b, &coeffs);
    Ok(NnlsSolution {
        coeffs,
        active,
        rms,
        iterations,
    })
}

/// Largest violation of the optimality conditions of `min ½|A x − b|²,
/// x ≥ 0` at `x`, measured on unit-norm columns and relative to `|b|`.
///
/// With `g = Aᵀ(A x − b)`: zero coefficients need `g ≥ 0`, positive ones
/// need `g = 0`, and all coefficients must be nonnegative.
pub fn kkt_violation(a: &DMatrix<f64>, b: &DVector<f64>, x: &[f64]) -> f64 {
    let scale = column_scale(a);
    let xv = DVector::from_column_slice(x);
    let r = a * xv - b;
    let bn = b.norm().max(f64::MIN_POSITIVE);
    let mut worst: f64 = 0.0;
    for j in 0..a.ncols() {
        let g = a.column(j).dot(&r) / scale[j] / bn;
        let v = if x[j] < 0.0 {
            f64::INFINITY
        } else if x[j] == 0.0 {
            (-g).max(0.0)
        } else {
            g.abs()
        };
        worst = worst.max(v);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::least_squares;

    #[test]
    fn interior_optimum_matches_least_squares() {
        let a = DMatrix::from_fn(20, 3, |i, j| ((i + 1) as f64).powi(j as i32));
        let b = DVector::from_fn(20, |i, _| {
            let x = (i + 1) as f64;
            1.0 + 0.5 * x + 0.01 * x * x + 0.1 * (x * 1.7).sin()
        });
        let ls = least_squares(&a, &b, &["1", "x", "x2"]).unwrap();
        let nn = nnls(&a, &b).unwrap();
        assert!(nn.active.is_empty());
        for (p, q) in nn.coeffs.iter().zip(&ls.coeffs) {
            assert!((p - q).abs() <= 1e-9 * q.abs().max(1.0), "{p} vs {q}");
        }
    }

    #[test]
    fn anti_correlated_column_is_zero() {
        let a = DMatrix::from_fn(10, 1, |i, _| i as f64 + 1.0);
        let b = DVector::from_fn(10, |i, _| -(i as f64) - 1.0);
        let nn = nnls(&a, &b).unwrap();
        assert_eq!(nn.coeffs, vec![0.0]);
        assert_eq!(nn.active, vec![0]);
        assert!(kkt_violation(&a, &b, &nn.coeffs) < 1e-12);
    }

    #[test]
    fn zero_target_gives_zero() {
        let a = DMatrix::from_fn(5, 2, |i, j| (i * (j + 1)) as f64 + 1.0);
        let b = DVector::zeros(5);
        let nn = nnls(&a, &b).unwrap();
        assert_eq!(nn.coeffs, vec![0.0, 0.0]);
    }

    #[test]
    fn kkt_holds_on_mixed_problem() {
        let a = DMatrix::from_fn(30, 4, |i, j| ((i as f64 + 1.0) * 0.37 * (j as f64 + 1.0)).cos());
        let b = DVector::from_fn(30, |i, _| (i as f64 * 0.2).sin());
        let nn = nnls(&a, &b).unwrap();
        assert!(nn.coeffs.iter().all(|&c| c >= 0.0));
        assert!(kkt_violation(&a, &b, &nn.coeffs) < 1e-8);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let a = DMatrix::from_element(3, 1, f64::NAN);
        let b = DVector::zeros(3);
        assert!(matches!(nnls(&a, &b), Err(Error::Input(_))));
    }
}
