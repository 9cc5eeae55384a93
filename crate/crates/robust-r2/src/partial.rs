//! Squared partial correlation between two variables after residualizing
//! both on a block of confounders, with an asymptotic confidence interval.
//!
//! Let `u = x − Proj(x | 1, Z)` and `v = y − Proj(y | 1, Z)` be the
//! residuals of `x` and `y` on the confounder block. The squared partial
//! correlation is the R² between `u` and `v`, which factorizes as `α̂ θ̂`
//! with
//!
//! ```text
//! α̂ = Σ uᵢvᵢ / Σ uᵢ²     θ̂ = Σ uᵢvᵢ / Σ vᵢ²
//! ```
//!
//! Its asymptotic variance follows the same `(θ̂, α̂) B̂ Â B̂ (θ̂, α̂)ᵗ`
//! pattern as the global coefficient with `p = 1`, treating `u` as the
//! single covariate and `v` as the response: the 2×2 matrix `Â` is built
//! from the fit residual `ε̂ = v − α̂u` and the reverse residual
//! `ê = u − θ̂v`.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::r2::{ConfidenceInterval, QuantileKind};

/// Inference output for the squared partial correlation.
#[derive(Debug, Clone)]
pub struct PartialR2Inference {
    pub r2_partial: f64,
    /// `Σ uᵢvᵢ / Σ uᵢ²`: the slope of the Y-residual on the X-residual.
    pub alpha_hat: f64,
    /// `Σ uᵢvᵢ / Σ vᵢ²`: the reverse slope.
    pub theta_hat: f64,
    /// 2×2 moment matrix `Â`.
    pub a_hat: Matrix,
    /// 2×2 diagonal matrix `B̂` of inverse residual variances.
    pub b_hat: Matrix,
    /// Estimated asymptotic variance of `√n(R̂²ₚₐᵣ − R²ₚₐᵣ)`.
    pub v_hat: f64,
    pub n: usize,
}

/// Estimates the squared partial correlation of `x` and `y` given the
/// confounder block `z` (shape `n × q`; `q = 0` reduces to the plain
/// squared correlation).
pub fn partial_r2(x: &[f64], y: &[f64], z: &Matrix) -> Result<PartialR2Inference> {
    let n = x.len();
    let q = z.cols();
    if y.len() != n || (q > 0 && z.rows() != n) {
        return Err(Error::Domain(
            "x, y and z must have the same number of rows".to_string(),
        ));
    }
    if n < q + 3 {
        return Err(Error::TooFewRows { n, p: q + 1 });
    }

    let u = residualize(x, z)?;
    let v = residualize(y, z)?;

    let nf = n as f64;
    let suu: f64 = u.iter().map(|a| a * a).sum();
    let svv: f64 = v.iter().map(|a| a * a).sum();
    // Degenerate when a residual vector is zero to working precision
    // relative to the centered original variable: the variable lies in the
    // span of (1, Z) and the partial correlation is undefined.
    let centered_ss = |w: &[f64]| -> f64 {
        let m = w.iter().sum::<f64>() / nf;
        w.iter().map(|a| (a - m) * (a - m)).sum()
    };
    let sxx0 = centered_ss(x);
    let syy0 = centered_ss(y);
    if suu <= 1e-24 * sxx0 || svv <= 1e-24 * syy0 || sxx0 <= 0.0 || syy0 <= 0.0 {
        return Err(Error::DegenerateResiduals);
    }
    let suv: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();

    let alpha_hat = suv / suu;
    let theta_hat = suv / svv;
    let r2_partial = alpha_hat * theta_hat;

    // Fit residual ε̂ = v − α̂u and reverse residual ê = u − θ̂v; both u and
    // v have mean zero, so the intercepts of the one-dimensional
    // regressions vanish exactly.
    let eps: Vec<f64> = u.iter().zip(&v).map(|(a, b)| b - alpha_hat * a).collect();
    let e_rev: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - theta_hat * b).collect();

    let mut a_hat = Matrix::zeros(2, 2);
    for i in 0..n {
        a_hat[(0, 0)] += u[i] * u[i] * eps[i] * eps[i];
        a_hat[(1, 1)] += v[i] * v[i] * e_rev[i] * e_rev[i];
        a_hat[(0, 1)] += u[i] * v[i] * eps[i] * e_rev[i];
    }
    a_hat[(0, 0)] /= nf;
    a_hat[(1, 1)] /= nf;
    a_hat[(0, 1)] /= nf;
    a_hat[(1, 0)] = a_hat[(0, 1)];

    let mut b_hat = Matrix::zeros(2, 2);
    b_hat[(0, 0)] = nf / suu;
    b_hat[(1, 1)] = nf / svv;

    // v_hat = (θ̂, α̂) B̂ Â B̂ (θ̂, α̂)ᵗ; the first coordinate of the
    // asymptotic vector is α̂ (normalized by Var(u)), the second θ̂.
    let g0 = theta_hat * b_hat[(0, 0)];
    let g1 = alpha_hat * b_hat[(1, 1)];
    let v_hat_raw = g0 * g0 * a_hat[(0, 0)] + 2.0 * g0 * g1 * a_hat[(0, 1)] + g1 * g1 * a_hat[(1, 1)];
    if v_hat_raw < -1e-10 {
        return Err(Error::Numerical(format!(
            "partial variance quadratic form is negative: {}",
            v_hat_raw
        )));
    }

    Ok(PartialR2Inference {
        r2_partial,
        alpha_hat,
        theta_hat,
        a_hat,
        b_hat,
        v_hat: v_hat_raw.max(0.0),
        n,
    })
}

/// Convenience wrapper taking a dataset: `x` and `y` are column names, the
/// remaining selected columns form `Z`.
pub fn partial_r2_from_dataset(
    d: &Dataset,
    x_col: &str,
    y_col: &str,
    z_cols: &[String],
) -> Result<PartialR2Inference> {
    let find = |name: &str| -> Result<Vec<f64>> {
        if name == "__response__" {
            return Ok(d.y().to_vec());
        }
        let idx = d
            .names()
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        Ok(d.column(idx))
    };
    let x = find(x_col)?;
    let y = find(y_col)?;
    let mut z = Matrix::zeros(d.n(), z_cols.len());
    for (j, name) in z_cols.iter().enumerate() {
        let col = find(name)?;
        for i in 0..d.n() {
            z[(i, j)] = col[i];
        }
    }
    partial_r2(&x, &y, &z)
}

/// Confidence interval for the squared partial correlation at level
/// `1 − delta`, mirroring the global-R² construction.
pub fn partial_r2_ci(
    inf: &PartialR2Inference,
    delta: f64,
    quantile_kind: QuantileKind,
) -> Result<ConfidenceInterval> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("delta {} not in (0, 1)", delta)));
    }
    ConfidenceInterval::from_variance(inf.r2_partial, inf.v_hat, inf.n, delta, quantile_kind)
}

/// Residuals of `w` on the span of `(1, Z)`. With `q = 0` this is plain
/// centering.
fn residualize(w: &[f64], z: &Matrix) -> Result<Vec<f64>> {
    let n = w.len();
    let q = z.cols();
    let m = crate::data::mean(w);
    if q == 0 {
        return Ok(w.iter().map(|v| v - m).collect());
    }
    // Center Z and w, then project the centered w on the centered Z columns;
    // this is the same projection as on (1, Z).
    let mut z0 = Matrix::zeros(n, q);
    for j in 0..q {
        let col = z.column(j);
        let mj = crate::data::mean(&col);
        for i in 0..n {
            z0[(i, j)] = col[i] - mj;
        }
    }
    let w0: Vec<f64> = w.iter().map(|v| v - m).collect();
    let gram = z0.transpose().matmul(&z0);
    let chol = crate::numerics::cholesky(&gram).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SingularDesign,
        other => other,
    })?;
    let coeffs = crate::numerics::chol_solve_vec(&chol, &z0.transpose().mul_vec(&w0));
    let fitted = z0.mul_vec(&coeffs);
    Ok(w0.iter().zip(&fitted).map(|(a, b)| a - b).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{Rng, Seed};
    use approx::assert_abs_diff_eq;

    /// The Gaussian triple used throughout: X = Z + U, Y = Z + ρ'U + W with
    /// Z, U, W iid standard normal. The population partial correlation of
    /// (X, Y) given Z is ρ' / √(1 + ρ'²); with ρ' = 2/√21 the squared
    /// partial correlation is (4/21)/(25/21) = 0.16.
    pub fn gaussian_triple(n: usize, seed: Seed) -> (Vec<f64>, Vec<f64>, Matrix) {
        let rho = 2.0 / 21.0_f64.sqrt();
        let mut rng = Rng::new(seed, &[31]);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        let mut z = Matrix::zeros(n, 1);
        for i in 0..n {
            let zi = rng.normal(0.0, 1.0);
            let ui = rng.normal(0.0, 1.0);
            let wi = rng.normal(0.0, 1.0);
            x.push(zi + ui);
            y.push(zi + rho * ui + wi);
            z[(i, 0)] = zi;
        }
        (x, y, z)
    }

    #[test]
    fn empty_z_reduces_to_squared_correlation() {
        let x = vec![1.0, 2.0, 4.0, 3.0, 6.0, 5.0];
        let y = vec![1.5, 2.5, 3.0, 4.5, 5.0, 6.5];
        let inf = partial_r2(&x, &y, &Matrix::zeros(0, 0)).unwrap();
        let c = crate::data::empirical_cov(&x, &y);
        let corr2 = c * c / (crate::data::empirical_var(&x) * crate::data::empirical_var(&y));
        assert_abs_diff_eq!(inf.r2_partial, corr2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            inf.r2_partial,
            inf.alpha_hat * inf.theta_hat,
            epsilon = 1e-12
        );
    }

    #[test]
    fn y_in_span_of_z_is_degenerate() {
        let n = 30;
        let mut rng = Rng::new(Seed(5), &[2]);
        let z_col: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.normal(0.0, 1.0)).collect();
        let y: Vec<f64> = z_col.iter().map(|v| 2.0 * v - 1.0).collect();
        let mut z = Matrix::zeros(n, 1);
        for i in 0..n {
            z[(i, 0)] = z_col[i];
        }
        let err = partial_r2(&x, &y, &z).unwrap_err();
        assert!(matches!(err, Error::DegenerateResiduals));
    }

    #[test]
    fn gaussian_triple_converges_to_016() {
        let (x, y, z) = gaussian_triple(100_000, Seed(3));
        let inf = partial_r2(&x, &y, &z).unwrap();
        assert!(
            (inf.r2_partial - 0.16).abs() < 0.01,
            "partial R² = {}",
            inf.r2_partial
        );
    }

    #[test]
    fn symmetric_in_x_and_y() {
        let (x, y, z) = gaussian_triple(500, Seed(11));
        let a = partial_r2(&x, &y, &z).unwrap();
        let b = partial_r2(&y, &x, &z).unwrap();
        assert_abs_diff_eq!(a.r2_partial, b.r2_partial, epsilon = 1e-12);
        assert_abs_diff_eq!(a.alpha_hat, b.theta_hat, epsilon = 1e-12);
        assert_abs_diff_eq!(a.v_hat, b.v_hat, epsilon = 1e-10 * a.v_hat.abs().max(1.0));
    }

    #[test]
    fn duplicated_z_column_raises_singular() {
        let (x, y, z) = gaussian_triple(100, Seed(7));
        let mut z2 = Matrix::zeros(100, 2);
        for i in 0..100 {
            z2[(i, 0)] = z[(i, 0)];
            z2[(i, 1)] = 3.0 * z[(i, 0)]; // in the span of column 0
        }
        let err = partial_r2(&x, &y, &z2).unwrap_err();
        assert!(matches!(err, Error::SingularDesign));
    }

    #[test]
    fn affine_invariance() {
        let (x, y, z) = gaussian_triple(300, Seed(19));
        let base = partial_r2(&x, &y, &z).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| -1.5 * v + 4.0).collect();
        let y2: Vec<f64> = y.iter().map(|v| 0.25 * v - 2.0).collect();
        let mut z2 = Matrix::zeros(300, 1);
        for i in 0..300 {
            z2[(i, 0)] = 10.0 * z[(i, 0)] + 3.0;
        }
        let t = partial_r2(&x2, &y2, &z2).unwrap();
        assert_abs_diff_eq!(base.r2_partial, t.r2_partial, epsilon = 1e-9);
    }

    #[test]
    fn point_interval_when_variance_zero() {
        let inf = PartialR2Inference {
            r2_partial: 0.3,
            alpha_hat: 0.5,
            theta_hat: 0.6,
            a_hat: Matrix::zeros(2, 2),
            b_hat: Matrix::zeros(2, 2),
            v_hat: 0.0,
            n: 50,
        };
        let ci = partial_r2_ci(&inf, 0.05, QuantileKind::Student).unwrap();
        assert_eq!(ci.lower, 0.3);
        assert_eq!(ci.upper, 0.3);
    }

    #[test]
    fn ci_width_shrinks_like_inverse_sqrt_n() {
        let mut ratios = Vec::new();
        for seed in 0..30 {
            let width = |n: usize| {
                let (x, y, z) = gaussian_triple(n, Seed(500 + seed));
                let inf = partial_r2(&x, &y, &z).unwrap();
                partial_r2_ci(&inf, 0.05, QuantileKind::Student)
                    .unwrap()
                    .width()
            };
            ratios.push(width(4000) / width(1000));
        }
        let mean_ratio = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!(
            (0.45..=0.55).contains(&mean_ratio),
            "mean width ratio {}",
            mean_ratio
        );
    }

    #[test]
    fn too_few_rows_rejected() {
        let x = vec![1.0, 2.0, 3.0];
        let y = vec![2.0, 1.0, 3.0];
        let z = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![4.0]]);
        assert!(matches!(
            partial_r2(&x, &y, &z).unwrap_err(),
            Error::TooFewRows { .. }
        ));
    }
}
