//! Joint asymptotic inference for the `p` individual R²'s, and the
//! product-feature R² indices.
//!
//! The individual coefficient of column `k` is `R̂²₍ₖ₎ = τ̂ₖ θ̂ₖ` with
//! `τ̂ₖ = Σ(Y−Ȳ)(X⁽ᵏ⁾−X̄⁽ᵏ⁾)/Σ(X⁽ᵏ⁾−X̄⁽ᵏ⁾)²`, i.e. the squared empirical
//! Pearson correlation of `(Y, X⁽ᵏ⁾)`. The joint limiting covariance of
//! `√n(R̂²₍·₎ − R²₍·₎)` is estimated by `Ĥ D̂ Ĉ D̂ Ĥᵗ`, where `Ĉ` is a
//! `2p × 2p` moment matrix built from the marginal residuals
//! `ε̂⁽ᵏ⁾ = (Y−Ȳ) − τ̂ₖ(X⁽ᵏ⁾−X̄⁽ᵏ⁾)` and the reverse residuals
//! `ê⁽ᵏ⁾ = (X⁽ᵏ⁾−X̄⁽ᵏ⁾) − θ̂ₖ(Y−Ȳ)`, `D̂` is diagonal with the inverse
//! empirical variances, and `Ĥ` carries the product-rule gradient.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{normal_quantile, Matrix};
use crate::r2::{ConfidenceInterval, QuantileKind};

/// Joint inference output for the individual R²'s.
#[derive(Debug, Clone)]
pub struct JointR2 {
    /// `R̂²₍ₖ₎ = τ̂ₖ θ̂ₖ` for each column.
    pub r2_individual: Vec<f64>,
    /// Marginal slopes of `Y` on each `X⁽ᵏ⁾`.
    pub tau_hat: Vec<f64>,
    /// `θ̂ₖ` as in the global-R² module.
    pub theta_hat: Vec<f64>,
    /// The `2p × 2p` moment matrix `Ĉ`.
    pub c_hat: Matrix,
    /// Diagonal `2p × 2p` matrix of inverse empirical variances.
    pub d_hat: Matrix,
    /// The `p × 2p` gradient matrix (`Ĥ_{k,k} = θ̂ₖ`, `Ĥ_{k,p+k} = τ̂ₖ`).
    pub h_hat: Matrix,
    /// Estimated covariance of `√n(R̂²₍·₎ − R²₍·₎)`: `Ĥ D̂ Ĉ D̂ Ĥᵗ`.
    pub cov_hat: Matrix,
    pub n: usize,
}

/// Estimates all individual R²'s and their joint asymptotic covariance.
pub fn individual_r2s(d: &Dataset) -> Result<JointR2> {
    let n = d.n();
    let p = d.p();
    let nf = n as f64;

    let c = d.center();
    let sum_y_sq: f64 = c.y0.iter().map(|v| v * v).sum();
    if sum_y_sq <= 0.0 {
        return Err(Error::DegenerateResponse);
    }

    let mut tau_hat = Vec::with_capacity(p);
    let mut theta_hat = Vec::with_capacity(p);
    let mut sum_x_sq = Vec::with_capacity(p);
    for k in 0..p {
        let mut sxx = 0.0;
        let mut sxy = 0.0;
        for i in 0..n {
            let x = c.x0[(i, k)];
            sxx += x * x;
            sxy += x * c.y0[i];
        }
        if sxx <= 0.0 {
            return Err(Error::DegenerateColumn(k));
        }
        sum_x_sq.push(sxx);
        tau_hat.push(sxy / sxx);
        theta_hat.push(sxy / sum_y_sq);
    }

    let r2_individual: Vec<f64> = tau_hat.iter().zip(&theta_hat).map(|(t, h)| t * h).collect();

    // Marginal residuals ε̂⁽ᵏ⁾ and reverse residuals ê⁽ᵏ⁾, both n × p.
    let mut eps = Matrix::zeros(n, p);
    let mut e_rev = Matrix::zeros(n, p);
    for k in 0..p {
        for i in 0..n {
            eps[(i, k)] = c.y0[i] - tau_hat[k] * c.x0[(i, k)];
            e_rev[(i, k)] = c.x0[(i, k)] - theta_hat[k] * c.y0[i];
        }
    }

    // Ĉ blocks: top-left (x0ⱼ x0ₖ ε̂⁽ʲ⁾ε̂⁽ᵏ⁾), bottom-right (y0² êⱼêₖ),
    // cross (x0ⱼ y0 ε̂⁽ʲ⁾ êₖ); all averaged with divisor n.
    let mut c_hat = Matrix::zeros(2 * p, 2 * p);
    for i in 0..n {
        let y = c.y0[i];
        let y2 = y * y;
        for j in 0..p {
            let xj_ej = c.x0[(i, j)] * eps[(i, j)];
            for k in j..p {
                c_hat[(j, k)] += xj_ej * c.x0[(i, k)] * eps[(i, k)];
                c_hat[(p + j, p + k)] += y2 * e_rev[(i, j)] * e_rev[(i, k)];
            }
            for k in 0..p {
                c_hat[(j, p + k)] += xj_ej * y * e_rev[(i, k)];
            }
        }
    }
    for j in 0..2 * p {
        for k in j..2 * p {
            c_hat[(j, k)] /= nf;
            c_hat[(k, j)] = c_hat[(j, k)];
        }
    }

    let mut d_hat = Matrix::zeros(2 * p, 2 * p);
    for j in 0..p {
        d_hat[(j, j)] = nf / sum_x_sq[j];
        d_hat[(p + j, p + j)] = nf / sum_y_sq;
    }

    let mut h_hat = Matrix::zeros(p, 2 * p);
    for k in 0..p {
        h_hat[(k, k)] = theta_hat[k];
        h_hat[(k, p + k)] = tau_hat[k];
    }

    let hd = h_hat.matmul(&d_hat);
    let cov_hat = hd.matmul(&c_hat).matmul(&hd.transpose());

    Ok(JointR2 {
        r2_individual,
        tau_hat,
        theta_hat,
        c_hat,
        d_hat,
        h_hat,
        cov_hat,
        n,
    })
}

/// Per-coordinate delta-method intervals
/// `R̂²₍ₖ₎ ± Φ⁻¹(1−δ/2)·√(cov_hat[k,k]/n)`.
pub fn marginal_cis(j: &JointR2, delta: f64) -> Result<Vec<ConfidenceInterval>> {
    if !(0.0 < delta && delta < 1.0) {
        return Err(Error::Domain(format!("delta {} not in (0, 1)", delta)));
    }
    let q = normal_quantile(1.0 - delta / 2.0)?;
    let nf = j.n as f64;
    Ok(j
        .r2_individual
        .iter()
        .enumerate()
        .map(|(k, &r2)| {
            let half = q * (j.cov_hat[(k, k)].max(0.0) / nf).sqrt();
            let lower = r2 - half;
            let upper = r2 + half;
            ConfidenceInterval {
                lower,
                upper,
                lower_clipped: lower.clamp(0.0, 1.0),
                upper_clipped: upper.clamp(0.0, 1.0),
                level: 1.0 - delta,
                quantile_kind: QuantileKind::Normal,
            }
        })
        .collect())
}

/// For each index subset, builds the product feature `Π (X⁽ⁱ⁾ − mᵢ)` and
/// returns its individual R̂² against `Y`.
///
/// When `means` is `Some`, the supplied known means are used for centering
/// (the orthogonality of the product family holds under the true input
/// distribution); `None` falls back to empirical means, documented as an
/// approximation that converges to the same values.
pub fn product_feature_r2(
    d: &Dataset,
    means: Option<&[f64]>,
    subsets: &[Vec<usize>],
) -> Result<Vec<f64>> {
    let n = d.n();
    let p = d.p();
    if let Some(m) = means {
        if m.len() != p {
            return Err(Error::Domain(format!(
                "{} means supplied for {} columns",
                m.len(),
                p
            )));
        }
    }
    let empirical: Vec<f64> = (0..p).map(|j| crate::data::mean(&d.column(j))).collect();
    let centers = means.unwrap_or(&empirical);

    let mut out = Vec::with_capacity(subsets.len());
    for subset in subsets {
        crate::data::check_index_set(subset, p)?;
        if subset.is_empty() {
            return Err(Error::Domain("empty product subset".to_string()));
        }
        let mut feature = vec![1.0; n];
        for &j in subset {
            for (i, f) in feature.iter_mut().enumerate() {
                *f *= d.x()[(i, j)] - centers[j];
            }
        }
        if crate::data::empirical_var(&feature) <= 0.0 {
            return Err(Error::DegenerateColumn(subset[0]));
        }
        // Individual R² of the constructed feature = squared correlation.
        let c = crate::data::empirical_cov(d.y(), &feature);
        let vy = crate::data::empirical_var(d.y());
        let vf = crate::data::empirical_var(&feature);
        if vy <= 0.0 {
            return Err(Error::DegenerateResponse);
        }
        out.push(c * c / (vy * vf));
    }
    Ok(out)
}
