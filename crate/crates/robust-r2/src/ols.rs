//! Least-squares fit with the heteroscedasticity-consistent sandwich
//! covariance and the associated Wald test.
//!
//! The fit regresses `Y` on `(1, X⁽¹⁾, …, X⁽ᵖ⁾)` with the intercept column
//! physically prepended, so coefficient indices run `0..=p` with index 0 the
//! intercept. The limiting covariance of `√n(α̂ − α)` is estimated by the
//! sandwich `M̂⁻¹ M̂(ε) M̂⁻¹` with
//!
//! ```text
//! M̂        = (1/n) 𝕏ᵗ𝕏
//! M̂(ε)_{j,ℓ} = (1/n) Σ_i X_i⁽ʲ⁾ X_i⁽ˡ⁾ ε̂_i²
//! ```
//!
//! No degrees-of-freedom correction is applied anywhere: all divisors are
//! `n`, and a finite-sample HC1-style rescaling is deliberately omitted.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{chi_square_sf, cholesky, invert_spd, Matrix};

/// The result of a least-squares fit with robust covariance.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Fitted coefficients `(α̂₀, …, α̂ₚ)`, intercept first.
    pub alpha: Vec<f64>,
    /// Residuals `ε̂_i = Y_i − (𝕏 α̂)_i`.
    pub residuals: Vec<f64>,
    /// `M̂ = (1/n) 𝕏ᵗ𝕏`, shape `(p+1) × (p+1)`.
    pub m_hat: Matrix,
    /// `M̂(ε)` with entries `(1/n) Σ X_i⁽ʲ⁾ X_i⁽ˡ⁾ ε̂_i²`.
    pub m_eps_hat: Matrix,
    /// The sandwich `M̂⁻¹ M̂(ε) M̂⁻¹`.
    pub sandwich: Matrix,
    /// Number of observations.
    pub n: usize,
}

/// A Wald test outcome: the χ²-distributed statistic, its degrees of freedom
/// and the upper-tail p-value.
#[derive(Debug, Clone)]
pub struct WaldResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Builds the `n × (p+1)` design with a leading column of ones.
pub fn design_with_intercept(d: &Dataset) -> Matrix {
    let n = d.n();
    let p = d.p();
    let mut x = Matrix::zeros(n, p + 1);
    for i in 0..n {
        x[(i, 0)] = 1.0;
        for j in 0..p {
            x[(i, j + 1)] = d.x()[(i, j)];
        }
    }
    x
}

/// Least-squares fit of `Y` on `(1, X⁽¹⁾, …, X⁽ᵖ⁾)` with sandwich covariance.
///
/// Fails with [`Error::SingularDesign`] when the Gram matrix `𝕏ᵗ𝕏` is not
/// (numerically) positive definite, i.e. the design columns are empirically
/// linearly dependent.
pub fn fit(d: &Dataset) -> Result<OlsFit> {
    let n = d.n();
    // One row more than strict invertibility needs, to avoid the
    // zero-residual degeneracy of a saturated fit.
    if n < d.p() + 2 {
        return Err(Error::TooFewRows { n, p: d.p() });
    }
    let x = design_with_intercept(d);
    let q = x.cols();

    // Normal equations via Cholesky of the Gram matrix.
    let xtx = x.transpose().matmul(&x);
    let xty = x.transpose().mul_vec(d.y());
    let chol = cholesky(&xtx).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SingularDesign,
        other => other,
    })?;
    let alpha = crate::numerics::chol_solve_vec(&chol, &xty);

    let fitted = x.mul_vec(&alpha);
    let residuals: Vec<f64> = d.y().iter().zip(&fitted).map(|(y, f)| y - f).collect();

    let mut m_hat = Matrix::zeros(q, q);
    for j in 0..q {
        for l in 0..q {
            m_hat[(j, l)] = xtx[(j, l)] / n as f64;
        }
    }

    let mut m_eps_hat = Matrix::zeros(q, q);
    for i in 0..n {
        let w = residuals[i] * residuals[i];
        for j in 0..q {
            let xj = x[(i, j)] * w;
            for l in j..q {
                m_eps_hat[(j, l)] += xj * x[(i, l)];
            }
        }
    }
    for j in 0..q {
        for l in j..q {
            m_eps_hat[(j, l)] /= n as f64;
            m_eps_hat[(l, j)] = m_eps_hat[(j, l)];
        }
    }

    let m_inv = invert_spd(&m_hat).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SingularDesign,
        other => other,
    })?;
    let sandwich = m_inv.matmul(&m_eps_hat).matmul(&m_inv);

    Ok(OlsFit {
        alpha,
        residuals,
        m_hat,
        m_eps_hat,
        sandwich,
        n,
    })
}

/// Wald test of `H₀ : α_{i₁} = ⋯ = α_{i_k} = 0` for the coefficient
/// positions in `indices` (0 = intercept). The statistic
/// `n · α̂_Iᵗ V̂_k⁻¹ α̂_I` with `V̂_k` the corresponding sub-block of the
/// sandwich is asymptotically χ²(k) under the null.
pub fn wald_test(fit: &OlsFit, indices: &[usize]) -> Result<WaldResult> {
    let q = fit.alpha.len();
    if indices.is_empty() {
        return Err(Error::Domain("empty index set for Wald test".to_string()));
    }
    crate::data::check_index_set(indices, q)?;

    // With residuals at rounding-noise level (an exact fit) the sandwich is
    // zero to working precision; inverting it would only amplify noise.
    let msr = fit.residuals.iter().map(|r| r * r).sum::<f64>() / fit.n as f64;
    let fitted_scale: f64 = (0..q)
        .map(|j| {
            (0..q)
                .map(|l| fit.alpha[j] * fit.m_hat[(j, l)] * fit.alpha[l])
                .sum::<f64>()
        })
        .sum();
    if msr <= 1e-24 * fitted_scale {
        return Err(Error::SingularSubcovariance);
    }

    let k = indices.len();
    let mut sub = Matrix::zeros(k, k);
    let mut a_sub = Vec::with_capacity(k);
    for (r, &i) in indices.iter().enumerate() {
        a_sub.push(fit.alpha[i]);
        for (c, &j) in indices.iter().enumerate() {
            sub[(r, c)] = fit.sandwich[(i, j)];
        }
    }
    let solved = crate::numerics::solve_spd_vec(&sub, &a_sub).map_err(|e| match e {
        Error::NotPositiveDefinite => Error::SingularSubcovariance,
        other => other,
    })?;
    let quad: f64 = a_sub.iter().zip(&solved).map(|(a, s)| a * s).sum();
    let statistic = (fit.n as f64 * quad).max(0.0);
    Ok(WaldResult {
        statistic,
        df: k,
        p_value: chi_square_sf(statistic, k),
    })
}
