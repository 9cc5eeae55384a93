//! Studentized marginal-slope screening with an FPR-calibrated threshold,
//! and its evaluation metrics.
//!
//! For each column `j` the marginal slope `τ̂ⱼ` is studentized by
//!
//! ```text
//! v̂ⱼ = (1/n) Σᵢ (Xᵢ⁽ʲ⁾ − X̄⁽ʲ⁾)² (ε̂ᵢ⁽ʲ⁾)² / Var_n(X⁽ʲ⁾)²
//! ```
//!
//! with `ε̂⁽ʲ⁾ = (Y−Ȳ) − τ̂ⱼ(X⁽ʲ⁾−X̄⁽ʲ⁾)`, and column `j` is selected when
//! `√n|τ̂ⱼ|/√v̂ⱼ ≥ γ` with `γ = Φ⁻¹(1 − q/2)`; `q` is the expected
//! per-column false-positive rate. Columns are processed independently —
//! memory stays `O(n + p)` and no `p × p` matrix is ever formed.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::normal_quantile;

/// The outcome of one screening pass.
#[derive(Debug, Clone)]
pub struct ScreeningResult {
    /// Studentized statistics `√n|τ̂ⱼ|/√v̂ⱼ`, one per column. A zero `v̂ⱼ`
    /// (perfect marginal fit) maps to `+∞`.
    pub statistics: Vec<f64>,
    /// The threshold `γ = Φ⁻¹(1 − q/2)`.
    pub threshold: f64,
    /// Selected column indices (0-based), exactly
    /// `{ j : statistics[j] ≥ threshold }`.
    pub selected: BTreeSet<usize>,
    /// The expected per-column false-positive rate used.
    pub q: f64,
}

/// Aggregate quality metrics of a screening result against a known truth.
#[derive(Debug, Clone)]
pub struct ScreeningMetrics {
    /// `|selected ∩ truth| / |truth|`.
    pub tpr: f64,
    /// `|selected \ truth| / (p − |truth|)`.
    pub fpr: f64,
    /// `|selected|`.
    pub selected_size: usize,
}

/// Screens every column of the dataset at expected false-positive rate `q`.
pub fn screen(d: &Dataset, q: f64) -> Result<ScreeningResult> {
    if !(0.0 < q && q < 1.0) {
        return Err(Error::Domain(format!("q {} not in (0, 1)", q)));
    }
    let n = d.n();
    let p = d.p();
    let nf = n as f64;
    let y_mean = crate::data::mean(d.y());
    let y0: Vec<f64> = d.y().iter().map(|v| v - y_mean).collect();

    let statistics: Vec<f64> = (0..p)
        .into_par_iter()
        .map(|j| -> Result<f64> {
            let mut x_mean = 0.0;
            for i in 0..n {
                x_mean += d.x()[(i, j)];
            }
            x_mean /= nf;
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            for i in 0..n {
                let x = d.x()[(i, j)] - x_mean;
                sxx += x * x;
                sxy += x * y0[i];
            }
            if sxx <= 0.0 {
                return Err(Error::DegenerateColumn(j));
            }
            let tau = sxy / sxx;
            let var_x = sxx / nf;
            let mut v = 0.0;
            for i in 0..n {
                let x = d.x()[(i, j)] - x_mean;
                let eps = y0[i] - tau * x;
                v += x * x * eps * eps;
            }
            v /= nf * var_x * var_x;
            if v <= 0.0 {
                // A perfect marginal fit is maximal evidence for selection.
                Ok(f64::INFINITY)
            } else {
                Ok(nf.sqrt() * tau.abs() / v.sqrt())
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    let threshold = normal_quantile(1.0 - q / 2.0)?;
    let selected = statistics
        .iter()
        .enumerate()
        .filter(|(_, s)| **s >= threshold)
        .map(|(j, _)| j)
        .collect();
    Ok(ScreeningResult {
        statistics,
        threshold,
        selected,
        q,
    })
}

/// Computes TPR/FPR/size of a result against a ground-truth support
/// (0-based indices into `0..p`). The truth must be nonempty and proper.
pub fn evaluate(r: &ScreeningResult, truth: &BTreeSet<usize>, p: usize) -> Result<ScreeningMetrics> {
    if truth.is_empty() || truth.len() >= p {
        return Err(Error::Domain(
            "truth set must be nonempty and a proper subset of the columns".to_string(),
        ));
    }
    if truth.iter().any(|&j| j >= p) {
        return Err(Error::Domain("truth index out of range".to_string()));
    }
    let tp = r.selected.intersection(truth).count();
    let fp = r.selected.difference(truth).count();
    Ok(ScreeningMetrics {
        tpr: tp as f64 / truth.len() as f64,
        fpr: fp as f64 / (p - truth.len()) as f64,
        selected_size: r.selected.len(),
    })
}

/// For each index, the fraction of results in which it was selected.
pub fn per_index_rates(results: &[ScreeningResult], indices: &[usize]) -> Vec<f64> {
    let total = results.len().max(1) as f64;
    indices
        .iter()
        .map(|j| results.iter().filter(|r| r.selected.contains(j)).count() as f64 / total)
        .collect()
}
