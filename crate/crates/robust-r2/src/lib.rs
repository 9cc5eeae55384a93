//! Robust (model-free, heteroscedasticity-tolerant) asymptotic inference for
//! the multiple correlation coefficient R².
//!
//! The crate provides:
//!
//! - [`ols`]: least-squares fits with the heteroscedasticity-consistent
//!   sandwich covariance and a Wald test for coefficient subsets;
//! - [`r2`]: point estimate, asymptotic variance and confidence interval for
//!   R², valid without any distributional model for the data;
//! - [`joint`]: joint asymptotic inference for the p individual R²'s and
//!   product-feature R² indices;
//! - [`partial`]: squared partial correlation with asymptotic CI;
//! - [`screening`]: studentized marginal-slope screening with an
//!   FPR-calibrated threshold;
//! - [`simgen`]: seeded generators for the benchmark simulation models, with
//!   analytically known ground truth attached;
//! - [`montecarlo`]: replicated coverage and screening experiments.
//!
//! All estimators divide empirical variances and covariances by `n`, never
//! `n - 1`; the asymptotic variance formulas assume this convention.

pub mod cli;
pub mod data;
pub mod error;
pub mod joint;
pub mod jsonout;
pub mod montecarlo;
pub mod numerics;
pub mod ols;
pub mod partial;
pub mod r2;
pub mod screening;
pub mod simgen;

pub use error::{Error, Result};
