//! Seeded generators for the benchmark simulation models, with analytically
//! known ground truth attached.
//!
//! # Random number generation
//!
//! All randomness flows through a counter-based splitmix64 generator: a
//! stream is a pair `(key, counter)` and the i-th output is
//! `mix64(key + i·GOLDEN)` where `mix64` is the splitmix64 finalizer. This
//! makes every stream a pure function of its key, so substreams indexed by
//! `(seed, id₁, id₂, …)` are independent and reproducible regardless of
//! scheduling. The generator algorithm is part of the output contract:
//! identical seeds reproduce identical datasets bit-for-bit on every
//! platform.
//!
//! Every variate is produced by inversion (quantile applied to a uniform)
//! or by a deterministic search over the CDF, never by rejection: the draw
//! count per variate is fixed, which keeps substreams aligned no matter
//! what was sampled before.

use std::collections::BTreeSet;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::numerics::{cholesky, normal_quantile, student_quantile, Matrix};

/// A 64-bit seed; identical seeds reproduce identical datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer: a bijective avalanche mix of a 64-bit word.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based splitmix64 stream.
#[derive(Debug, Clone)]
pub struct Rng {
    key: u64,
    ctr: u64,
}

impl Rng {
    /// Creates the substream of `seed` identified by a list of ids. Distinct
    /// id lists yield independent streams; the empty list is the root
    /// stream.
    pub fn new(seed: Seed, ids: &[u64]) -> Self {
        let mut key = mix64(seed.0 ^ GOLDEN);
        for &id in ids {
            key = mix64(key.wrapping_add(GOLDEN) ^ mix64(id.wrapping_add(GOLDEN)));
        }
        Rng { key, ctr: 0 }
    }

    /// Next raw 64-bit word.
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key.wrapping_add(self.ctr.wrapping_mul(GOLDEN)));
        self.ctr = self.ctr.wrapping_add(1);
        out
    }

    /// Uniform on (0, 1) with 53-bit resolution, never exactly 0 or 1 so
    /// that quantile transforms stay finite.
    pub fn uniform01(&mut self) -> f64 {
        let u = (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        if u <= 0.0 {
            f64::MIN_POSITIVE
        } else {
            u
        }
    }

    /// Normal variate by inversion.
    pub fn normal(&mut self, mu: f64, sigma: f64) -> f64 {
        mu + sigma
            * normal_quantile(self.uniform01())
                .expect("uniform01 lies strictly inside (0, 1)")
    }

    /// Exponential variate with the given rate, by inversion.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform01().ln() / rate
    }

    /// χ² variate with `df` degrees of freedom: a sum of `df/2` exponentials
    /// of rate 1/2, plus a squared normal when `df` is odd. The draw count
    /// is fixed given `df`.
    pub fn chi_square(&mut self, df: u32) -> f64 {
        let mut s = 0.0;
        for _ in 0..df / 2 {
            s += self.exponential(0.5);
        }
        if df % 2 == 1 {
            let z = self.normal(0.0, 1.0);
            s += z * z;
        }
        s
    }

    /// Bernoulli variate.
    pub fn bernoulli(&mut self, p: f64) -> f64 {
        if self.uniform01() < p {
            1.0
        } else {
            0.0
        }
    }

    /// Poisson variate by CDF search on a single uniform; exact and a fixed
    /// one draw per variate for the small rates used here.
    pub fn poisson(&mut self, lambda: f64) -> f64 {
        let u = self.uniform01();
        let mut p = (-lambda).exp();
        let mut cum = p;
        let mut k = 0u64;
        while u > cum && k < 10_000 {
            k += 1;
            p *= lambda / k as f64;
            cum += p;
        }
        k as f64
    }

    /// Student t variate by inversion.
    pub fn student_t(&mut self, df: usize) -> f64 {
        student_quantile(self.uniform01(), df)
            .expect("uniform01 lies strictly inside (0, 1)")
    }
}

/// The simulation models. The first six are the low-dimensional coverage
/// benchmarks, `ScreeningDesign` is the 1000-column screening benchmark,
/// and the last two are simple diagnostic models (a pure-noise response and
/// a noise-free linear response) used by calibration checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    /// `Y = 0.5 + 0.5X¹ + X² + ε`, all inputs standard normal. R² = 5/9.
    GaussianLinear,
    /// Same regression with `ε ~ t(10)` (variance 10/8). R² = 1/2.
    StudentNoise,
    /// `Y = 0.5 + 0.5X¹ + X² + √(0.2 + 0.8(X¹)²)·e`. R² = 5/9.
    Heteroscedastic,
    /// `Y = X² + e` fitted on the columns `(X, |X|)`: the projection target
    /// differs from the conditional mean. R² = (2/π)/(3(1 − 2/π)).
    MisspecifiedAbs,
    /// `Y = X² + e` fitted on `(X, X²)`. R² = 2/3.
    Polynomial,
    /// `X¹ ~ U[0,1]`, `X² ~ Exp(1)`, `Y | X ~ Poisson(0.5 + X¹ + X²)`.
    /// R² = 13/37.
    PoissonCount,
    /// The 1000-column logistic screening benchmark; support = columns 1–14.
    ScreeningDesign,
    /// `Y ~ N(0,1)` independent of two standard normal columns. R² = 0.
    NullNoise,
    /// `Y = 0.5 + 0.5X¹ + X²` with no noise. R² = 1.
    ExactLinear,
}

impl ModelSpec {
    /// Stable string key, used by the CLI and substream derivation.
    pub fn key(&self) -> &'static str {
        match self {
            ModelSpec::GaussianLinear => "gaussian-linear",
            ModelSpec::StudentNoise => "student-noise",
            ModelSpec::Heteroscedastic => "heteroscedastic",
            ModelSpec::MisspecifiedAbs => "misspecified-abs",
            ModelSpec::Polynomial => "polynomial",
            ModelSpec::PoissonCount => "poisson-count",
            ModelSpec::ScreeningDesign => "screening-design",
            ModelSpec::NullNoise => "null-noise",
            ModelSpec::ExactLinear => "exact-linear",
        }
    }

    /// Parses a string key.
    pub fn from_key(key: &str) -> Result<Self> {
        Ok(match key {
            "gaussian-linear" => ModelSpec::GaussianLinear,
            "student-noise" => ModelSpec::StudentNoise,
            "heteroscedastic" => ModelSpec::Heteroscedastic,
            "misspecified-abs" => ModelSpec::MisspecifiedAbs,
            "polynomial" => ModelSpec::Polynomial,
            "poisson-count" => ModelSpec::PoissonCount,
            "screening-design" => ModelSpec::ScreeningDesign,
            "null-noise" => ModelSpec::NullNoise,
            "exact-linear" => ModelSpec::ExactLinear,
            other => {
                return Err(Error::Domain(format!("unknown model key {:?}", other)));
            }
        })
    }

    /// A stable numeric tag used in substream derivation.
    fn tag(&self) -> u64 {
        match self {
            ModelSpec::GaussianLinear => 1,
            ModelSpec::StudentNoise => 2,
            ModelSpec::Heteroscedastic => 3,
            ModelSpec::MisspecifiedAbs => 4,
            ModelSpec::Polynomial => 5,
            ModelSpec::PoissonCount => 6,
            ModelSpec::ScreeningDesign => 7,
            ModelSpec::NullNoise => 8,
            ModelSpec::ExactLinear => 9,
        }
    }
}

/// Analytic ground truth attached to a generated dataset.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// The population R² (absent for the screening design, whose outcome is
    /// not a linear-projection benchmark).
    pub true_r2: Option<f64>,
    /// Population projection coefficients, intercept first.
    pub true_alpha: Option<Vec<f64>>,
    /// The set of truly associated columns (0-based), screening design only.
    pub true_support: Option<BTreeSet<usize>>,
}

/// Generates `n` rows of the given model, reproducibly from the seed.
pub fn generate(spec: &ModelSpec, n: usize, seed: Seed) -> Result<(Dataset, GroundTruth)> {
    if n < 10 {
        return Err(Error::Domain(format!("n = {} below the minimum of 10", n)));
    }
    // Substream per (model, plain generate); the Monte Carlo harness derives
    // its own per-replicate streams via `generate_replicate`.
    let rng = Rng::new(seed, &[spec.tag()]);
    generate_with_rng(spec, n, rng)
}

/// Generates a Monte Carlo replicate using the substream keyed by
/// `(base_seed, model, n, replicate)` so that experiment cells are mutually
/// independent and per-replicate generation can run in parallel.
pub fn generate_replicate(
    spec: &ModelSpec,
    n: usize,
    base_seed: Seed,
    replicate: u64,
) -> Result<(Dataset, GroundTruth)> {
    if n < 10 {
        return Err(Error::Domain(format!("n = {} below the minimum of 10", n)));
    }
    let rng = Rng::new(base_seed, &[spec.tag(), n as u64, replicate]);
    generate_with_rng(spec, n, rng)
}

fn generate_with_rng(spec: &ModelSpec, n: usize, mut rng: Rng) -> Result<(Dataset, GroundTruth)> {
    match spec {
        ModelSpec::GaussianLinear
        | ModelSpec::StudentNoise
        | ModelSpec::Heteroscedastic
        | ModelSpec::NullNoise
        | ModelSpec::ExactLinear => {
            let mut y = Vec::with_capacity(n);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let x1 = rng.normal(0.0, 1.0);
                let x2 = rng.normal(0.0, 1.0);
                let yi = match spec {
                    ModelSpec::GaussianLinear => {
                        0.5 + 0.5 * x1 + x2 + rng.normal(0.0, 1.0)
                    }
                    ModelSpec::StudentNoise => 0.5 + 0.5 * x1 + x2 + rng.student_t(10),
                    ModelSpec::Heteroscedastic => {
                        let scale = (0.2 + 0.8 * x1 * x1).sqrt();
                        0.5 + 0.5 * x1 + x2 + scale * rng.normal(0.0, 1.0)
                    }
                    ModelSpec::NullNoise => rng.normal(0.0, 1.0),
                    ModelSpec::ExactLinear => 0.5 + 0.5 * x1 + x2,
                    _ => unreachable!(),
                };
                y.push(yi);
                rows.push(vec![x1, x2]);
            }
            let truth = match spec {
                ModelSpec::GaussianLinear | ModelSpec::Heteroscedastic => GroundTruth {
                    true_r2: Some(5.0 / 9.0),
                    true_alpha: Some(vec![0.5, 0.5, 1.0]),
                    true_support: None,
                },
                ModelSpec::StudentNoise => GroundTruth {
                    true_r2: Some(0.5),
                    true_alpha: Some(vec![0.5, 0.5, 1.0]),
                    true_support: None,
                },
                ModelSpec::NullNoise => GroundTruth {
                    true_r2: Some(0.0),
                    true_alpha: Some(vec![0.0, 0.0, 0.0]),
                    true_support: None,
                },
                ModelSpec::ExactLinear => GroundTruth {
                    true_r2: Some(1.0),
                    true_alpha: Some(vec![0.5, 0.5, 1.0]),
                    true_support: None,
                },
                _ => unreachable!(),
            };
            let d = Dataset::new(
                y,
                Matrix::from_rows(&rows),
                vec!["x1".to_string(), "x2".to_string()],
            )?;
            Ok((d, truth))
        }
        ModelSpec::MisspecifiedAbs => {
            // Y = X² + e, fitted on (X, |X|). With s = E|X| = √(2/π) and
            // Var|X| = 1 − 2/π:
            //   α₂ = Cov(Y, |X|)/Var(|X|) = s/(1 − 2/π)
            //   α₀ = E(Y) − α₂ s = 1 − α₂ s      (α₁ = 0 by symmetry)
            //   R² = α₂² Var(|X|)/Var(Y) = (2/π)/(3(1 − 2/π)).
            let s = (2.0 / std::f64::consts::PI).sqrt();
            let var_abs = 1.0 - 2.0 / std::f64::consts::PI;
            let alpha2 = s / var_abs;
            let alpha0 = 1.0 - alpha2 * s;
            let r2 = (2.0 / std::f64::consts::PI) / (3.0 * var_abs);
            let mut y = Vec::with_capacity(n);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let x = rng.normal(0.0, 1.0);
                let e = rng.normal(0.0, 1.0);
                y.push(x * x + e);
                rows.push(vec![x, x.abs()]);
            }
            let d = Dataset::new(
                y,
                Matrix::from_rows(&rows),
                vec!["x".to_string(), "abs_x".to_string()],
            )?;
            Ok((
                d,
                GroundTruth {
                    true_r2: Some(r2),
                    true_alpha: Some(vec![alpha0, 0.0, alpha2]),
                    true_support: None,
                },
            ))
        }
        ModelSpec::Polynomial => {
            // Y = X² + e fitted on (X, X²): the model is exactly linear in
            // the features, Var(X²) = 2, so R² = 2/3.
            let mut y = Vec::with_capacity(n);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let x = rng.normal(0.0, 1.0);
                let e = rng.normal(0.0, 1.0);
                y.push(x * x + e);
                rows.push(vec![x, x * x]);
            }
            let d = Dataset::new(
                y,
                Matrix::from_rows(&rows),
                vec!["x".to_string(), "x_sq".to_string()],
            )?;
            Ok((
                d,
                GroundTruth {
                    true_r2: Some(2.0 / 3.0),
                    true_alpha: Some(vec![0.0, 0.0, 1.0]),
                    true_support: None,
                },
            ))
        }
        ModelSpec::PoissonCount => {
            // X¹ ~ U[0,1], X² ~ Exp(1), Y | X ~ Poisson(0.5 + X¹ + X²).
            // The conditional mean is exactly linear, so the projection
            // coefficients are (0.5, 1, 1); Var(proj) = 1/12 + 1 = 13/12 and
            // Var(Y) = 13/12 + E(λ) = 13/12 + 2 = 37/12, hence R² = 13/37.
            let mut y = Vec::with_capacity(n);
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                let x1 = rng.uniform01();
                let x2 = rng.exponential(1.0);
                y.push(rng.poisson(0.5 + x1 + x2));
                rows.push(vec![x1, x2]);
            }
            let d = Dataset::new(
                y,
                Matrix::from_rows(&rows),
                vec!["x1".to_string(), "x2".to_string()],
            )?;
            Ok((
                d,
                GroundTruth {
                    true_r2: Some(13.0 / 37.0),
                    true_alpha: Some(vec![0.5, 1.0, 1.0]),
                    true_support: None,
                },
            ))
        }
        ModelSpec::ScreeningDesign => generate_screening_design(n, rng),
    }
}

/// The 1000-column screening benchmark: 14 columns associated with a binary
/// logistic outcome and a 986-column correlated Gaussian noise block.
fn generate_screening_design(n: usize, mut rng: Rng) -> Result<(Dataset, GroundTruth)> {
    const P: usize = 1000;
    let beta: [f64; 11] = [
        -1.0,
        4.0 * (-0.1f64).exp(),
        -4.0 * (-0.2f64).exp(),
        4.0 * (-0.3f64).exp(),
        -4.0 * (-0.4f64).exp(),
        2.0,
        4.0,
        6.0,
        3.0,
        3.0,
        4.0,
    ];
    let noise_sd = [0.3, 0.2, 0.35, 0.55];

    let rho1: f64 = 0.57;
    let rho2: f64 = 0.7;
    let ar1_scale = (1.0 - rho1 * rho1).sqrt();
    let ar2_scale = (1.0 - rho2 * rho2).sqrt();

    let mut y = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut x = Vec::with_capacity(P);

        // X¹..X⁵: stationary AR(1) with parameter ρ = 0.57, which has
        // exactly the Toeplitz(ρ^{|i−j|}) covariance.
        let mut prev = rng.normal(0.0, 1.0);
        x.push(prev);
        for _ in 1..5 {
            prev = rho1 * prev + ar1_scale * rng.normal(0.0, 1.0);
            x.push(prev);
        }

        x.push(rng.bernoulli(0.35)); // X⁶
        x.push(rng.chi_square(2)); // X⁷
        let z1 = rng.poisson(2.0);
        x.push(x[0] * z1); // X⁸ = X¹·Z¹
        let z2 = rng.normal(1.0, 1.0);
        x.push(x[1] * z2); // X⁹ = X²·Z²
        x.push(rng.exponential(0.5)); // X¹⁰ ~ E(1/2)

        // Logistic outcome from the first ten columns.
        let mut lin = beta[0];
        for j in 0..10 {
            lin += beta[j + 1] * x[j];
        }
        let prob = 1.0 / (1.0 + (-lin).exp());
        y.push(rng.bernoulli(prob));

        // Noisy copies of X¹, X³, X⁴, X⁵.
        for (src, sd) in [0usize, 2, 3, 4].iter().zip(noise_sd.iter()) {
            let v = x[*src] + rng.normal(0.0, *sd);
            x.push(v);
        }

        // X¹⁵..X¹⁰⁰⁰: stationary AR(1) with ρ = 0.7 (Toeplitz covariance),
        // independent of everything above.
        let mut prev = rng.normal(0.0, 1.0);
        x.push(prev);
        for _ in 1..(P - 14) {
            prev = rho2 * prev + ar2_scale * rng.normal(0.0, 1.0);
            x.push(prev);
        }

        rows.push(x);
    }

    let names = (1..=P).map(|j| format!("x{}", j)).collect();
    let d = Dataset::new(y, Matrix::from_rows(&rows), names)?;
    Ok((
        d,
        GroundTruth {
            true_r2: None,
            true_alpha: None,
            true_support: Some((0..14).collect()),
        },
    ))
}

/// Draws `n` i.i.d. rows from `N(0, cov)` via the Cholesky factor of `cov`.
pub fn multivariate_gaussian(cov: &Matrix, n: usize, seed: Seed) -> Result<Matrix> {
    let chol = cholesky(cov)?;
    let d = cov.rows();
    let mut rng = Rng::new(seed, &[0x6d76_6e]);
    let mut out = Matrix::zeros(n, d);
    let mut z = vec![0.0; d];
    for i in 0..n {
        for zj in z.iter_mut() {
            *zj = rng.normal(0.0, 1.0);
        }
        for j in 0..d {
            let mut s = 0.0;
            for k in 0..=j {
                s += chol[(j, k)] * z[k];
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}
