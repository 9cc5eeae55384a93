//! Replicated coverage and screening experiments.
//!
//! Every replicate draws its data from the substream keyed by
//! `(base_seed, model, n, replicate)`, so experiment cells are mutually
//! independent and the set of replicates is a pure function of the inputs.
//! Replicates are evaluated by a worker pool of configurable size, but the
//! per-replicate results are collected by replicate index and aggregated in
//! index order — reports are therefore bit-identical for any worker count.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::jsonout::Json;
use crate::r2::QuantileKind;
use crate::screening;
use crate::simgen::{generate_replicate, GroundTruth, ModelSpec, Seed};

/// One `n`-cell of a coverage experiment.
#[derive(Debug, Clone)]
pub struct CoverageCell {
    pub n: usize,
    /// Fraction of replicates whose CI covered the true R².
    pub coverage: f64,
    /// Requested number of replicates.
    pub reps: usize,
    /// Replicates excluded because the generated design was singular.
    pub excluded: usize,
    pub mean_width: f64,
    pub mean_vhat: f64,
}

/// A coverage experiment over a list of sample sizes.
#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub model: String,
    pub delta: f64,
    pub quantile_kind: QuantileKind,
    pub base_seed: u64,
    pub cells: Vec<CoverageCell>,
}

/// A screening experiment summary.
#[derive(Debug, Clone)]
pub struct ScreeningReport {
    /// Selection rate of each true-support column (length 14).
    pub per_index_rates: Vec<f64>,
    /// Mean TPR = mean of `per_index_rates` (uniform truth weighting).
    pub tpr: f64,
    /// Mean FPR over replicates.
    pub fpr: f64,
    /// Mean selected-set size.
    pub mean_selected: f64,
    pub q: f64,
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
}

/// Runs `body` inside a rayon pool of the requested size (`None` uses the
/// global default pool sized to the logical CPU count).
fn with_pool<T: Send>(workers: Option<usize>, body: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(body()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::Domain(format!("cannot build worker pool: {}", e)))?;
            Ok(pool.install(body))
        }
    }
}

/// Per-replicate outcome of a coverage run.
enum RepOutcome {
    Ok { hit: bool, width: f64, v_hat: f64 },
    Singular,
}

fn true_r2_of(spec: &ModelSpec, truth: &GroundTruth) -> Result<f64> {
    truth.true_r2.ok_or_else(|| {
        Error::Domain(format!(
            "model {:?} has no scalar ground-truth R² for coverage experiments",
            spec.key()
        ))
    })
}

/// Estimates the coverage of the R² confidence interval at each `n`:
/// for every replicate, generate data, build the CI at level `1 − delta`,
/// and record whether the raw interval contains the true R².
///
/// Replicates whose generated design is singular are counted in
/// `excluded` and dropped from the averages; any other failure aborts the
/// experiment with the replicate context attached.
pub fn coverage_experiment(
    spec: &ModelSpec,
    n_list: &[usize],
    reps: usize,
    delta: f64,
    quantile_kind: QuantileKind,
    base_seed: Seed,
    workers: Option<usize>,
) -> Result<CoverageReport> {
    if reps < 10 {
        return Err(Error::Domain(format!("reps = {} below the minimum of 10", reps)));
    }
    if let Some(&n) = n_list.iter().find(|&&n| n < 50) {
        return Err(Error::Domain(format!("n = {} below the minimum of 50", n)));
    }

    let mut cells = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let outcomes: Vec<Result<RepOutcome>> = with_pool(workers, || {
            (0..reps as u64)
                .into_par_iter()
                .map(|r| -> Result<RepOutcome> {
                    let (d, truth) = generate_replicate(spec, n, base_seed, r)?;
                    let true_r2 = true_r2_of(spec, &truth)?;
                    let inf = match crate::r2::estimate(&d) {
                        Ok(inf) => inf,
                        Err(Error::SingularDesign) => return Ok(RepOutcome::Singular),
                        Err(e) => {
                            return Err(Error::Replicate {
                                n,
                                replicate: r,
                                source: Box::new(e),
                            })
                        }
                    };
                    let ci = crate::r2::confidence_interval(&inf, delta, quantile_kind)
                        .map_err(|e| Error::Replicate {
                            n,
                            replicate: r,
                            source: Box::new(e),
                        })?;
                    Ok(RepOutcome::Ok {
                        hit: ci.contains(true_r2),
                        width: ci.width(),
                        v_hat: inf.v_hat,
                    })
                })
                .collect()
        })?;

        // Sequential aggregation in replicate order keeps float sums
        // independent of scheduling.
        let mut hits = 0usize;
        let mut excluded = 0usize;
        let mut width_sum = 0.0;
        let mut vhat_sum = 0.0;
        for outcome in outcomes {
            match outcome? {
                RepOutcome::Ok { hit, width, v_hat } => {
                    if hit {
                        hits += 1;
                    }
                    width_sum += width;
                    vhat_sum += v_hat;
                }
                RepOutcome::Singular => excluded += 1,
            }
        }
        let effective = reps - excluded;
        let ef = effective.max(1) as f64;
        cells.push(CoverageCell {
            n,
            coverage: hits as f64 / ef,
            reps,
            excluded,
            mean_width: width_sum / ef,
            mean_vhat: vhat_sum / ef,
        });
    }

    Ok(CoverageReport {
        model: spec.key().to_string(),
        delta,
        quantile_kind,
        base_seed: base_seed.0,
        cells,
    })
}

/// Returns `(mean V̂, empirical variance of √n(R̂² − R²))` over replicates:
/// the two quantities estimate the same limit, and their ratio is the
/// calibration diagnostic for the variance estimator.
pub fn variance_calibration(
    spec: &ModelSpec,
    n: usize,
    reps: usize,
    base_seed: Seed,
    workers: Option<usize>,
) -> Result<(f64, f64)> {
    if reps < 100 {
        return Err(Error::Domain(format!(
            "reps = {} below the minimum of 100",
            reps
        )));
    }
    let outcomes: Vec<Result<(f64, f64)>> = with_pool(workers, || {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| -> Result<(f64, f64)> {
                let (d, truth) = generate_replicate(spec, n, base_seed, r)?;
                let true_r2 = true_r2_of(spec, &truth)?;
                let inf = crate::r2::estimate(&d).map_err(|e| Error::Replicate {
                    n,
                    replicate: r,
                    source: Box::new(e),
                })?;
                let dev = (n as f64).sqrt() * (inf.r2_hat - true_r2);
                Ok((inf.v_hat, dev))
            })
            .collect()
    })?;

    let mut vhat_sum = 0.0;
    let mut devs = Vec::with_capacity(reps);
    for o in outcomes {
        let (v, dev) = o?;
        vhat_sum += v;
        devs.push(dev);
    }
    let mean_vhat = vhat_sum / reps as f64;
    let empirical = crate::data::empirical_var(&devs);
    Ok((mean_vhat, empirical))
}

/// Runs the screening benchmark: per replicate, generate the screening
/// design, screen at rate `q`, and aggregate TPR/FPR/|M̂| and the per-index
/// selection rates of the 14 true-support columns.
pub fn screening_experiment(
    q: f64,
    n: usize,
    reps: usize,
    base_seed: Seed,
    workers: Option<usize>,
) -> Result<ScreeningReport> {
    if reps < 1 {
        return Err(Error::Domain("reps must be at least 1".to_string()));
    }
    let spec = ModelSpec::ScreeningDesign;
    let results: Vec<Result<(screening::ScreeningResult, screening::ScreeningMetrics)>> =
        with_pool(workers, || {
            (0..reps as u64)
                .into_par_iter()
                .map(|r| {
                    let (d, truth) = generate_replicate(&spec, n, base_seed, r)?;
                    let support: BTreeSet<usize> = truth.true_support.unwrap();
                    let res = screening::screen(&d, q).map_err(|e| Error::Replicate {
                        n,
                        replicate: r,
                        source: Box::new(e),
                    })?;
                    let metrics = screening::evaluate(&res, &support, d.p())?;
                    Ok((res, metrics))
                })
                .collect()
        })?;

    let mut all = Vec::with_capacity(reps);
    let mut fpr_sum = 0.0;
    let mut size_sum = 0.0;
    for r in results {
        let (res, metrics) = r?;
        fpr_sum += metrics.fpr;
        size_sum += metrics.selected_size as f64;
        all.push(res);
    }
    let indices: Vec<usize> = (0..14).collect();
    let per_index_rates = screening::per_index_rates(&all, &indices);
    let tpr = per_index_rates.iter().sum::<f64>() / per_index_rates.len() as f64;

    Ok(ScreeningReport {
        per_index_rates,
        tpr,
        fpr: fpr_sum / reps as f64,
        mean_selected: size_sum / reps as f64,
        q,
        n,
        reps,
        base_seed: base_seed.0,
    })
}

impl CoverageReport {
    /// Serializes the report with deterministic key order and float format.
    pub fn to_json(&self) -> Json {
        Json::object(vec![
            ("model", Json::Str(self.model.clone())),
            ("delta", Json::Float(self.delta)),
            (
                "quantile",
                Json::Str(
                    match self.quantile_kind {
                        QuantileKind::Normal => "normal",
                        QuantileKind::Student => "student",
                    }
                    .to_string(),
                ),
            ),
            ("seed", Json::Int(self.base_seed as i64)),
            (
                "cells",
                Json::Array(
                    self.cells
                        .iter()
                        .map(|c| {
                            Json::object(vec![
                                ("n", Json::Int(c.n as i64)),
                                ("coverage", Json::Float(c.coverage)),
                                ("reps", Json::Int(c.reps as i64)),
                                ("excluded", Json::Int(c.excluded as i64)),
                                ("mean_width", Json::Float(c.mean_width)),
                                ("mean_vhat", Json::Float(c.mean_vhat)),
                            ])
                        })
                        .collect(),
                ),
            ),
        ])
    }

    /// Renders an aligned text table with one column per `n` and a single
    /// coverage row, mirroring the usual presentation of coverage studies.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "model: {}   level: {:.3}   reps: {}\n",
            self.model,
            1.0 - self.delta,
            self.cells.first().map(|c| c.reps).unwrap_or(0)
        ));
        let mut header = String::from("n        ");
        let mut cov = String::from("coverage ");
        let mut width = String::from("width    ");
        for c in &self.cells {
            header.push_str(&format!("{:>10}", c.n));
            cov.push_str(&format!("{:>10.3}", c.coverage));
            width.push_str(&format!("{:>10.4}", c.mean_width));
        }
        out.push_str(&header);
        out.push('\n');
        out.push_str(&cov);
        out.push('\n');
        out.push_str(&width);
        out.push('\n');
        out
    }
}

impl ScreeningReport {
    pub fn to_json(&self) -> Json {
        Json::object(vec![
            ("q", Json::Float(self.q)),
            ("n", Json::Int(self.n as i64)),
            ("reps", Json::Int(self.reps as i64)),
            ("seed", Json::Int(self.base_seed as i64)),
            ("tpr", Json::Float(self.tpr)),
            ("fpr", Json::Float(self.fpr)),
            ("mean_selected", Json::Float(self.mean_selected)),
            ("per_index_rates", Json::floats(&self.per_index_rates)),
        ])
    }

    /// Renders the per-index selection rates R₁..R₁₄ plus the aggregate row.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "q: {:.2}   n: {}   reps: {}\n",
            self.q, self.n, self.reps
        ));
        let mut header = String::from("index ");
        let mut rates = String::from("rate  ");
        for (i, r) in self.per_index_rates.iter().enumerate() {
            header.push_str(&format!("{:>7}", format!("R{}", i + 1)));
            rates.push_str(&format!("{:>7.3}", r));
        }
        out.push_str(&header);
        out.push('\n');
        out.push_str(&rates);
        out.push('\n');
        out.push_str(&format!(
            "TPR {:.3}   FPR {:.3}   mean |M| {:.1}\n",
            self.tpr, self.fpr, self.mean_selected
        ));
        out
    }
}
