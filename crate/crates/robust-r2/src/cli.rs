//! Command-line surface binding ingestion, inference, screening and
//! simulation into reproducible invocations.
//!
//! Every subcommand prints a machine-readable JSON document to standard
//! output (`--format table` switches to aligned text). All randomness flows
//! from the `--seed` flag — there is no wall-clock seeding anywhere — so a
//! given invocation is byte-identical across runs and worker counts.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::jsonout::Json;
use crate::montecarlo;
use crate::r2::QuantileKind;
use crate::simgen::{generate, ModelSpec, Seed};

/// Robust asymptotic inference for the multiple correlation coefficient.
#[derive(Debug, Parser)]
#[command(name = "robust-r2", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantile {
    Student,
    Normal,
}

impl From<Quantile> for QuantileKind {
    fn from(q: Quantile) -> Self {
        match q {
            Quantile::Student => QuantileKind::Student,
            Quantile::Normal => QuantileKind::Normal,
        }
    }
}

#[derive(Debug, Args)]
pub struct CommonIo {
    /// Input CSV file (header row required, all cells numeric).
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    pub response: String,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Confidence interval for the multiple correlation coefficient R².
    Ci {
        #[command(flatten)]
        io: CommonIo,
        /// Risk level δ; the interval has level 1 − δ.
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Quantile family for the half-width.
        #[arg(long, value_enum, default_value = "student")]
        quantile: Quantile,
    },
    /// Joint inference for the individual (per-column) R²'s.
    Joint {
        #[command(flatten)]
        io: CommonIo,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        /// Product-feature subsets as 1-based column lists, e.g. "1;2;1,2".
        #[arg(long)]
        subsets: Option<String>,
        /// Known column means for product-feature centering, e.g. "0,0.5".
        #[arg(long)]
        means: Option<String>,
    },
    /// Squared partial correlation of two columns given confounders.
    Partial {
        /// Input CSV file.
        #[arg(long)]
        data: PathBuf,
        /// Column name of the first variable.
        #[arg(long)]
        x: String,
        /// Column name of the second variable.
        #[arg(long)]
        y: String,
        /// Comma-separated confounder column names (may be empty).
        #[arg(long, default_value = "")]
        z: String,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long, value_enum, default_value = "student")]
        quantile: Quantile,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Studentized marginal screening of all columns.
    Screen {
        #[command(flatten)]
        io: CommonIo,
        /// Expected per-column false-positive rate.
        #[arg(long, default_value_t = 0.15)]
        q: f64,
    },
    /// Generates a simulated dataset and writes CSV plus ground-truth JSON.
    Simulate {
        /// Model key (e.g. gaussian-linear, poisson-count, screening-design).
        #[arg(long)]
        model: String,
        /// Number of rows.
        #[arg(long)]
        n: usize,
        /// Seed.
        #[arg(long)]
        seed: u64,
        /// Output CSV path; the ground truth goes to "<out>.json".
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo coverage experiment for the R² confidence interval.
    Coverage {
        #[arg(long)]
        model: String,
        /// Comma-separated sample sizes, e.g. "200,500,1000".
        #[arg(long, value_name = "N1,N2,...")]
        n_list: String,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        #[arg(long, default_value_t = 0.05)]
        delta: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "student")]
        quantile: Quantile,
        /// Worker pool size (default: ROBUST_R2_WORKERS or the CPU count).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Monte Carlo screening benchmark on the 1000-column design.
    ScreeningBench {
        #[arg(long, default_value_t = 0.15)]
        q: f64,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        /// Worker pool size (default: ROBUST_R2_WORKERS or the CPU count).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
}

/// Maps an error to its exit-code class: 2 for data problems, 3 for
/// numerical problems, 1 for everything user-correctable.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::MissingColumn(_)
        | Error::TooFewRows { .. }
        | Error::DegenerateResponse
        | Error::DegenerateColumn(_)
        | Error::DegenerateResiduals
        | Error::Io(_) => 2,
        Error::SingularDesign
        | Error::SingularSubcovariance
        | Error::NotPositiveDefinite
        | Error::Numerical(_) => 3,
        Error::Replicate { source, .. } => exit_code(source),
        Error::Domain(_) => 1,
    }
}

fn resolve_workers(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("ROBUST_R2_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::Domain(format!("cannot parse {} entry {:?}", what, t)))
        })
        .collect()
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Domain(format!("cannot parse {} entry {:?}", what, t)))
        })
        .collect()
}

/// Parses "1;2;1,2" into 0-based index sets.
fn parse_subsets(s: &str, p: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for group in s.split(';').filter(|g| !g.trim().is_empty()) {
        let one_based = parse_usize_list(group, "subset")?;
        let mut set = Vec::with_capacity(one_based.len());
        for i in one_based {
            if i == 0 || i > p {
                return Err(Error::Domain(format!(
                    "subset index {} out of range 1..={}",
                    i, p
                )));
            }
            set.push(i - 1);
        }
        set.sort_unstable();
        out.push(set);
    }
    Ok(out)
}

fn ci_json(ci: &crate::r2::ConfidenceInterval) -> Json {
    Json::object(vec![
        ("lower", Json::Float(ci.lower)),
        ("upper", Json::Float(ci.upper)),
        ("lower_clipped", Json::Float(ci.lower_clipped)),
        ("upper_clipped", Json::Float(ci.upper_clipped)),
        ("level", Json::Float(ci.level)),
        (
            "quantile",
            Json::Str(
                match ci.quantile_kind {
                    QuantileKind::Normal => "normal",
                    QuantileKind::Student => "student",
                }
                .to_string(),
            ),
        ),
    ])
}

/// Executes a parsed invocation and returns the rendered stdout payload.
pub fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Ci {
            io,
            delta,
            quantile,
        } => {
            let d = Dataset::from_csv_path(&io.data, &io.response)?;
            let inf = crate::r2::estimate(&d)?;
            let ci = crate::r2::confidence_interval(&inf, delta, quantile.into())?;
            let degeneracy = crate::r2::degeneracy_check(&inf, crate::r2::DEGENERACY_TOL);
            match io.format {
                Format::Json => Ok(Json::object(vec![
                    ("r2_hat", Json::Float(inf.r2_hat)),
                    ("v_hat", Json::Float(inf.v_hat)),
                    ("n", Json::Int(inf.n as i64)),
                    ("p", Json::Int(d.p() as i64)),
                    ("degeneracy", Json::Str(degeneracy.as_str().to_string())),
                    ("ci", ci_json(&ci)),
                ])
                .to_string()),
                Format::Table => Ok(format!(
                    "n {}   p {}\nR2      {:.6}\nV       {:.6}\nCI({:.0}%) [{:.6}, {:.6}]\nstatus  {}\n",
                    inf.n,
                    d.p(),
                    inf.r2_hat,
                    inf.v_hat,
                    100.0 * ci.level,
                    ci.lower,
                    ci.upper,
                    degeneracy.as_str()
                )),
            }
        }
        Command::Joint {
            io,
            delta,
            subsets,
            means,
        } => {
            let d = Dataset::from_csv_path(&io.data, &io.response)?;
            let j = crate::joint::individual_r2s(&d)?;
            let cis = crate::joint::marginal_cis(&j, delta)?;
            let product = match subsets {
                Some(s) => {
                    let sets = parse_subsets(&s, d.p())?;
                    let means_vec = match &means {
                        Some(m) => Some(parse_f64_list(m, "means")?),
                        None => None,
                    };
                    Some((
                        sets.clone(),
                        crate::joint::product_feature_r2(&d, means_vec.as_deref(), &sets)?,
                    ))
                }
                None => None,
            };
            match io.format {
                Format::Json => {
                    let mut fields = vec![
                        ("n", Json::Int(j.n as i64)),
                        ("p", Json::Int(d.p() as i64)),
                        ("r2_individual", Json::floats(&j.r2_individual)),
                        (
                            "cis",
                            Json::Array(cis.iter().map(ci_json).collect()),
                        ),
                        (
                            "cov_hat",
                            Json::Array(
                                (0..j.cov_hat.rows())
                                    .map(|r| Json::floats(j.cov_hat.row(r)))
                                    .collect(),
                            ),
                        ),
                    ];
                    if let Some((sets, values)) = product {
                        fields.push((
                            "product_subsets",
                            Json::Array(
                                sets.iter()
                                    .map(|s| Json::ints(s.iter().map(|i| i + 1)))
                                    .collect(),
                            ),
                        ));
                        fields.push(("product_r2", Json::floats(&values)));
                    }
                    Ok(Json::object(fields).to_string())
                }
                Format::Table => {
                    let mut out = format!("n {}   p {}\n", j.n, d.p());
                    out.push_str("column       R2(k)      lower      upper\n");
                    for (k, ci) in cis.iter().enumerate() {
                        out.push_str(&format!(
                            "{:<10}{:>10.4}{:>11.4}{:>11.4}\n",
                            d.names()[k],
                            j.r2_individual[k],
                            ci.lower,
                            ci.upper
                        ));
                    }
                    if let Some((sets, values)) = product {
                        out.push_str("product subsets:\n");
                        for (s, v) in sets.iter().zip(&values) {
                            let labels: Vec<String> =
                                s.iter().map(|i| (i + 1).to_string()).collect();
                            out.push_str(&format!(
                                "  {{{}}}  {:.4}\n",
                                labels.join(","),
                                v
                            ));
                        }
                    }
                    Ok(out)
                }
            }
        }
        Command::Partial {
            data,
            x,
            y,
            z,
            delta,
            quantile,
            format,
        } => {
            // Load with the y-column as the response so every other column is
            // available as a design column.
            let d = Dataset::from_csv_path(&data, &y)?;
            let z_cols: Vec<String> = z
                .split(',')
                .filter(|t| !t.trim().is_empty())
                .map(|t| t.trim().to_string())
                .collect();
            let inf = crate::partial::partial_r2_from_dataset(&d, &x, "__response__", &z_cols)?;
            let ci = crate::partial::partial_r2_ci(&inf, delta, quantile.into())?;
            match format {
                Format::Json => Ok(Json::object(vec![
                    ("r2_partial", Json::Float(inf.r2_partial)),
                    ("alpha_hat", Json::Float(inf.alpha_hat)),
                    ("theta_hat", Json::Float(inf.theta_hat)),
                    ("v_hat", Json::Float(inf.v_hat)),
                    ("n", Json::Int(inf.n as i64)),
                    ("ci", ci_json(&ci)),
                ])
                .to_string()),
                Format::Table => Ok(format!(
                    "n {}\npartial R2 {:.6}\nV          {:.6}\nCI({:.0}%)  [{:.6}, {:.6}]\n",
                    inf.n,
                    inf.r2_partial,
                    inf.v_hat,
                    100.0 * ci.level,
                    ci.lower,
                    ci.upper
                )),
            }
        }
        Command::Screen { io, q } => {
            let d = Dataset::from_csv_path(&io.data, &io.response)?;
            let r = crate::screening::screen(&d, q)?;
            match io.format {
                Format::Json => Ok(Json::object(vec![
                    ("q", Json::Float(q)),
                    ("threshold", Json::Float(r.threshold)),
                    ("n", Json::Int(d.n() as i64)),
                    ("p", Json::Int(d.p() as i64)),
                    // 1-based positions among the design columns.
                    ("selected", Json::ints(r.selected.iter().map(|j| j + 1))),
                    ("statistics", Json::floats(&r.statistics)),
                ])
                .to_string()),
                Format::Table => {
                    let mut out = format!(
                        "q {:.3}   threshold {:.4}   selected {}/{}\n",
                        q,
                        r.threshold,
                        r.selected.len(),
                        d.p()
                    );
                    out.push_str("column     statistic\n");
                    for &j in &r.selected {
                        let s = r.statistics[j];
                        if s.is_finite() {
                            out.push_str(&format!("{:<10}{:>10.4}\n", d.names()[j], s));
                        } else {
                            out.push_str(&format!("{:<10}{:>10}\n", d.names()[j], "inf"));
                        }
                    }
                    Ok(out)
                }
            }
        }
        Command::Simulate {
            model,
            n,
            seed,
            out,
        } => {
            let spec = ModelSpec::from_key(&model)?;
            let (d, truth) = generate(&spec, n, Seed(seed))?;
            let file = std::fs::File::create(&out)?;
            d.to_csv(file, "y")?;
            let truth_json = Json::object(vec![
                ("model", Json::Str(spec.key().to_string())),
                ("n", Json::Int(n as i64)),
                ("seed", Json::Int(seed as i64)),
                (
                    "true_r2",
                    truth.true_r2.map(Json::Float).unwrap_or(Json::Null),
                ),
                (
                    "true_alpha",
                    truth
                        .true_alpha
                        .as_ref()
                        .map(|a| Json::floats(a))
                        .unwrap_or(Json::Null),
                ),
                (
                    "true_support",
                    truth
                        .true_support
                        .as_ref()
                        .map(|s: &BTreeSet<usize>| Json::ints(s.iter().map(|j| j + 1)))
                        .unwrap_or(Json::Null),
                ),
            ]);
            let sidecar = out.with_extension(match out.extension() {
                Some(e) => format!("{}.json", e.to_string_lossy()),
                None => "json".to_string(),
            });
            std::fs::write(&sidecar, truth_json.to_string())?;
            Ok(Json::object(vec![
                ("written", Json::Str(out.display().to_string())),
                ("ground_truth", Json::Str(sidecar.display().to_string())),
                ("n", Json::Int(n as i64)),
                ("p", Json::Int(d.p() as i64)),
            ])
            .to_string())
        }
        Command::Coverage {
            model,
            n_list,
            reps,
            delta,
            seed,
            quantile,
            workers,
            format,
        } => {
            let spec = ModelSpec::from_key(&model)?;
            let ns = parse_usize_list(&n_list, "n-list")?;
            if ns.is_empty() {
                return Err(Error::Domain("empty n-list".to_string()));
            }
            let report = montecarlo::coverage_experiment(
                &spec,
                &ns,
                reps,
                delta,
                quantile.into(),
                Seed(seed),
                resolve_workers(workers),
            )?;
            Ok(match format {
                Format::Json => report.to_json().to_string(),
                Format::Table => report.to_table(),
            })
        }
        Command::ScreeningBench {
            q,
            n,
            reps,
            seed,
            workers,
            format,
        } => {
            let report = montecarlo::screening_experiment(
                q,
                n,
                reps,
                Seed(seed),
                resolve_workers(workers),
            )?;
            Ok(match format {
                Format::Json => report.to_json().to_string(),
                Format::Table => report.to_table(),
            })
        }
    }
}
