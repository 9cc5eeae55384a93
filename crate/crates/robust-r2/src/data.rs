//! Dataset container, CSV ingestion, and centered/empirical-moment utilities
//! shared by all inference modules.
//!
//! Every empirical variance or covariance in this crate divides by `n`, never
//! `n - 1`: the asymptotic variance formulas implemented downstream are
//! derived under that convention, and mixing divisors would silently shift
//! the estimated variances.

use std::collections::HashSet;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// An immutable data table: a response vector `y` of length `n` and a design
/// matrix `x` of shape `n × p` (no intercept column), with `p` column labels.
///
/// Invariant: `n >= 2` and all entries finite. Consumers that fit the full
/// joint design additionally require `n >= p + 2` (see [`crate::ols::fit`]);
/// the floor is not imposed at construction because per-column procedures
/// such as screening legitimately operate with `p > n`. Zero response
/// variance is likewise checked lazily by the consumers that require it.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    x: Matrix,
    names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from a response vector, a design matrix and column
    /// labels, validating shapes, finiteness and the `n >= p + 2` floor.
    pub fn new(y: Vec<f64>, x: Matrix, names: Vec<String>) -> Result<Self> {
        let n = y.len();
        let p = x.cols();
        if x.rows() != n {
            return Err(Error::Domain(format!(
                "response has {} rows but design has {}",
                n,
                x.rows()
            )));
        }
        if names.len() != p {
            return Err(Error::Domain(format!(
                "{} column names for {} design columns",
                names.len(),
                p
            )));
        }
        if n < 2 {
            return Err(Error::TooFewRows { n, p });
        }
        if y.iter().any(|v| !v.is_finite()) || x.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite entry in dataset".to_string()));
        }
        Ok(Dataset { y, x, names })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Number of explanatory variables (excluding the intercept).
    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// The response vector.
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// The `n × p` design matrix (no intercept column).
    pub fn x(&self) -> &Matrix {
        &self.x
    }

    /// Column labels, in design order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Extracts design column `j` as a vector.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.x.column(j)
    }

    /// Returns a new dataset with design column `j` removed.
    pub fn without_column(&self, j: usize) -> Result<Self> {
        if j >= self.p() {
            return Err(Error::Domain(format!(
                "column index {} out of range for p = {}",
                j,
                self.p()
            )));
        }
        let n = self.n();
        let p = self.p();
        let mut x = Matrix::zeros(n, p - 1);
        for i in 0..n {
            let mut c = 0;
            for k in 0..p {
                if k != j {
                    x[(i, c)] = self.x[(i, k)];
                    c += 1;
                }
            }
        }
        let names = self
            .names
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != j)
            .map(|(_, s)| s.clone())
            .collect();
        Dataset::new(self.y.clone(), x, names)
    }

    /// Reads a dataset from a CSV file. The first row must be a header; every
    /// cell must be numeric; `response_column` names the column extracted as
    /// the response, the remaining columns become the design in header order.
    pub fn from_csv_path<P: AsRef<Path>>(path: P, response_column: &str) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, response_column)
    }

    /// As [`Dataset::from_csv_path`], reading from any byte stream.
    pub fn from_csv_reader<R: Read>(reader: R, response_column: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);

        let headers: Vec<String> = rdr
            .headers()
            .map_err(csv_error)?
            .iter()
            .map(|s| s.to_string())
            .collect();
        let resp_idx = headers
            .iter()
            .position(|h| h == response_column)
            .ok_or_else(|| Error::MissingColumn(response_column.to_string()))?;

        let ncols = headers.len();
        let mut y = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        // Line 1 is the header, so data line numbers start at 2.
        for (rec_idx, record) in rdr.records().enumerate() {
            let line = rec_idx + 2;
            let record = record.map_err(csv_error)?;
            if record.len() != ncols {
                return Err(Error::Parse {
                    line,
                    column: record.len(),
                    message: format!("expected {} fields, found {}", ncols, record.len()),
                });
            }
            let mut row = Vec::with_capacity(ncols - 1);
            for (col_idx, cell) in record.iter().enumerate() {
                let value: f64 = cell.parse().map_err(|_| Error::Parse {
                    line,
                    column: col_idx + 1,
                    message: format!("cannot parse {:?} as a number", cell),
                })?;
                if !value.is_finite() {
                    return Err(Error::Parse {
                        line,
                        column: col_idx + 1,
                        message: format!("non-finite value {:?}", cell),
                    });
                }
                if col_idx == resp_idx {
                    y.push(value);
                } else {
                    row.push(value);
                }
            }
            rows.push(row);
        }

        let n = y.len();
        let p = ncols - 1;
        let mut x = Matrix::zeros(n, p);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                x[(i, j)] = *v;
            }
        }
        let names = headers
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != resp_idx)
            .map(|(_, s)| s.clone())
            .collect();
        Dataset::new(y, x, names)
    }

    /// Writes the dataset as CSV with the response in the first column. Floats
    /// are emitted with 17 significant digits so that a read-back via
    /// [`Dataset::from_csv_reader`] reproduces every value bit-exactly.
    pub fn to_csv<W: std::io::Write>(&self, writer: W, response_name: &str) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec![response_name.to_string()];
        header.extend(self.names.iter().cloned());
        wtr.write_record(&header).map_err(csv_error)?;
        for i in 0..self.n() {
            let mut record = Vec::with_capacity(self.p() + 1);
            record.push(format_float(self.y[i]));
            for j in 0..self.p() {
                record.push(format_float(self.x[(i, j)]));
            }
            wtr.write_record(&record).map_err(csv_error)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Centers the response and every design column, recording the removed
    /// means (design means first, response mean last).
    pub fn center(&self) -> CenteredView {
        let n = self.n();
        let p = self.p();
        let y_mean = mean(&self.y);
        let y0 = self.y.iter().map(|v| v - y_mean).collect();
        let mut x0 = Matrix::zeros(n, p);
        let mut means = Vec::with_capacity(p + 1);
        for j in 0..p {
            let mut m = 0.0;
            for i in 0..n {
                m += self.x[(i, j)];
            }
            m /= n as f64;
            means.push(m);
            for i in 0..n {
                x0[(i, j)] = self.x[(i, j)] - m;
            }
        }
        means.push(y_mean);
        CenteredView { y0, x0, means }
    }
}

/// The centered companion of a [`Dataset`]: `y0 = Y - Ȳ`, `x0` the design
/// with column means removed, and the means that were subtracted (the `p`
/// design means followed by the response mean).
#[derive(Debug, Clone)]
pub struct CenteredView {
    pub y0: Vec<f64>,
    pub x0: Matrix,
    pub means: Vec<f64>,
}

/// Formats a float with 17 significant digits, enough for an exact
/// decimal-to-binary round trip of any `f64`.
pub fn format_float(v: f64) -> String {
    format!("{:.16e}", v)
}

fn csv_error(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = e.into_kind() {
                Error::Io(io)
            } else {
                unreachable!()
            }
        }
        _ => {
            let line = e
                .position()
                .map(|pos| pos.line() as usize)
                .unwrap_or_default();
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        }
    }
}

/// Arithmetic mean of a slice.
pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Empirical variance with divisor `n`: `(1/n) Σ (v_i − v̄)²`.
pub fn empirical_var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

/// Empirical covariance with divisor `n`: `(1/n) Σ (u_i − ū)(v_i − v̄)`.
pub fn empirical_cov(u: &[f64], v: &[f64]) -> f64 {
    assert_eq!(u.len(), v.len(), "covariance of unequal-length vectors");
    let mu = mean(u);
    let mv = mean(v);
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - mu) * (b - mv))
        .sum::<f64>()
        / u.len() as f64
}

/// Validates that a set of indices are distinct, sorted and within `0..p`.
pub fn check_index_set(indices: &[usize], p: usize) -> Result<()> {
    let mut seen = HashSet::new();
    for &i in indices {
        if i >= p {
            return Err(Error::Domain(format!(
                "index {} out of range for p = {}",
                i, p
            )));
        }
        if !seen.insert(i) {
            return Err(Error::Domain(format!("duplicate index {}", i)));
        }
    }
    Ok(())
}
