//! Dense matrix arithmetic, symmetric positive-definite solves and
//! distribution quantile functions.
//!
//! Every matrix that needs inversion in this crate is a Gram matrix, so all
//! solves go through Cholesky; a failed factorization is reported as
//! [`Error::NotPositiveDefinite`] rather than patched up with a pseudo-inverse.

mod special;

pub use special::{
    chi_square_sf, ln_gamma, normal_cdf, normal_pdf, normal_quantile, reg_inc_beta,
    student_cdf, student_pdf, student_quantile,
};

use crate::error::{Error, Result};
use std::ops::{Index, IndexMut};

/// Dense real matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    /// Build from a flat row-major slice.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut s = 0.0;
            for j in 0..self.cols {
                s += self[(i, j)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                m = m.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        m
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵗ = a`.
///
/// Fails with [`Error::NotPositiveDefinite`] when a pivot drops below
/// `rows × machine-epsilon × max-diagonal`, the scale-aware singularity
/// threshold for Gram matrices.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Domain(format!(
            "cholesky requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let scale = a.max_abs();
    if a.max_asymmetry() > 1e-10 * scale.max(1e-300) {
        return Err(Error::Domain("matrix is not symmetric".to_string()));
    }
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(a[(i, i)].abs()));
    let tol = n as f64 * f64::EPSILON * max_diag;
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= tol {
            return Err(Error::NotPositiveDefinite);
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(l)
}

/// Solve `a x = b` for SPD `a` given its Cholesky factor.
pub fn chol_solve_vec(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.rows();
    let mut x = b.to_vec();
    // forward: L z = b
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    // backward: Lᵗ x = z
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solve `a x = b` for a symmetric positive-definite `a` and a vector `b`.
pub fn solve_spd_vec(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(Error::Domain("right-hand side length mismatch".to_string()));
    }
    let l = cholesky(a)?;
    Ok(chol_solve_vec(&l, b))
}

/// Solve `a X = B` column by column for a symmetric positive-definite `a`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if b.rows() != a.rows() {
        return Err(Error::Domain("right-hand side dimension mismatch".to_string()));
    }
    let l = cholesky(a)?;
    let mut out = Matrix::zeros(b.rows(), b.cols());
    for j in 0..b.cols() {
        let col = b.column(j);
        let x = chol_solve_vec(&l, &col);
        for i in 0..b.rows() {
            out[(i, j)] = x[i];
        }
    }
    Ok(out)
}

/// Inverse of a symmetric positive-definite matrix.
pub fn invert_spd(a: &Matrix) -> Result<Matrix> {
    solve_spd(a, &Matrix::identity(a.rows()))
}

/// Correlation matrix with entry `(i, j) = rho^|i-j|`.
pub fn toeplitz_corr(rho: f64, d: usize) -> Result<Matrix> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("toeplitz_corr requires |rho| < 1, got {rho}")));
    }
    if d == 0 {
        return Err(Error::Domain("toeplitz_corr requires d >= 1".to_string()));
    }
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            m[(i, j)] = rho.powi((i as i32 - j as i32).abs());
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn frobenius(a: &Matrix) -> f64 {
        a.data().iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn cholesky_identity() {
        let l = cholesky(&Matrix::identity(3)).unwrap();
        assert_eq!(l, Matrix::identity(3));
    }

    #[test]
    fn cholesky_2x2() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 5.0]]);
        let l = cholesky(&a).unwrap();
        let expected = Matrix::from_rows(&[vec![2.0, 0.0], vec![1.0, 2.0]]);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(l[(i, j)], expected[(i, j)], epsilon = 1e-12);
            }
        }
        // reconstruction check
        let prod = l.matmul(&l.transpose());
        let mut diff = a.clone();
        for i in 0..2 {
            for j in 0..2 {
                diff[(i, j)] -= prod[(i, j)];
            }
        }
        assert!(frobenius(&diff) / frobenius(&a) < 1e-9);
    }

    #[test]
    fn cholesky_rank_deficient() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(cholesky(&a), Err(Error::NotPositiveDefinite)));
    }

    #[test]
    fn cholesky_rejects_asymmetric() {
        let a = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.1, 1.0]]);
        assert!(matches!(cholesky(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn solve_identity_and_diagonal() {
        let x = solve_spd_vec(&Matrix::identity(3), &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x, vec![1.0, 2.0, 3.0]);
        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = solve_spd_vec(&a, &[2.0, 8.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn solve_random_spd_residual() {
        // fixed 5x5 SPD built as G = B Bᵗ + 5 I
        let b = Matrix::from_rows(&[
            vec![1.3, -0.2, 0.7, 2.1, 0.4],
            vec![0.5, 1.1, -1.3, 0.2, 0.9],
            vec![-0.7, 0.3, 0.8, 1.5, -0.6],
            vec![2.2, -1.1, 0.1, 0.3, 1.7],
            vec![0.9, 0.8, -0.4, -1.2, 0.5],
        ]);
        let mut g = b.matmul(&b.transpose());
        for i in 0..5 {
            g[(i, i)] += 5.0;
        }
        let rhs = vec![1.0, -2.0, 3.0, 0.5, -0.25];
        let x = solve_spd_vec(&g, &rhs).unwrap();
        let ax = g.mul_vec(&x);
        let num: f64 = ax
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let den: f64 = rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(num / den < 1e-8);
    }

    #[test]
    fn invert_spd_cases() {
        let inv = invert_spd(&Matrix::identity(4)).unwrap();
        assert_eq!(inv, Matrix::identity(4));

        let a = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 0.5]]);
        let inv = invert_spd(&a).unwrap();
        assert_abs_diff_eq!(inv[(0, 0)], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(inv[(1, 1)], 2.0, epsilon = 1e-14);

        // 4x4 SPD: product with original within 1e-8 of identity
        let b = Matrix::from_rows(&[
            vec![1.0, 0.4, -0.2, 0.6],
            vec![-0.5, 1.2, 0.3, 0.1],
            vec![0.7, -0.8, 1.4, 0.2],
            vec![0.3, 0.5, -0.1, 1.1],
        ]);
        let mut g = b.matmul(&b.transpose());
        for i in 0..4 {
            g[(i, i)] += 1.0;
        }
        let inv = invert_spd(&g).unwrap();
        let prod = inv.matmul(&g);
        let mut diff = prod.clone();
        for i in 0..4 {
            diff[(i, i)] -= 1.0;
        }
        assert!(frobenius(&diff) < 1e-8);
    }

    #[test]
    fn toeplitz_entries_and_pd() {
        let t = toeplitz_corr(0.0, 3).unwrap();
        assert_eq!(t, Matrix::identity(3));

        let t = toeplitz_corr(0.57, 5).unwrap();
        assert_abs_diff_eq!(t[(0, 2)], 0.3249, epsilon = 1e-12);
        assert_abs_diff_eq!(t[(2, 0)], 0.3249, epsilon = 1e-12);

        let t = toeplitz_corr(0.7, 10).unwrap();
        assert!(cholesky(&t).is_ok());
    }

    #[test]
    fn toeplitz_pd_large() {
        for &(rho, d) in &[(0.95, 1000), (-0.95, 1000), (0.5, 250)] {
            let t = toeplitz_corr(rho, d).unwrap();
            assert!(cholesky(&t).is_ok(), "rho={rho} d={d}");
        }
    }

    #[test]
    fn toeplitz_domain() {
        assert!(toeplitz_corr(1.0, 3).is_err());
        assert!(toeplitz_corr(0.5, 0).is_err());
    }
}
