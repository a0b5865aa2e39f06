//! Dense least-squares machinery built around a Householder QR with
//! column-norm pivoting.
//!
//! Every solve in the crate goes through [`PivotedQr`]; nothing forms an
//! explicit inverse of a cross-product matrix. The numerical rank is the
//! number of diagonal entries of `R` above `max(T, k) * eps * |R_00|`.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

/// Dense real matrix, column-major storage.
pub type Matrix = DMatrix<f64>;

/// Build a matrix from row-major data, rejecting NaN and infinities.
pub fn matrix_from_rows(rows: usize, cols: usize, data: &[f64]) -> Result<Matrix> {
    if data.len() != rows * cols {
        return Err(Error::DimensionMismatch(format!(
            "{} entries for a {rows}x{cols} matrix",
            data.len()
        )));
    }
    let m = Matrix::from_row_slice(rows, cols, data);
    check_finite(&m)?;
    Ok(m)
}

pub fn check_finite(m: &Matrix) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            if !m[(r, c)].is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Largest absolute entry.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Householder QR factorisation `A P = Q R` with column-norm pivoting.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    /// `R` on and above the diagonal, Householder vectors (unit leading
    /// entry implied) below it.
    factors: Matrix,
    tau: Vec<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    pub fn new(a: Matrix) -> Self {
        Self::with_reference_scale(a, 0.0)
    }

    /// Factorise `a`, measuring rank against `max(reference, |R_00|)`.
    ///
    /// A nonzero reference lets a partialled-out block be judged against the
    /// scale of the original regressors instead of its own (possibly tiny)
    /// scale.
    pub fn with_reference_scale(mut a: Matrix, reference: f64) -> Self {
        let (nrows, ncols) = a.shape();
        let steps = nrows.min(ncols);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..ncols).collect();
        let mut norms = vec![0.0; ncols];

        for j in 0..steps {
            {
                let data = a.as_slice();
                for (c, norm) in norms.iter_mut().enumerate().skip(j) {
                    let col = &data[c * nrows + j..(c + 1) * nrows];
                    *norm = col.iter().map(|v| v * v).sum();
                }
            }
            let mut best = j;
            for c in j + 1..ncols {
                if norms[c] > norms[best] {
                    best = c;
                }
            }
            if best != j {
                a.swap_columns(j, best);
                perm.swap(j, best);
            }

            let data = a.as_mut_slice();
            let head = j * nrows + j;
            let x0 = data[head];
            let norm = norms[best].sqrt();
            if norm == 0.0 {
                tau[j] = 0.0;
                continue;
            }
            let beta = if x0 >= 0.0 { -norm } else { norm };
            let scale = 1.0 / (x0 - beta);
            for v in &mut data[head + 1..(j + 1) * nrows] {
                *v *= scale;
            }
            let t = (beta - x0) / beta;
            tau[j] = t;
            data[head] = beta;

            for c in j + 1..ncols {
                let (left, right) = data.split_at_mut(c * nrows);
                let v = &left[head + 1..(j + 1) * nrows];
                let col = &mut right[j..nrows];
                let mut w = col[0];
                for (ci, vi) in col[1..].iter().zip(v) {
                    w += ci * vi;
                }
                w *= t;
                col[0] -= w;
                for (ci, vi) in col[1..].iter_mut().zip(v) {
                    *ci -= w * vi;
                }
            }
        }

        let r00 = if steps > 0 { a[(0, 0)].abs() } else { 0.0 };
        let tol = nrows.max(ncols) as f64 * f64::EPSILON * r00.max(reference);
        let rank = (0..steps)
            .take_while(|&j| a[(j, j)].abs() > tol)
            .count();

        Self {
            factors: a,
            tau,
            perm,
            rank,
        }
    }

    pub fn nrows(&self) -> usize {
        self.factors.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.factors.ncols()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.ncols()
    }

    /// Column permutation: pivoted column `j` is original column `perm[j]`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Absolute diagonal of `R`, in pivot order.
    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.nrows().min(self.ncols()))
            .map(|j| self.factors[(j, j)].abs())
            .collect()
    }

    /// Leading `rank x rank` block of `R`.
    pub fn r_factor(&self) -> Matrix {
        let r = self.rank;
        Matrix::from_fn(r, r, |i, j| if i <= j { self.factors[(i, j)] } else { 0.0 })
    }

    fn reflect(&self, j: usize, b: &mut Matrix) {
        let t = self.tau[j];
        if t == 0.0 {
            return;
        }
        let nrows = self.nrows();
        let v = &self.factors.as_slice()[j * nrows + j + 1..(j + 1) * nrows];
        let bn = b.nrows();
        let data = b.as_mut_slice();
        for c in 0..data.len() / bn {
            let col = &mut data[c * bn + j..(c + 1) * bn];
            let mut w = col[0];
            for (ci, vi) in col[1..].iter().zip(v) {
                w += ci * vi;
            }
            w *= t;
            col[0] -= w;
            for (ci, vi) in col[1..].iter_mut().zip(v) {
                *ci -= w * vi;
            }
        }
    }

    /// `b <- Q_r' b`, using the reflectors of the first `rank` pivots.
    pub fn apply_qt(&self, b: &mut Matrix) {
        debug_assert_eq!(b.nrows(), self.nrows());
        for j in 0..self.rank {
            self.reflect(j, b);
        }
    }

    /// `b <- Q_r b`.
    pub fn apply_q(&self, b: &mut Matrix) {
        debug_assert_eq!(b.nrows(), self.nrows());
        for j in (0..self.rank).rev() {
            self.reflect(j, b);
        }
    }

    /// Coordinates of the columns of `y` in the orthonormal basis of the
    /// column space: the first `rank` rows of `Q' y`.
    pub fn basis_coordinates(&self, y: &Matrix) -> Matrix {
        let mut w = y.clone();
        self.apply_qt(&mut w);
        w.rows(0, self.rank).into_owned()
    }

    /// `(I - P) y`: residuals after projecting on the column space.
    pub fn residuals(&self, y: &Matrix) -> Matrix {
        let mut w = y.clone();
        self.apply_qt(&mut w);
        w.rows_mut(0, self.rank).fill(0.0);
        self.apply_q(&mut w);
        w
    }

    /// Orthonormal basis of the column space (`T x rank`).
    pub fn thin_q(&self) -> Matrix {
        let mut q = Matrix::zeros(self.nrows(), self.rank);
        for j in 0..self.rank {
            q[(j, j)] = 1.0;
        }
        self.apply_q(&mut q);
        q
    }

    /// Least-squares coefficients of `y` on the factored matrix.
    pub fn solve(&self, y: &Matrix) -> Result<Matrix> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols: self.ncols(),
            });
        }
        let k = self.ncols();
        let mut w = self.basis_coordinates(y);
        back_substitute(&self.factors, k, &mut w);
        let mut out = Matrix::zeros(k, y.ncols());
        for (j, &orig) in self.perm.iter().enumerate() {
            out.row_mut(orig).copy_from(&w.row(j));
        }
        Ok(out)
    }

    /// `R^{-T} P' g` for a `k x m` matrix `g` of inner products with the
    /// original columns. Used to whiten scores against the Gram matrix.
    pub fn whiten_inner_products(&self, g: &Matrix) -> Result<Matrix> {
        if !self.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: self.rank,
                cols: self.ncols(),
            });
        }
        let k = self.ncols();
        let mut w = Matrix::zeros(k, g.ncols());
        for (j, &orig) in self.perm.iter().enumerate() {
            w.row_mut(j).copy_from(&g.row(orig));
        }
        // forward substitution with R'
        for c in 0..w.ncols() {
            for i in 0..k {
                let mut acc = w[(i, c)];
                for l in 0..i {
                    acc -= self.factors[(l, i)] * w[(l, c)];
                }
                w[(i, c)] = acc / self.factors[(i, i)];
            }
        }
        Ok(w)
    }
}

fn back_substitute(r: &Matrix, k: usize, w: &mut Matrix) {
    for c in 0..w.ncols() {
        for i in (0..k).rev() {
            let mut acc = w[(i, c)];
            for l in i + 1..k {
                acc -= r[(i, l)] * w[(l, c)];
            }
            w[(i, c)] = acc / r[(i, i)];
        }
    }
}

/// Result of a multivariate least-squares fit.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub coefficients: Matrix,
    pub residuals: Matrix,
}

/// Regress every column of `y` (`T x n`) on `x` (`T x k`).
pub fn ols_fit(y: &Matrix, x: &Matrix) -> Result<OlsFit> {
    if y.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "Y has {} rows, X has {}",
            y.nrows(),
            x.nrows()
        )));
    }
    if x.nrows() <= x.ncols() {
        return Err(Error::InsufficientData {
            needed: x.ncols(),
            got: x.nrows(),
        });
    }
    let qr = PivotedQr::new(x.clone());
    let coefficients = qr.solve(y)?;
    let residuals = y - x * &coefficients;
    Ok(OlsFit {
        coefficients,
        residuals,
    })
}

/// Orthogonal projector `X (X'X)^{-1} X'` onto the column space of `x`.
pub fn projection(x: &Matrix) -> Result<Matrix> {
    let qr = PivotedQr::new(x.clone());
    if !qr.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            cols: x.ncols(),
        });
    }
    let q = qr.thin_q();
    let p = &q * q.transpose();
    Ok((&p + p.transpose()) * 0.5)
}

/// Cross-product `A'A`, symmetrised.
pub fn gram(a: &Matrix) -> Matrix {
    let g = a.tr_mul(a);
    (&g + g.transpose()) * 0.5
}

/// Natural log of the determinant of a symmetric positive definite matrix.
pub fn log_det_spd(m: &Matrix) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        let d = l[(i, i)];
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        acc += d.ln();
    }
    Some(2.0 * acc)
}

/// Solve `m x = b` for symmetric positive definite `m`.
pub fn solve_spd(m: &Matrix, b: &Matrix) -> Option<Matrix> {
    Cholesky::new(m.clone()).map(|c| c.solve(b))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_8x3() -> Matrix {
        matrix_from_rows(
            8,
            3,
            &[
                1.0, 0.3, -1.2, 1.0, -0.7, 0.4, 1.0, 1.9, 0.8, 1.0, 0.2, -0.1, 1.0, -1.4, 2.2, 1.0,
                0.6, 0.9, 1.0, 2.3, -0.6, 1.0, -0.9, 1.5,
            ],
        )
        .unwrap()
    }

    #[test]
    fn ols_identity_target() {
        let x = Matrix::from_fn(6, 3, |i, j| if i % 3 == j { 1.0 + i as f64 } else { 0.0 });
        let fit = ols_fit(&x, &x).unwrap();
        assert!((fit.coefficients - Matrix::identity(3, 3)).abs().max() < 1e-12);
        assert!(fit.residuals.abs().max() < 1e-12);
    }

    #[test]
    fn intercept_only_gives_column_means() {
        let y = matrix_from_rows(4, 2, &[1.0, 10.0, 2.0, 20.0, 3.0, 30.0, 6.0, 0.0]).unwrap();
        let x = Matrix::from_element(4, 1, 1.0);
        let fit = ols_fit(&y, &x).unwrap();
        assert!((fit.coefficients[(0, 0)] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[(0, 1)] - 15.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_recovery_t6() {
        let x = matrix_from_rows(
            6,
            3,
            &[
                1.0, 0.5, -1.0, 1.0, 1.5, 0.2, 1.0, -0.3, 0.7, 1.0, 2.2, -1.4, 1.0, -1.1, 0.3,
                1.0, 0.9, 1.8,
            ],
        )
        .unwrap();
        let b = matrix_from_rows(3, 2, &[0.5, -1.0, 0.25, 0.75, -0.6, 0.1]).unwrap();
        let y = &x * &b;
        let fit = ols_fit(&y, &x).unwrap();
        assert!((fit.coefficients - b).abs().max() < 1e-10);
    }

    #[test]
    fn collinear_columns_are_rank_deficient() {
        let mut x = fixture_8x3();
        let c0 = x.column(1).into_owned();
        x.set_column(2, &(c0 * 2.0));
        let y = Matrix::from_element(8, 1, 1.0);
        assert!(matches!(
            ols_fit(&y, &x),
            Err(Error::RankDeficient { rank: 2, cols: 3 })
        ));
        assert!(matches!(projection(&x), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn too_few_rows() {
        let x = Matrix::from_element(3, 3, 1.0);
        assert!(matches!(
            ols_fit(&x, &x),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let x = fixture_8x3();
        let y = Matrix::from_fn(8, 2, |i, j| ((i * 7 + j * 3) as f64).sin() * 5.0);
        let fit = ols_fit(&y, &x).unwrap();
        let xe = x.tr_mul(&fit.residuals);
        assert!(max_abs(&xe) / max_abs(&y) < 1e-8);
    }

    #[test]
    fn coordinate_projection() {
        let x = Matrix::from_fn(5, 2, |i, j| if i == j { 1.0 } else { 0.0 });
        let p = projection(&x).unwrap();
        let expected = Matrix::from_fn(5, 5, |i, j| if i == j && i < 2 { 1.0 } else { 0.0 });
        assert!((p - expected).abs().max() < 1e-14);
    }

    #[test]
    fn projection_idempotent_and_symmetric() {
        let x = fixture_8x3();
        let p = projection(&x).unwrap();
        assert!((&p * &p - &p).abs().max() < 1e-10);
        assert!((&p - p.transpose()).abs().max() < 1e-12);
        assert!((&p * &x - &x).abs().max() < 1e-10);
        assert!((p.trace() - 3.0).abs() < 1e-10);
    }

    #[test]
    fn residuals_match_explicit_projector() {
        let x = fixture_8x3();
        let y = Matrix::from_fn(8, 2, |i, j| (i as f64 - 3.0) * (j as f64 + 0.5));
        let qr = PivotedQr::new(x.clone());
        let p = projection(&x).unwrap();
        let direct = &y - &p * &y;
        assert!((qr.residuals(&y) - direct).abs().max() < 1e-12);
    }

    #[test]
    fn whitened_inner_products_reproduce_quadratic_form() {
        let x = fixture_8x3();
        let e = Matrix::from_fn(8, 2, |i, j| ((i + 2 * j) as f64).cos());
        let qr = PivotedQr::new(x.clone());
        let f = qr.whiten_inner_products(&x.tr_mul(&e)).unwrap();
        let g = gram(&x);
        let direct = e.transpose() * &x * solve_spd(&g, &x.tr_mul(&e)).unwrap();
        assert!((f.tr_mul(&f) - direct).abs().max() < 1e-10);
    }

    #[test]
    fn nonfinite_rejected() {
        assert!(matches!(
            matrix_from_rows(1, 2, &[1.0, f64::NAN]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn log_det_of_diagonal() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0, 0.5]));
        assert!((log_det_spd(&m).unwrap() - 3.0_f64.ln()).abs() < 1e-14);
    }
}
