use crate::error::{Error, Result};
use crate::model::{logistic_dgamma, logistic_dlocation, LaggedDesign, VlstarModel};
use crate::statcore::{log_det_spd, solve_spd, Matrix};

use super::transition_regressors;

/// Number of mean parameters `k m n + 2 (m - 1) n`, slopes and locations
/// counted per equation.
pub fn parameter_dimension(model: &VlstarModel) -> usize {
    let (k, m, n) = (model.k(), model.regimes(), model.n);
    k * m * n + 2 * (m - 1) * n
}

fn check_design(model: &VlstarModel, design: &LaggedDesign) -> Result<()> {
    if design.k() != model.k() || design.n() != model.n {
        return Err(Error::DimensionMismatch(format!(
            "design has k = {}, n = {}; model has k = {}, n = {}",
            design.k(),
            design.n(),
            model.k(),
            model.n
        )));
    }
    Ok(())
}

/// `(B_{d+1}' x_t)_i`.
fn block_mean(model: &VlstarModel, block: usize, i: usize, x: &[f64]) -> f64 {
    let col = block * model.n + i;
    x.iter().enumerate().map(|(r, v)| model.b[(r, col)] * v).sum()
}

/// Derivatives of the conditional mean, one row per `(t, i)` (row
/// `t n + i`). Columns: `vec(B)` column-major, then slopes `(d, i)` with
/// `i` fastest, then locations in the same order.
pub fn model_jacobian(model: &VlstarModel, design: &LaggedDesign) -> Result<Matrix> {
    check_design(model, design)?;
    let (k, m, n) = (model.k(), model.regimes(), model.n);
    let t_len = design.nobs();
    let off_gamma = k * m * n;
    let off_c = off_gamma + (m - 1) * n;
    let mut j = Matrix::zeros(t_len * n, parameter_dimension(model));
    let mut x = vec![0.0; k];
    for t in 0..t_len {
        for (r, v) in x.iter_mut().enumerate() {
            *v = design.x[(t, r)];
        }
        let s = design.s[t];
        for d in 0..m {
            let w = if d == 0 {
                vec![1.0; n]
            } else {
                model.transitions[d - 1].diagonal(s, n)
            };
            for i in 0..n {
                let base = (d * n + i) * k;
                for r in 0..k {
                    j[(t * n + i, base + r)] = w[i] * x[r];
                }
            }
        }
        for (d, tr) in model.transitions.iter().enumerate() {
            for i in 0..n {
                let mean = block_mean(model, d + 1, i, &x);
                let (g, c) = (tr.gamma(i), tr.location(i));
                j[(t * n + i, off_gamma + d * n + i)] = logistic_dgamma(s, g, c) * mean;
                j[(t * n + i, off_c + d * n + i)] = logistic_dlocation(s, g, c) * mean;
            }
        }
    }
    Ok(j)
}

/// The stacked derivative matrix `K` (`T n x dim`).
pub fn derivative_matrix_k(model: &VlstarModel, design: &LaggedDesign) -> Result<Matrix> {
    model_jacobian(model, design)
}

/// Common regressors spanning every equation's slice of `K`:
/// `[X, G^(1) X, ..., g_gamma (B_2' x)_1..n, ..., g_c (B_2' x)_1..n, ...]`.
/// Requires shared transitions.
pub fn additive_regressors(model: &VlstarModel, design: &LaggedDesign) -> Result<Matrix> {
    check_design(model, design)?;
    let w = transition_regressors(&design.x, &design.s, &model.transitions)?;
    let (m, n) = (model.regimes(), model.n);
    let t_len = design.nobs();
    let extra = 2 * (m - 1) * n;
    let mut k_reg = Matrix::zeros(t_len, w.ncols() + extra);
    k_reg.columns_mut(0, w.ncols()).copy_from(&w);
    let off_gamma = w.ncols();
    let off_c = off_gamma + (m - 1) * n;
    let mut x = vec![0.0; model.k()];
    for t in 0..t_len {
        for (r, v) in x.iter_mut().enumerate() {
            *v = design.x[(t, r)];
        }
        let s = design.s[t];
        for (d, tr) in model.transitions.iter().enumerate() {
            let (g, c) = (tr.gamma(0), tr.location(0));
            let dg = logistic_dgamma(s, g, c);
            let dc = logistic_dlocation(s, g, c);
            for i in 0..n {
                let mean = block_mean(model, d + 1, i, &x);
                k_reg[(t, off_gamma + d * n + i)] = dg * mean;
                k_reg[(t, off_c + d * n + i)] = dc * mean;
            }
        }
    }
    Ok(k_reg)
}

fn residual_rows(model: &VlstarModel, design: &LaggedDesign) -> Matrix {
    let n = model.n;
    let mut e = Matrix::zeros(design.nobs(), n);
    for t in 0..design.nobs() {
        let x: Vec<f64> = design.x.row(t).iter().copied().collect();
        let mu = model.evaluate(&x, design.s[t]);
        for i in 0..n {
            e[(t, i)] = design.y[(t, i)] - mu[i];
        }
    }
    e
}

/// Average Gaussian log-likelihood with the model's `Omega` held fixed.
pub fn log_likelihood(model: &VlstarModel, design: &LaggedDesign) -> Result<f64> {
    check_design(model, design)?;
    let n = model.n as f64;
    let log_det = log_det_spd(&model.omega).ok_or(Error::SingularRss)?;
    let e = residual_rows(model, design);
    let w = solve_spd(&model.omega, &e.transpose()).ok_or(Error::SingularRss)?;
    let quad: f64 = e.transpose().component_mul(&w).sum();
    let t = design.nobs() as f64;
    Ok(-0.5 * n * (2.0 * std::f64::consts::PI).ln() - 0.5 * log_det - 0.5 * quad / t)
}

/// Gradient of [`log_likelihood`] with respect to the mean parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    /// `k x m n`, same layout as `B`.
    pub b: Matrix,
    /// `(m - 1) x n`: row `d` holds the slopes of transition `d`, one per
    /// equation.
    pub gamma: Matrix,
    pub location: Matrix,
}

impl ScoreVector {
    /// Stacked in the column order of [`model_jacobian`].
    pub fn stacked(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.b.as_slice().to_vec();
        v.extend(self.gamma.transpose().iter());
        v.extend(self.location.transpose().iter());
        v
    }
}

/// `(1/T) sum_t J_t' Omega^{-1} e_t`.
pub fn score_vector(model: &VlstarModel, design: &LaggedDesign) -> Result<ScoreVector> {
    let j = model_jacobian(model, design)?;
    let (k, m, n) = (model.k(), model.regimes(), model.n);
    let e = residual_rows(model, design);
    let w = solve_spd(&model.omega, &e.transpose()).ok_or(Error::SingularRss)?;
    let t_len = design.nobs();
    let mut total = vec![0.0; j.ncols()];
    for t in 0..t_len {
        for i in 0..n {
            let wi = w[(i, t)];
            if wi == 0.0 {
                continue;
            }
            for (c, acc) in total.iter_mut().enumerate() {
                *acc += j[(t * n + i, c)] * wi;
            }
        }
    }
    total.iter_mut().for_each(|v| *v /= t_len as f64);
    let b = Matrix::from_column_slice(k, m * n, &total[..k * m * n]);
    let gamma = Matrix::from_row_slice(m - 1, n, &total[k * m * n..k * m * n + (m - 1) * n]);
    let location = Matrix::from_row_slice(m - 1, n, &total[k * m * n + (m - 1) * n..]);
    Ok(ScoreVector { b, gamma, location })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_regressors, simulate_vlstar, TransitionSource, TransitionSpec};
    use crate::statcore::{PivotedQr, RngStream};

    fn fixture(shared: bool) -> (VlstarModel, LaggedDesign) {
        let n = 3;
        let mut b = Matrix::zeros(1 + n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                b[(1 + i, j)] = if i == j { 0.4 } else { 0.1 };
                b[(1 + i, n + j)] = -b[(1 + i, j)];
            }
        }
        b[(0, 0)] = 0.2;
        b[(0, n + 1)] = -0.3;
        let tr = if shared {
            TransitionSpec::shared(2.0, 0.5)
        } else {
            TransitionSpec::per_equation(vec![2.0, 1.5, 3.0], vec![0.5, 0.0, 1.0]).unwrap()
        };
        let omega = Matrix::from_row_slice(3, 3, &[1.0, 0.3, 0.1, 0.3, 1.2, 0.2, 0.1, 0.2, 0.8]);
        let model = VlstarModel::new(n, 1, true, b, vec![tr], omega).unwrap();
        let panel = simulate_vlstar(
            &model,
            120,
            &TransitionSource::Ar1 { phi: 0.8 },
            RngStream::new(17, 0),
            50,
        )
        .unwrap();
        let design = build_regressors(&panel, 1, true).unwrap();
        (model, design)
    }

    fn perturbed(model: &VlstarModel, idx: usize, h: f64) -> VlstarModel {
        let (k, m, n) = (model.k(), model.regimes(), model.n);
        let mut out = model.clone();
        if idx < k * m * n {
            out.b.as_mut_slice()[idx] += h;
            return out;
        }
        let rest = idx - k * m * n;
        let (is_c, rest) = if rest >= (m - 1) * n {
            (true, rest - (m - 1) * n)
        } else {
            (false, rest)
        };
        let (d, i) = (rest / n, rest % n);
        let tr = &mut out.transitions[d];
        if is_c {
            tr.locations[i] += h;
        } else {
            tr.gammas[i] += h;
        }
        out
    }

    #[test]
    fn dimension_matches_layout() {
        let (model, design) = fixture(false);
        assert_eq!(parameter_dimension(&model), 30);
        let k = derivative_matrix_k(&model, &design).unwrap();
        assert_eq!(k.shape(), (design.nobs() * 3, 30));
    }

    #[test]
    fn unit_direction_selects_regressor() {
        let (model, design) = fixture(false);
        let j = model_jacobian(&model, &design).unwrap();
        // b_11 of B_1 moves only equation 1, by x_{t,1}
        for t in 0..5 {
            assert_eq!(j[(t * 3, 0)], design.x[(t, 0)]);
            assert_eq!(j[(t * 3 + 1, 0)], 0.0);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let (model, design) = fixture(false);
        let j = model_jacobian(&model, &design).unwrap();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for idx in 0..j.ncols() {
            let up = perturbed(&model, idx, h);
            let dn = perturbed(&model, idx, -h);
            for t in 0..design.nobs() {
                let x: Vec<f64> = design.x.row(t).iter().copied().collect();
                let a = up.evaluate(&x, design.s[t]);
                let b = dn.evaluate(&x, design.s[t]);
                for i in 0..3 {
                    let fd = (a[i] - b[i]) / (2.0 * h);
                    worst = worst.max((fd - j[(t * 3 + i, idx)]).abs());
                }
            }
        }
        assert!(worst < 1e-6, "max abs error {worst}");
    }

    #[test]
    fn score_matches_finite_differences() {
        let (model, design) = fixture(false);
        let score = score_vector(&model, &design).unwrap().stacked();
        let h = 1e-6;
        let mut worst: f64 = 0.0;
        let scale = score.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for (idx, &analytic) in score.iter().enumerate() {
            let up = log_likelihood(&perturbed(&model, idx, h), &design).unwrap();
            let dn = log_likelihood(&perturbed(&model, idx, -h), &design).unwrap();
            let fd = (up - dn) / (2.0 * h);
            worst = worst.max((fd - analytic).abs() / analytic.abs().max(1e-2 * scale));
        }
        assert!(worst < 1e-5, "max relative error {worst}");
    }

    #[test]
    fn k_slices_lie_in_additive_regressor_span() {
        let (model, design) = fixture(true);
        let j = model_jacobian(&model, &design).unwrap();
        let k_reg = additive_regressors(&model, &design).unwrap();
        assert_eq!(k_reg.ncols(), 2 * 4 + 2 * 3);
        let qr = PivotedQr::new(k_reg);
        let t_len = design.nobs();
        for i in 0..3 {
            let slice = Matrix::from_fn(t_len, j.ncols(), |t, c| j[(t * 3 + i, c)]);
            let resid = qr.residuals(&slice);
            assert!(resid.abs().max() < 1e-10 * (1.0 + slice.abs().max()));
        }
    }
}
