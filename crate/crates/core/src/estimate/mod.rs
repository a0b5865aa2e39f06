//! Estimation of the null models the tests condition on.

mod derivatives;
mod linear;
mod vlstar;
mod vtar;

pub use derivatives::{
    additive_regressors, derivative_matrix_k, log_likelihood, model_jacobian, parameter_dimension,
    score_vector, ScoreVector,
};
pub use linear::{fit_linear_var, select_lag_order, InformationCriterion, LagSelection};
pub use vlstar::{extend_vlstar, fit_vlstar, fit_vlstar_2regime, GridSpec};
pub use vtar::{fit_vtar_threshold, ThresholdFit, TRIM};

use crate::error::{Error, Result};
use crate::model::{LaggedDesign, TransitionSpec, VlstarModel, VtarModel};
use crate::statcore::{check_finite, Matrix, PivotedQr};

/// The fitted model behind an [`EstimationResult`].
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    /// Linear VARs are smooth-transition models without transitions.
    Vlstar(VlstarModel),
    Vtar(VtarModel),
}

impl FittedModel {
    pub fn regimes(&self) -> usize {
        match self {
            FittedModel::Vlstar(m) => m.regimes(),
            FittedModel::Vtar(m) => m.regimes(),
        }
    }

    pub fn as_vlstar(&self) -> Option<&VlstarModel> {
        match self {
            FittedModel::Vlstar(m) => Some(m),
            FittedModel::Vtar(_) => None,
        }
    }

    pub fn as_vtar(&self) -> Option<&VtarModel> {
        match self {
            FittedModel::Vtar(m) => Some(m),
            FittedModel::Vlstar(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub model: FittedModel,
    pub residuals: Matrix,
    /// `E'E / T`.
    pub omega_hat: Matrix,
    /// Trace of the residual cross-product matrix.
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl EstimationResult {
    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    /// `E'E`.
    pub fn rss(&self) -> Matrix {
        self.residuals.transpose() * &self.residuals
    }
}

pub(crate) fn omega_from_residuals(e: &Matrix) -> Matrix {
    let t = e.nrows() as f64;
    let mut omega = e.transpose() * e / t;
    // exact symmetry
    for i in 0..omega.nrows() {
        for j in 0..i {
            let v = 0.5 * (omega[(i, j)] + omega[(j, i)]);
            omega[(i, j)] = v;
            omega[(j, i)] = v;
        }
    }
    omega
}

/// `[X, g_1 X, ..., g_{m-1} X]` for shared transitions.
pub fn transition_regressors(x: &Matrix, s: &[f64], transitions: &[TransitionSpec]) -> Result<Matrix> {
    let (t, k) = x.shape();
    if s.len() != t {
        return Err(Error::DimensionMismatch(format!(
            "{t} regressor rows but {} transition values",
            s.len()
        )));
    }
    let mut w = Matrix::zeros(t, k * (transitions.len() + 1));
    w.columns_mut(0, k).copy_from(x);
    for (d, tr) in transitions.iter().enumerate() {
        if !tr.is_uniform() {
            return Err(Error::InvalidParameter(
                "regressor form requires a transition shared across equations".into(),
            ));
        }
        let (gamma, c) = (tr.gamma(0), tr.location(0));
        for (row, &st) in s.iter().enumerate() {
            let g = crate::model::logistic(st, gamma, c);
            for j in 0..k {
                w[(row, (d + 1) * k + j)] = g * x[(row, j)];
            }
        }
    }
    Ok(w)
}

/// OLS of `Y` on `[X, G^(1) X, ...]` with the transitions held fixed.
pub fn fit_fixed_transitions(
    design: &LaggedDesign,
    transitions: Vec<TransitionSpec>,
) -> Result<EstimationResult> {
    check_finite(&design.y)?;
    let w = transition_regressors(&design.x, &design.s, &transitions)?;
    if w.nrows() <= w.ncols() {
        return Err(Error::InsufficientData {
            needed: w.ncols() + 1,
            got: w.nrows(),
        });
    }
    let qr = PivotedQr::new(w);
    let b = blocks_side_by_side(&qr.solve(&design.y)?, design.k());
    let residuals = qr.residuals(&design.y);
    let omega = omega_from_residuals(&residuals);
    let objective = residuals.norm_squared();
    let n = design.n();
    let p = (design.k() - usize::from(design.intercept)) / n;
    let model = VlstarModel::new(n, p, design.intercept, b, transitions, omega.clone())?;
    Ok(EstimationResult {
        model: FittedModel::Vlstar(model),
        residuals,
        omega_hat: omega,
        objective,
        converged: true,
        iterations: 0,
    })
}

/// Reshape `(m k) x n` stacked coefficients into `k x (m n)` blocks.
pub(crate) fn blocks_side_by_side(coef: &Matrix, k: usize) -> Matrix {
    let (rows, n) = coef.shape();
    let m = rows / k;
    let mut out = Matrix::zeros(k, m * n);
    for d in 0..m {
        out.columns_mut(d * n, n).copy_from(&coef.rows(d * k, k));
    }
    out
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub(crate) fn sorted_copy(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    s
}
