use serde::{Deserialize, Serialize};

use super::{fit_fixed_transitions, EstimationResult};
use crate::error::{Error, Result};
use crate::model::{build_regressors, LaggedDesign, TimePanel};
use crate::statcore::log_det_spd;

/// Linear VAR by OLS of `Y` on `X`.
pub fn fit_linear_var(design: &LaggedDesign) -> Result<EstimationResult> {
    fit_fixed_transitions(design, Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InformationCriterion {
    Aic,
    Bic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    pub p: usize,
    pub criterion: InformationCriterion,
    /// Criterion value for `p = 1..=max_p`.
    pub values: Vec<f64>,
}

/// Choose `p` in `1..=max_p` minimizing `T log|Omega| + penalty * n(1 + n p)`,
/// every order evaluated on the sample left after `max_p` initial values.
pub fn select_lag_order(
    panel: &TimePanel,
    max_p: usize,
    criterion: InformationCriterion,
    intercept: bool,
) -> Result<LagSelection> {
    if max_p == 0 {
        return Err(Error::InsufficientLags);
    }
    let n = panel.n_series();
    let mut values = Vec::with_capacity(max_p);
    for p in 1..=max_p {
        let full = build_regressors(panel, max_p.max(p), intercept)?;
        let design = if p == max_p {
            full
        } else {
            let d = build_regressors(panel, p, intercept)?;
            d.slice(max_p - p, d.nobs())
        };
        let t = design.nobs() as f64;
        let fit = fit_linear_var(&design)?;
        let log_det = log_det_spd(&fit.omega_hat).ok_or(Error::SingularRss)?;
        let params = (n * (usize::from(intercept) + n * p)) as f64;
        let penalty = match criterion {
            InformationCriterion::Aic => 2.0,
            InformationCriterion::Bic => t.ln(),
        };
        values.push(t * log_det + penalty * params);
    }
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i + 1)
        .unwrap_or(1);
    Ok(LagSelection {
        p: best,
        criterion,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_vlstar, TransitionSource, VlstarModel};
    use crate::statcore::{Matrix, RngStream};

    #[test]
    fn noiseless_recovery() {
        let b = Matrix::from_row_slice(3, 2, &[0.2, -0.1, 0.5, 0.1, -0.2, 0.3]);
        let x = Matrix::from_fn(12, 3, |r, c| match c {
            0 => 1.0,
            1 => (r as f64 * 0.7).sin(),
            _ => (r as f64 * 1.3).cos(),
        });
        let design = LaggedDesign {
            y: &x * &b,
            x,
            s: vec![0.0; 12],
            intercept: true,
        };
        let fit = fit_linear_var(&design).unwrap();
        let got = &fit.model.as_vlstar().unwrap().b;
        assert_eq!(got.shape(), (3, 2));
        assert!((got - &b).abs().max() < 1e-10);
        assert!(fit.residuals.abs().max() < 1e-10);
    }

    #[test]
    fn residuals_orthogonal_to_regressors() {
        let b = Matrix::from_fn(4, 3, |r, c| if r == c + 1 { 0.4 } else { 0.05 });
        let model = VlstarModel::new(3, 1, true, b, vec![], Matrix::identity(3, 3)).unwrap();
        let panel = simulate_vlstar(
            &model,
            300,
            &TransitionSource::Ar1 { phi: 0.95 },
            RngStream::new(11, 0),
            100,
        )
        .unwrap();
        let d = build_regressors(&panel, 1, true).unwrap();
        let fit = fit_linear_var(&d).unwrap();
        assert_eq!(fit.model.as_vlstar().unwrap().b.shape(), (4, 3));
        let xe = d.x.transpose() * &fit.residuals;
        assert!(xe.abs().max() < 1e-9);
        let omega = &fit.omega_hat;
        assert!((omega - omega.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn bic_picks_true_single_lag() {
        let b = Matrix::from_fn(3, 2, |r, c| if r == c + 1 { 0.6 } else { 0.0 });
        let model = VlstarModel::new(2, 1, true, b, vec![], Matrix::identity(2, 2)).unwrap();
        let panel = simulate_vlstar(
            &model,
            500,
            &TransitionSource::Ar1 { phi: 0.5 },
            RngStream::new(4, 0),
            100,
        )
        .unwrap();
        let sel = select_lag_order(&panel, 4, InformationCriterion::Bic, true).unwrap();
        assert_eq!(sel.p, 1);
        assert_eq!(sel.values.len(), 4);
    }
}
