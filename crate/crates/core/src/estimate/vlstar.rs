use serde::{Deserialize, Serialize};

use super::{fit_fixed_transitions, quantile, sorted_copy, transition_regressors, EstimationResult};
use crate::error::{Error, Result};
use crate::model::{logistic, LaggedDesign, TransitionSpec};
use crate::statcore::{Matrix, PivotedQr};

const MAX_ITERATIONS: usize = 200;
const RELATIVE_TOLERANCE: f64 = 1e-8;

/// Starting grid for the transition search. Locations are quantile
/// positions of the observed transition variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gammas: Vec<f64>,
    pub location_quantiles: Vec<f64>,
    /// Slope bounds for the local search.
    pub gamma_bounds: (f64, f64),
    /// Location bounds for the local search, as quantile positions.
    pub location_bounds: (f64, f64),
}

impl Default for GridSpec {
    fn default() -> Self {
        let (lo, hi) = (0.5f64, 200.0f64);
        let gammas = (0..15)
            .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / 14.0).exp())
            .collect();
        let location_quantiles = (0..19).map(|i| 0.10 + 0.8 * i as f64 / 18.0).collect();
        Self {
            gammas,
            location_quantiles,
            gamma_bounds: (lo, hi),
            location_bounds: (0.05, 0.95),
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() || self.location_quantiles.is_empty() {
            return Err(Error::InvalidParameter("search grid must be non-empty".into()));
        }
        let (glo, ghi) = self.gamma_bounds;
        if !(glo > 0.0 && glo <= ghi) || self.gammas.iter().any(|&g| !(g >= glo && g <= ghi)) {
            return Err(Error::InvalidParameter("slope grid must lie in positive bounds".into()));
        }
        let (qlo, qhi) = self.location_bounds;
        if !(0.0..=1.0).contains(&qlo) || !(qlo..=1.0).contains(&qhi) {
            return Err(Error::InvalidParameter("location bounds must be quantile positions".into()));
        }
        if self
            .location_quantiles
            .iter()
            .any(|&q| !(0.10 - 1e-12..=0.90 + 1e-12).contains(&q))
        {
            return Err(Error::InvalidParameter(
                "location grid must lie within the 10% and 90% quantiles".into(),
            ));
        }
        Ok(())
    }
}

/// Concentrated SSR of one additional transition, given regressors for the
/// transitions already in the model.
struct Profile<'a> {
    x: &'a Matrix,
    s: &'a [f64],
    base: PivotedQr,
    base_resid: Matrix,
    base_ssr: f64,
    reference: f64,
    existing: Vec<f64>,
    separation: f64,
}

impl<'a> Profile<'a> {
    fn new(design: &'a LaggedDesign, frozen: &[TransitionSpec], separation: f64) -> Result<Self> {
        let w = transition_regressors(&design.x, &design.s, frozen)?;
        let reference = w.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        let base = PivotedQr::new(w);
        if !base.is_full_rank() {
            return Err(Error::RankDeficient {
                rank: base.rank(),
                cols: base.ncols(),
            });
        }
        let base_resid = base.residuals(&design.y);
        let base_ssr = base_resid.norm_squared();
        Ok(Self {
            x: &design.x,
            s: &design.s,
            base,
            base_resid,
            base_ssr,
            reference,
            existing: frozen.iter().map(|t| t.location(0)).collect(),
            separation,
        })
    }

    fn ssr(&self, gamma: f64, c: f64) -> f64 {
        if self.existing.iter().any(|e| (e - c).abs() < self.separation) {
            return f64::INFINITY;
        }
        let (t, k) = self.x.shape();
        let mut w = Matrix::zeros(t, k);
        for (row, &st) in self.s.iter().enumerate() {
            let g = logistic(st, gamma, c);
            for j in 0..k {
                w[(row, j)] = g * self.x[(row, j)];
            }
        }
        let w = self.base.residuals(&w);
        let qr = PivotedQr::with_reference_scale(w, self.reference);
        let explained = qr.basis_coordinates(&self.base_resid).norm_squared();
        (self.base_ssr - explained).max(0.0)
    }
}

/// Two-regime VLSTAR: grid search over `(gamma, c)` with `B` concentrated out
/// by OLS, then coordinate descent on `(log gamma, c)`.
pub fn fit_vlstar_2regime(design: &LaggedDesign, grid: &GridSpec) -> Result<EstimationResult> {
    search_transition(design, &[], grid)
}

/// Add one transition to a fitted VLSTAR model, holding its transitions fixed.
pub fn extend_vlstar(
    design: &LaggedDesign,
    fitted: &EstimationResult,
    grid: &GridSpec,
) -> Result<EstimationResult> {
    let model = fitted.model.as_vlstar().ok_or(Error::NotFitted)?;
    search_transition(design, &model.transitions, grid)
}

/// VLSTAR with `regimes` regimes, adding transitions one at a time.
pub fn fit_vlstar(design: &LaggedDesign, regimes: usize, grid: &GridSpec) -> Result<EstimationResult> {
    if regimes == 0 {
        return Err(Error::InvalidParameter("at least one regime required".into()));
    }
    let mut fit = fit_fixed_transitions(design, Vec::new())?;
    for _ in 1..regimes {
        fit = extend_vlstar(design, &fit, grid)?;
    }
    Ok(fit)
}

fn search_transition(
    design: &LaggedDesign,
    frozen: &[TransitionSpec],
    grid: &GridSpec,
) -> Result<EstimationResult> {
    grid.validate()?;
    let sorted = sorted_copy(&design.s);
    let c_lo = quantile(&sorted, grid.location_bounds.0);
    let c_hi = quantile(&sorted, grid.location_bounds.1);
    let scale = (c_hi - c_lo).max(f64::MIN_POSITIVE);
    if !(c_hi > c_lo) {
        return Err(Error::DegenerateDesign(
            "transition variable is constant over the location range".into(),
        ));
    }
    let profile = Profile::new(design, frozen, 1e-3 * scale)?;

    let mut best = (f64::INFINITY, 0.0, 0.0);
    for &gamma in &grid.gammas {
        for &q in &grid.location_quantiles {
            let c = quantile(&sorted, q);
            let v = profile.ssr(gamma, c);
            // strict comparison keeps the first (smallest gamma, then c) minimizer
            if v < best.0 {
                best = (v, gamma, c);
            }
        }
    }
    if !best.0.is_finite() {
        return Err(Error::DegenerateDesign(
            "no admissible transition location on the grid".into(),
        ));
    }

    let (u_lo, u_hi) = (grid.gamma_bounds.0.ln(), grid.gamma_bounds.1.ln());
    let mut step_u = if grid.gammas.len() > 1 {
        0.5 * (u_hi - u_lo) / (grid.gammas.len() - 1) as f64
    } else {
        0.25
    };
    let mut step_c = 0.5 * scale / grid.location_quantiles.len().max(2) as f64;
    let (mut f, mut u, mut c) = (best.0, best.1.ln(), best.2);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let start = f;
        for coord in 0..2 {
            for dir in [1.0, -1.0] {
                let (cu, cc) = if coord == 0 {
                    ((u + dir * step_u).clamp(u_lo, u_hi), c)
                } else {
                    (u, (c + dir * step_c).clamp(c_lo, c_hi))
                };
                if cu == u && cc == c {
                    continue;
                }
                let v = profile.ssr(cu.exp(), cc);
                if v < f {
                    f = v;
                    u = cu;
                    c = cc;
                    break;
                }
            }
        }
        if start - f <= RELATIVE_TOLERANCE * start.max(f64::MIN_POSITIVE) {
            step_u *= 0.5;
            step_c *= 0.5;
            if step_u < 1e-6 && step_c < 1e-6 * scale {
                converged = true;
                break;
            }
        }
    }

    let mut transitions = frozen.to_vec();
    transitions.push(TransitionSpec::shared(u.exp(), c));
    let order = order_by_location(&transitions);
    let sorted_transitions: Vec<TransitionSpec> = order.iter().map(|&i| transitions[i].clone()).collect();
    let mut fit = fit_fixed_transitions(design, sorted_transitions)?;
    fit.converged = converged;
    fit.iterations = iterations;
    Ok(fit)
}

fn order_by_location(transitions: &[TransitionSpec]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..transitions.len()).collect();
    idx.sort_by(|&a, &b| transitions[a].center().total_cmp(&transitions[b].center()));
    idx
}
