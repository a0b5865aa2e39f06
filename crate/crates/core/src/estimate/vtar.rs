use super::{blocks_side_by_side, omega_from_residuals, quantile, sorted_copy, EstimationResult, FittedModel};
use crate::error::{Error, Result};
use crate::model::{LaggedDesign, VtarModel};
use crate::statcore::{Matrix, PivotedQr};

/// Fraction of the transition variable trimmed from each side of the
/// threshold candidate set.
pub const TRIM: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdFit {
    pub result: EstimationResult,
    pub threshold: f64,
    /// The SSR profile does not improve on the model without the new
    /// threshold by more than a BIC-sized margin.
    pub flat_profile: bool,
    pub candidates: usize,
}

/// Per-regime moments accumulated in the order of the transition variable.
struct Moments {
    xx: Matrix,
    xy: Matrix,
    yy: f64,
    count: usize,
}

impl Moments {
    fn new(k: usize, n: usize) -> Self {
        Self {
            xx: Matrix::zeros(k, k),
            xy: Matrix::zeros(k, n),
            yy: 0.0,
            count: 0,
        }
    }

    fn add(&mut self, design: &LaggedDesign, row: usize) {
        let (k, n) = (self.xx.nrows(), self.xy.ncols());
        for a in 0..k {
            let xa = design.x[(row, a)];
            for b in 0..k {
                self.xx[(a, b)] += xa * design.x[(row, b)];
            }
            for j in 0..n {
                self.xy[(a, j)] += xa * design.y[(row, j)];
            }
        }
        for j in 0..n {
            self.yy += design.y[(row, j)].powi(2);
        }
        self.count += 1;
    }

    fn minus(&self, other: &Moments) -> Moments {
        Moments {
            xx: &self.xx - &other.xx,
            xy: &self.xy - &other.xy,
            yy: self.yy - other.yy,
            count: self.count - other.count,
        }
    }

    /// Trace SSR of the regime-wise OLS fit, `None` if `X'X` is singular.
    fn ssr(&self) -> Option<f64> {
        let chol = self.xx.clone().cholesky()?;
        let diag_min = (0..self.xx.nrows())
            .map(|i| chol.l_dirty()[(i, i)])
            .fold(f64::INFINITY, f64::min);
        let diag_max = (0..self.xx.nrows())
            .map(|i| chol.l_dirty()[(i, i)])
            .fold(0.0, f64::max);
        if !(diag_min > 1e-7 * diag_max) {
            return None;
        }
        let coef = chol.solve(&self.xy);
        Some((self.yy - self.xy.dot(&coef)).max(0.0))
    }
}

fn regime_of(s: f64, thresholds: &[f64]) -> usize {
    thresholds.iter().take_while(|&&c| s > c).count()
}

/// Least-squares threshold given `known` thresholds: the new threshold is
/// chosen among observed values of the transition variable within the
/// trimmed range, each regime keeping at least `k + 5` observations.
pub fn fit_vtar_threshold(design: &LaggedDesign, known: &[f64]) -> Result<ThresholdFit> {
    let (t, k) = design.x.shape();
    let n = design.n();
    let min_obs = k + 5;
    let mut known = known.to_vec();
    known.sort_by(|a, b| a.total_cmp(b));

    let sorted = sorted_copy(&design.s);
    let lo = quantile(&sorted, TRIM);
    let hi = quantile(&sorted, 1.0 - TRIM);

    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| design.s[a].total_cmp(&design.s[b]).then(a.cmp(&b)));

    // regime totals under the known thresholds
    let mut totals: Vec<Moments> = (0..=known.len()).map(|_| Moments::new(k, n)).collect();
    for &row in &order {
        totals[regime_of(design.s[row], &known)].add(design, row);
    }
    let regime_ssr: Vec<Option<f64>> = totals.iter().map(|m| m.ssr()).collect();
    if totals.iter().any(|m| m.count < min_obs) || regime_ssr.iter().any(Option::is_none) {
        return Err(Error::EmptyRegime { min_obs });
    }
    let ssr_known: f64 = regime_ssr.iter().map(|v| v.unwrap_or(0.0)).sum();

    let mut best: Option<(f64, f64)> = None;
    let mut candidates = 0;
    let mut running: Vec<Moments> = (0..=known.len()).map(|_| Moments::new(k, n)).collect();
    for (pos, &row) in order.iter().enumerate() {
        let s = design.s[row];
        let r = regime_of(s, &known);
        running[r].add(design, row);
        // candidates sit at the last of a run of tied values
        if pos + 1 < t && design.s[order[pos + 1]] == s {
            continue;
        }
        if s < lo || s > hi || known.contains(&s) {
            continue;
        }
        let left = &running[r];
        let right = totals[r].minus(left);
        if left.count < min_obs || right.count < min_obs {
            continue;
        }
        let (Some(a), Some(b)) = (left.ssr(), right.ssr()) else {
            continue;
        };
        candidates += 1;
        let total = ssr_known - regime_ssr[r].unwrap_or(0.0) + a + b;
        if best.is_none_or(|(v, _)| total < v) {
            best = Some((total, s));
        }
    }
    let Some((ssr_min, threshold)) = best else {
        return Err(Error::EmptyRegime { min_obs });
    };

    let mut thresholds = known.clone();
    thresholds.push(threshold);
    thresholds.sort_by(|a, b| a.total_cmp(b));
    let result = fit_fixed_thresholds(design, &thresholds)?;
    let penalty = ((k * n + 1) as f64) * (t as f64).ln();
    let gain = t as f64 * (ssr_known / ssr_min.max(f64::MIN_POSITIVE)).ln();
    Ok(ThresholdFit {
        result,
        threshold,
        flat_profile: gain < penalty,
        candidates,
    })
}

/// OLS of `Y` on `[X, 1(s > c_1) X, ...]`.
pub(crate) fn fit_fixed_thresholds(design: &LaggedDesign, thresholds: &[f64]) -> Result<EstimationResult> {
    let (t, k) = design.x.shape();
    let n = design.n();
    let mut w = Matrix::zeros(t, k * (thresholds.len() + 1));
    w.columns_mut(0, k).copy_from(&design.x);
    for (d, &c) in thresholds.iter().enumerate() {
        for row in 0..t {
            if design.s[row] > c {
                for j in 0..k {
                    w[(row, (d + 1) * k + j)] = design.x[(row, j)];
                }
            }
        }
    }
    let qr = PivotedQr::new(w);
    let blocks = blocks_side_by_side(&qr.solve(&design.y)?, k);
    let residuals = qr.residuals(&design.y);
    let omega = omega_from_residuals(&residuals);
    let p = (k - usize::from(design.intercept)) / n;
    let model = VtarModel::new(n, p, design.intercept, blocks, thresholds.to_vec(), omega.clone())?;
    Ok(EstimationResult {
        model: FittedModel::Vtar(model),
        objective: residuals.norm_squared(),
        residuals,
        omega_hat: omega,
        converged: true,
        iterations: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_regressors, simulate_vtar, TransitionSource, DEFAULT_BURN_IN};
    use crate::statcore::RngStream;

    fn vtar(n: usize, regimes: usize) -> VtarModel {
        let mut phi1 = Matrix::from_element(n, n, 0.1);
        for i in 0..n {
            phi1[(i, i)] = 0.4;
        }
        let mut list = vec![phi1.clone(), -phi1];
        let mut th = vec![2.0];
        if regimes == 3 {
            list.push(Matrix::identity(n, n) * -0.7);
            th.push(4.0);
        }
        if regimes == 1 {
            list.truncate(1);
            th.clear();
        }
        VtarModel::from_regimes(n, 1, false, &list, th, Matrix::identity(n, n)).unwrap()
    }

    fn design(model: &VtarModel, t: usize, seed: u64) -> LaggedDesign {
        let panel = simulate_vtar(
            model,
            t + 1,
            &TransitionSource::Ar1 { phi: 0.95 },
            RngStream::new(seed, 0),
            DEFAULT_BURN_IN,
        )
        .unwrap();
        build_regressors(&panel, 1, true).unwrap()
    }

    #[test]
    fn matches_brute_force_search() {
        let d = design(&vtar(2, 2), 300, 9);
        let fit = fit_vtar_threshold(&d, &[]).unwrap();
        let sorted = sorted_copy(&d.s);
        let (lo, hi) = (quantile(&sorted, TRIM), quantile(&sorted, 1.0 - TRIM));
        let mut best = (f64::INFINITY, 0.0);
        for &c in &sorted {
            if c < lo || c > hi {
                continue;
            }
            let above = d.s.iter().filter(|&&s| s > c).count();
            if above < d.k() + 5 || d.nobs() - above < d.k() + 5 {
                continue;
            }
            let r = fit_fixed_thresholds(&d, &[c]).unwrap();
            if r.objective < best.0 {
                best = (r.objective, c);
            }
        }
        assert_eq!(fit.threshold, best.1);
        assert!((fit.result.objective - best.0).abs() < 1e-8 * best.0);
        assert!(!fit.flat_profile);
    }

    #[test]
    fn threshold_close_at_large_sample() {
        let d = design(&vtar(3, 2), 1000, 2);
        let fit = fit_vtar_threshold(&d, &[]).unwrap();
        assert!((fit.threshold - 2.0).abs() < 0.3, "{}", fit.threshold);
    }

    #[test]
    fn permuting_series_keeps_threshold() {
        let d = design(&vtar(3, 2), 400, 13);
        let perm = [2usize, 0, 1];
        let mut pd = d.clone();
        for (j, &src) in perm.iter().enumerate() {
            pd.y.column_mut(j).copy_from(&d.y.column(src));
        }
        let a = fit_vtar_threshold(&d, &[]).unwrap();
        let b = fit_vtar_threshold(&pd, &[]).unwrap();
        assert_eq!(a.threshold, b.threshold);
    }

    #[test]
    fn second_threshold_given_first() {
        let d = design(&vtar(2, 3), 1000, 4);
        let fit = fit_vtar_threshold(&d, &[2.0]).unwrap();
        let m = fit.result.model.as_vtar().unwrap();
        assert_eq!(m.regimes(), 3);
        assert!(m.thresholds[0] < m.thresholds[1] || fit.threshold < 2.0);
    }

    #[test]
    fn linear_data_flags_flat_profile() {
        let d = design(&vtar(2, 1), 400, 8);
        let fit = fit_vtar_threshold(&d, &[]).unwrap();
        assert!(fit.flat_profile);
        assert!(fit.candidates > 0);
    }

    #[test]
    fn too_short_sample_is_empty_regime() {
        let d = design(&vtar(2, 2), 12, 1);
        assert!(matches!(fit_vtar_threshold(&d, &[]), Err(Error::EmptyRegime { .. })));
    }
}
