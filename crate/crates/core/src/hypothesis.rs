//! LM, rescaled LM and Wilks' Λ tests against a Taylor-expanded
//! alternative, for the linearity null and for the null of no additional
//! transition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{additive_regressors, transition_regressors, EstimationResult, FittedModel};
use crate::model::{build_taylor_design, LaggedDesign};
use crate::statcore::{
    bartlett_statistic, log_det_spd, min_eigenvalue, solve_spd, survival, DistributionRef, Matrix,
    PivotedQr,
};

pub const DEFAULT_TAYLOR_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Lm,
    LmTr2,
    LmRescaled,
    Wilks,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Lm, Variant::LmTr2, Variant::LmRescaled, Variant::Wilks];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::Lm => "lm",
            Variant::LmTr2 => "lm-tr2",
            Variant::LmRescaled => "lm-rescaled",
            Variant::Wilks => "wilks",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown test variant '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub variant: Variant,
    /// Regimes under the null; the alternative has one more.
    pub null_regimes: usize,
    pub statistic: f64,
    pub dist: DistributionRef,
    pub p_value: f64,
    pub taylor_order: usize,
    /// `(W, S)` of the degrees-of-freedom rescaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auxiliary_df: Option<(u64, u64)>,
    /// Wilks' Λ behind a Bartlett statistic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilks_lambda: Option<f64>,
}

impl TestOutcome {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Restricted and auxiliary residual cross products.
#[derive(Debug, Clone, PartialEq)]
pub struct RssPair {
    pub rss0: Matrix,
    pub rss1: Matrix,
}

impl RssPair {
    /// Smallest eigenvalue of `RSS0 - RSS1`.
    pub fn difference_min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&(&self.rss0 - &self.rss1))
    }

    /// `|RSS1| / |RSS0|`.
    pub fn lambda(&self) -> Result<f64> {
        let d0 = log_det_spd(&self.rss0).ok_or(Error::SingularRss)?;
        match log_det_spd(&self.rss1) {
            Some(d1) => Ok((d1 - d0).exp().min(1.0)),
            None => Ok(0.0),
        }
    }
}

/// How the null model's transitions enter the test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionTreatment {
    /// Slopes and locations were estimated: their derivatives join the
    /// null regressors and count as parameters in the rescaling.
    Estimated,
    /// Locations are treated as known (super-consistent thresholds).
    Known,
}

/// All variants from one auxiliary regression.
#[derive(Debug, Clone, PartialEq)]
pub struct TestBattery {
    pub lm: TestOutcome,
    pub lm_tr2: TestOutcome,
    pub lm_rescaled: TestOutcome,
    pub wilks: TestOutcome,
    pub rss: RssPair,
}

impl TestBattery {
    pub fn get(&self, variant: Variant) -> &TestOutcome {
        match variant {
            Variant::Lm => &self.lm,
            Variant::LmTr2 => &self.lm_tr2,
            Variant::LmRescaled => &self.lm_rescaled,
            Variant::Wilks => &self.wilks,
        }
    }
}

struct Auxiliary {
    lm: f64,
    tr2: f64,
    rss: RssPair,
    rank_null: usize,
    cols_z: usize,
    nobs: usize,
    n: usize,
}

fn column_scale(m: &Matrix) -> f64 {
    m.column_iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `e`: null residuals, `r`: null regressors, `z`: Taylor block.
fn auxiliary(e: &Matrix, r: &Matrix, z: &Matrix, data_scale: f64) -> Result<Auxiliary> {
    let (t, n) = e.shape();
    if r.nrows() != t || z.nrows() != t {
        return Err(Error::DimensionMismatch("auxiliary blocks must share rows".into()));
    }
    let qr_r = PivotedQr::new(r.clone());
    let z_resid = qr_r.residuals(z);
    let qr_z = PivotedQr::with_reference_scale(z_resid, column_scale(z));
    if !qr_z.is_full_rank() {
        return Err(Error::DegenerateDesign(format!(
            "Taylor regressors have rank {} of {} after partialling out the null regressors",
            qr_z.rank(),
            z.ncols()
        )));
    }
    let rank_null = qr_r.rank();
    if t <= rank_null + z.ncols() {
        return Err(Error::InsufficientData {
            needed: rank_null + z.ncols() + 1,
            got: t,
        });
    }
    // Residuals need not be exactly orthogonal to every null regressor (a
    // shared slope only zeroes a weighted sum of the per-equation
    // derivative columns), so both moment matrices use the partialled
    // residuals.
    let e_star = qr_r.residuals(e);
    let rss0 = e_star.transpose() * &e_star;
    let xi = qr_z.residuals(&e_star);
    let rss1 = xi.transpose() * &xi;
    let rss = RssPair { rss0, rss1 };

    if e.norm() <= 1e-12 * data_scale.max(f64::MIN_POSITIVE) {
        return Ok(Auxiliary {
            lm: 0.0,
            tr2: 0.0,
            rss,
            rank_null,
            cols_z: z.ncols(),
            nobs: t,
            n,
        });
    }
    let omega = e.transpose() * e / t as f64;
    let f = qr_z.basis_coordinates(&e_star);
    let lm = solve_spd(&omega, &(f.transpose() * &f))
        .ok_or(Error::SingularRss)?
        .trace()
        .max(0.0);
    let tr2 = solve_spd(&rss.rss0, &rss.rss1).ok_or(Error::SingularRss)?.trace();
    let tr2 = (t as f64 * (n as f64 - tr2)).max(0.0);
    Ok(Auxiliary {
        lm,
        tr2,
        rss,
        rank_null,
        cols_z: z.ncols(),
        nobs: t,
        n,
    })
}

fn battery(aux: Auxiliary, null_regimes: usize, order: usize, base_params: u64, extra_params: u64) -> Result<TestBattery> {
    let n = aux.n as u64;
    let w = n * aux.cols_z as u64;
    let chi = DistributionRef::ChiSquare { df: w };
    let outcome = |variant, statistic: f64, dist| -> Result<TestOutcome> {
        Ok(TestOutcome {
            variant,
            null_regimes,
            statistic,
            dist,
            p_value: survival(dist, statistic)?,
            taylor_order: order,
            auxiliary_df: None,
            wilks_lambda: None,
        })
    };
    let lm = outcome(Variant::Lm, aux.lm, chi)?;
    let lm_tr2 = outcome(Variant::LmTr2, aux.tr2, chi)?;
    let lm_rescaled = rescale(&lm, aux.n, aux.nobs, base_params + extra_params, w)?;

    let lambda = if aux.lm == 0.0 && aux.tr2 == 0.0 {
        1.0
    } else {
        aux.rss.lambda()?
    };
    let error_df = (aux.nobs - aux.rank_null - aux.cols_z) as u64;
    let bartlett = bartlett_statistic(lambda, n, error_df, aux.cols_z as u64);
    let mut wilks = outcome(Variant::Wilks, bartlett, chi)?;
    wilks.wilks_lambda = Some(lambda);
    Ok(TestBattery {
        lm,
        lm_tr2,
        lm_rescaled,
        wilks,
        rss: aux.rss,
    })
}

/// `LM (nT - S) / (W nT)` referred to `F(W, nT - S)`.
pub fn rescale(outcome: &TestOutcome, n: usize, t: usize, s: u64, w: u64) -> Result<TestOutcome> {
    let nt = (n * t) as u64;
    if nt <= s {
        return Err(Error::InvalidParameter(format!(
            "rescaling needs nT = {nt} above the parameter count {s}"
        )));
    }
    if w == 0 || w != outcome.dist.restriction_df() {
        return Err(Error::InvalidParameter(format!(
            "restriction count {w} does not match the statistic's {} degrees of freedom",
            outcome.dist.restriction_df()
        )));
    }
    let statistic = outcome.statistic * (nt - s) as f64 / (w as f64 * nt as f64);
    let dist = DistributionRef::F { df1: w, df2: nt - s };
    Ok(TestOutcome {
        variant: Variant::LmRescaled,
        statistic,
        dist,
        p_value: survival(dist, statistic)?,
        auxiliary_df: Some((w, s)),
        wilks_lambda: None,
        ..outcome.clone()
    })
}

fn data_scale(design: &LaggedDesign) -> f64 {
    design.y.norm()
}

/// Linearity (one regime) against a smooth transition, all variants.
pub fn linearity_tests(design: &LaggedDesign, order: usize) -> Result<TestBattery> {
    let z = build_taylor_design(&design.x, &design.s, order)?;
    let qr = PivotedQr::new(design.x.clone());
    if !qr.is_full_rank() {
        return Err(Error::RankDeficient {
            rank: qr.rank(),
            cols: qr.ncols(),
        });
    }
    let e = qr.residuals(&design.y);
    let aux = auxiliary(&e, &design.x, &z, data_scale(design))?;
    let nk = (design.n() * design.k()) as u64;
    battery(aux, 1, order, nk * (1 + order as u64), 0)
}

pub fn lm_linearity(design: &LaggedDesign, order: usize) -> Result<TestOutcome> {
    Ok(linearity_tests(design, order)?.lm)
}

pub fn lm_tr2_linearity(design: &LaggedDesign, order: usize) -> Result<TestOutcome> {
    Ok(linearity_tests(design, order)?.lm_tr2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdditiveOptions {
    pub taylor_order: usize,
    pub transitions: TransitionTreatment,
    /// Test against a null fit whose local search did not converge.
    pub allow_unconverged: bool,
}

impl Default for AdditiveOptions {
    fn default() -> Self {
        Self {
            taylor_order: DEFAULT_TAYLOR_ORDER,
            transitions: TransitionTreatment::Estimated,
            allow_unconverged: false,
        }
    }
}

/// No additional transition, given a fitted `m`-regime null, all variants.
pub fn additive_tests(
    design: &LaggedDesign,
    null: &EstimationResult,
    opts: &AdditiveOptions,
) -> Result<TestBattery> {
    if !null.converged && !opts.allow_unconverged {
        return Err(Error::NotFitted);
    }
    let model = match &null.model {
        FittedModel::Vlstar(m) => m,
        FittedModel::Vtar(_) => {
            return Err(Error::InvalidParameter(
                "threshold nulls enter the test through their logistic approximation".into(),
            ))
        }
    };
    if null.residuals.nrows() != design.nobs() {
        return Err(Error::DimensionMismatch(
            "null residuals do not match the design".into(),
        ));
    }
    let m = model.regimes();
    let (regressors, extra) = match opts.transitions {
        TransitionTreatment::Estimated => (
            additive_regressors(model, design)?,
            (2 * (m - 1) * model.n) as u64,
        ),
        TransitionTreatment::Known => (
            transition_regressors(&design.x, &design.s, &model.transitions)?,
            0,
        ),
    };
    let z = build_taylor_design(&design.x, &design.s, opts.taylor_order)?;
    let aux = auxiliary(&null.residuals, &regressors, &z, data_scale(design))?;
    let nk = (design.n() * design.k()) as u64;
    battery(aux, m, opts.taylor_order, nk * (1 + opts.taylor_order as u64), extra)
}

pub fn lm_additive(
    design: &LaggedDesign,
    null: &EstimationResult,
    opts: &AdditiveOptions,
) -> Result<TestOutcome> {
    Ok(additive_tests(design, null, opts)?.lm)
}

/// Wilks' Λ with Bartlett's chi-square approximation.
pub fn wilks(rss: &RssPair, n: usize, t: usize, cd_x: usize, cd_z: usize) -> Result<TestOutcome> {
    if t <= cd_x + cd_z {
        return Err(Error::InsufficientData {
            needed: cd_x + cd_z + 1,
            got: t,
        });
    }
    let lambda = rss.lambda()?;
    let stat = bartlett_statistic(lambda, n as u64, (t - cd_x - cd_z) as u64, cd_z as u64);
    let dist = DistributionRef::ChiSquare {
        df: (n * cd_z) as u64,
    };
    Ok(TestOutcome {
        variant: Variant::Wilks,
        null_regimes: 1,
        statistic: stat,
        dist,
        p_value: survival(dist, stat)?,
        taylor_order: 0,
        auxiliary_df: None,
        wilks_lambda: Some(lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::{fit_fixed_transitions, fit_vlstar_2regime, GridSpec};
    use crate::model::{build_regressors, simulate_vlstar, TransitionSource, TransitionSpec, VlstarModel};
    use crate::statcore::RngStream;
    use proptest::prelude::*;

    fn var_design(n: usize, t: usize, seed: u64) -> LaggedDesign {
        let b = Matrix::from_fn(1 + n, n, |r, c| if r == c + 1 { 0.5 } else if r > 0 { 0.05 } else { 0.1 });
        let model = VlstarModel::new(n, 1, true, b, vec![], Matrix::identity(n, n)).unwrap();
        let panel = simulate_vlstar(
            &model,
            t + 1,
            &TransitionSource::Ar1 { phi: 0.9 },
            RngStream::new(seed, 0),
            100,
        )
        .unwrap();
        build_regressors(&panel, 1, true).unwrap()
    }

    fn two_regime_design(t: usize, seed: u64) -> LaggedDesign {
        let n = 3;
        let mut b = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] = if i == j { 0.4 } else { 0.1 };
                b[(i, n + j)] = -b[(i, j)];
            }
        }
        let model = VlstarModel::new(
            n,
            1,
            false,
            b,
            vec![TransitionSpec::shared(2.0, 2.0)],
            Matrix::identity(n, n),
        )
        .unwrap();
        let panel = simulate_vlstar(
            &model,
            t + 1,
            &TransitionSource::Ar1 { phi: 0.95 },
            RngStream::new(seed, 0),
            200,
        )
        .unwrap();
        build_regressors(&panel, 1, true).unwrap()
    }

    fn kronecker_lm(design: &LaggedDesign, order: usize) -> f64 {
        let t = design.nobs() as f64;
        let x = &design.x;
        let z = build_taylor_design(x, &design.s, order).unwrap();
        let xtx_inv = (x.transpose() * x).try_inverse().unwrap();
        let px = x * xtx_inv * x.transpose();
        let m = Matrix::identity(x.nrows(), x.nrows()) - px;
        let e = &m * &design.y;
        let omega_inv = ((e.transpose() * &e) / t).try_inverse().unwrap();
        let a_inv = (z.transpose() * &m * &z).try_inverse().unwrap();
        let g = z.transpose() * &e;
        let vec_g = nalgebra::DVector::from_column_slice(g.as_slice());
        let middle = omega_inv.kronecker(&a_inv);
        (vec_g.transpose() * middle * vec_g)[(0, 0)]
    }

    #[test]
    fn linearity_df_for_three_series() {
        let d = var_design(3, 200, 1);
        let b = linearity_tests(&d, 3).unwrap();
        assert_eq!(b.lm.dist, DistributionRef::ChiSquare { df: 36 });
        assert_eq!(b.lm_rescaled.dist, DistributionRef::F { df1: 36, df2: 600 - 48 });
        assert_eq!(b.lm_rescaled.auxiliary_df, Some((36, 48)));
        assert!(b.lm.statistic >= 0.0 && b.lm_tr2.statistic >= 0.0);
    }

    #[test]
    fn noiseless_linear_data_gives_zero() {
        let mut d = var_design(2, 100, 2);
        let b = Matrix::from_fn(3, 2, |r, c| 0.1 * (r + c) as f64);
        d.y = &d.x * b;
        let out = linearity_tests(&d, 3).unwrap();
        assert_eq!(out.lm.statistic, 0.0);
        assert_eq!(out.lm.p_value, 1.0);
        assert_eq!(out.wilks.statistic, 0.0);
    }

    #[test]
    fn trace_form_matches_kronecker_form() {
        for seed in 0..5 {
            let d = var_design(3, 150, 100 + seed);
            let lm = lm_linearity(&d, 3).unwrap().statistic;
            let oracle = kronecker_lm(&d, 3);
            assert!((lm - oracle).abs() < 1e-8 * oracle.max(1.0), "{lm} vs {oracle}");
        }
    }

    #[test]
    fn tr2_bounds() {
        let t = 40;
        let z = Matrix::from_fn(t, 2, |r, c| ((r * (c + 2)) as f64 * 0.37).sin());
        let x = Matrix::from_element(t, 1, 1.0);
        let noise = Matrix::from_fn(t, 2, |r, c| ((r + 7 * c) as f64 * 1.91).cos());
        // residuals orthogonal to [x, z]: Taylor block explains nothing
        let joint = PivotedQr::new(Matrix::from_fn(t, 3, |r, c| if c == 0 { 1.0 } else { z[(r, c - 1)] }));
        let e0 = joint.residuals(&noise);
        let a = auxiliary(&e0, &x, &z, 1.0).unwrap();
        assert!(a.tr2.abs() < 1e-9 && a.lm.abs() < 1e-9);
        // residuals inside the partialled Taylor space: perfect auxiliary fit
        let z_tilde = PivotedQr::new(x.clone()).residuals(&z);
        let e1 = &z_tilde * Matrix::from_row_slice(2, 2, &[1.0, 0.5, -0.3, 2.0]);
        let b = auxiliary(&e1, &x, &z, 1.0).unwrap();
        assert!((b.tr2 - (t * 2) as f64).abs() < 1e-8);
    }

    #[test]
    fn rescale_arithmetic() {
        let base = TestOutcome {
            variant: Variant::Lm,
            null_regimes: 1,
            statistic: 36.0,
            dist: DistributionRef::ChiSquare { df: 36 },
            p_value: 0.5,
            taylor_order: 3,
            auxiliary_df: None,
            wilks_lambda: None,
        };
        let r = rescale(&base, 3, 400, 12, 36).unwrap();
        assert!((r.statistic - 0.99).abs() < 1e-14);
        assert_eq!(r.dist, DistributionRef::F { df1: 36, df2: 1188 });
        let zero = TestOutcome {
            statistic: 0.0,
            ..base.clone()
        };
        assert_eq!(rescale(&zero, 3, 400, 12, 36).unwrap().statistic, 0.0);
        assert!(rescale(&base, 3, 4, 12, 36).is_err());
    }

    #[test]
    fn wilks_limits() {
        let rss = RssPair {
            rss0: Matrix::identity(3, 3) * 5.0,
            rss1: Matrix::identity(3, 3) * 5.0,
        };
        let w = wilks(&rss, 3, 400, 4, 12).unwrap();
        assert_eq!(w.wilks_lambda, Some(1.0));
        assert_eq!(w.statistic, 0.0);
        assert_eq!(w.p_value, 1.0);
        let tiny = RssPair {
            rss0: Matrix::identity(3, 3),
            rss1: Matrix::identity(3, 3) * 1e-8,
        };
        assert!(wilks(&tiny, 3, 400, 4, 12).unwrap().p_value < 1e-12);
        let singular = RssPair {
            rss0: Matrix::zeros(3, 3),
            rss1: Matrix::zeros(3, 3),
        };
        assert_eq!(wilks(&singular, 3, 400, 4, 12), Err(Error::SingularRss));
    }

    #[test]
    fn constant_transition_variable_is_degenerate() {
        let mut d = var_design(2, 100, 5);
        d.s.iter_mut().for_each(|v| *v = 0.7);
        assert!(matches!(linearity_tests(&d, 3), Err(Error::DegenerateDesign(_))));
    }

    #[test]
    fn rss_difference_is_psd() {
        for seed in 0..5 {
            let d = var_design(3, 120, 40 + seed);
            let b = linearity_tests(&d, 3).unwrap();
            assert!(b.rss.difference_min_eigenvalue() > -1e-9);
        }
    }

    #[test]
    fn additive_df_and_shared_equivalence() {
        let d = two_regime_design(400, 3);
        let fit = fit_vlstar_2regime(&d, &GridSpec::default()).unwrap();
        let opts = AdditiveOptions {
            allow_unconverged: true,
            ..Default::default()
        };
        let a = additive_tests(&d, &fit, &opts).unwrap();
        assert_eq!(a.lm.dist, DistributionRef::ChiSquare { df: 36 });
        assert_eq!(a.lm_rescaled.auxiliary_df, Some((36, 54)));
        assert_eq!(a.lm.null_regimes, 2);
        assert!(a.rss.difference_min_eigenvalue() > -1e-9);

        let mut per_eq = fit.clone();
        if let FittedModel::Vlstar(m) = &mut per_eq.model {
            let tr = &m.transitions[0];
            m.transitions[0] =
                TransitionSpec::per_equation(vec![tr.gamma(0); 3], vec![tr.location(0); 3]).unwrap();
        }
        let b = additive_tests(&d, &per_eq, &opts).unwrap();
        assert!((a.lm.statistic - b.lm.statistic).abs() < 1e-10);
    }

    #[test]
    fn additive_zero_when_residuals_orthogonal() {
        let d = two_regime_design(300, 8);
        let mut fit = fit_fixed_transitions(&d, vec![TransitionSpec::shared(2.0, 2.0)]).unwrap();
        let model = fit.model.as_vlstar().unwrap().clone();
        let k_reg = additive_regressors(&model, &d).unwrap();
        let z = build_taylor_design(&d.x, &d.s, 3).unwrap();
        let mut joint = Matrix::zeros(d.nobs(), k_reg.ncols() + z.ncols());
        joint.columns_mut(0, k_reg.ncols()).copy_from(&k_reg);
        joint.columns_mut(k_reg.ncols(), z.ncols()).copy_from(&z);
        fit.residuals = PivotedQr::new(joint).residuals(&d.y);
        let a = additive_tests(&d, &fit, &AdditiveOptions::default()).unwrap();
        assert!(a.lm.statistic < 1e-8, "{}", a.lm.statistic);
    }

    #[test]
    fn unconverged_null_needs_override() {
        let d = two_regime_design(200, 9);
        let mut fit = fit_fixed_transitions(&d, vec![TransitionSpec::shared(2.0, 2.0)]).unwrap();
        fit.converged = false;
        assert_eq!(
            additive_tests(&d, &fit, &AdditiveOptions::default()),
            Err(Error::NotFitted)
        );
    }

    #[test]
    fn known_transitions_add_no_parameters() {
        let d = two_regime_design(300, 10);
        let fit = fit_fixed_transitions(&d, vec![TransitionSpec::shared(100.0, 2.0)]).unwrap();
        let opts = AdditiveOptions {
            transitions: TransitionTreatment::Known,
            ..Default::default()
        };
        let a = additive_tests(&d, &fit, &opts).unwrap();
        assert_eq!(a.lm_rescaled.auxiliary_df, Some((36, 48)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn lm_invariant_to_taylor_column_scaling(seed in 0u64..1000, scales in prop::collection::vec(0.01f64..100.0, 12)) {
            let d = var_design(3, 120, seed);
            let z = build_taylor_design(&d.x, &d.s, 3).unwrap();
            let scaled = Matrix::from_fn(z.nrows(), z.ncols(), |r, c| z[(r, c)] * scales[c]);
            let qr = PivotedQr::new(d.x.clone());
            let e = qr.residuals(&d.y);
            let a = auxiliary(&e, &d.x, &z, d.y.norm()).unwrap();
            let b = auxiliary(&e, &d.x, &scaled, d.y.norm()).unwrap();
            prop_assert!((a.lm - b.lm).abs() < 1e-7 * a.lm.max(1.0));
        }
    }
}
