//! Model representations, transition functions and regressor construction.

mod design;
mod simulate;

pub use design::{build_regressors, build_taylor_design, LaggedDesign};
pub use simulate::{simulate_vlstar, simulate_vtar, TransitionSource, DEFAULT_BURN_IN, OVERFLOW_BOUND};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statcore::{check_finite, Matrix};

/// Logistic transition `1 / (1 + exp(-gamma (s - c)))`.
pub fn logistic(s: f64, gamma: f64, location: f64) -> f64 {
    logistic_pair(s, gamma, location).0
}

/// `(g, 1 - g)`, each computed without cancellation.
pub fn logistic_pair(s: f64, gamma: f64, location: f64) -> (f64, f64) {
    let z = gamma * (s - location);
    (1.0 / (1.0 + (-z).exp()), 1.0 / (1.0 + z.exp()))
}

/// `dg/dgamma = (s - c) g (1 - g)`.
pub fn logistic_dgamma(s: f64, gamma: f64, location: f64) -> f64 {
    let (g, h) = logistic_pair(s, gamma, location);
    (s - location) * g * h
}

/// `dg/dc = -gamma g (1 - g)`.
pub fn logistic_dlocation(s: f64, gamma: f64, location: f64) -> f64 {
    let (g, h) = logistic_pair(s, gamma, location);
    -gamma * g * h
}

/// Slope and location of one transition. A single pair is the common
/// scalar transition `G_t = g(s_t) I_n`; `n` pairs give each equation its
/// own logistic in the same transition variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub gammas: Vec<f64>,
    pub locations: Vec<f64>,
}

impl TransitionSpec {
    pub fn shared(gamma: f64, location: f64) -> Self {
        Self {
            gammas: vec![gamma],
            locations: vec![location],
        }
    }

    pub fn per_equation(gammas: Vec<f64>, locations: Vec<f64>) -> Result<Self> {
        if gammas.len() != locations.len() || gammas.is_empty() {
            return Err(Error::DimensionMismatch(
                "per-equation transition needs matching non-empty slope and location lists".into(),
            ));
        }
        Ok(Self { gammas, locations })
    }

    pub fn is_shared(&self) -> bool {
        self.gammas.len() == 1
    }

    /// Shared, or per-equation with identical values in every equation.
    pub fn is_uniform(&self) -> bool {
        self.gammas.iter().all(|&g| g == self.gammas[0])
            && self.locations.iter().all(|&c| c == self.locations[0])
    }

    /// Slope for equation `i`.
    pub fn gamma(&self, i: usize) -> f64 {
        self.gammas[if self.is_shared() { 0 } else { i }]
    }

    pub fn location(&self, i: usize) -> f64 {
        self.locations[if self.is_shared() { 0 } else { i }]
    }

    /// Representative location (the mean over equations) used for ordering.
    pub fn center(&self) -> f64 {
        self.locations.iter().sum::<f64>() / self.locations.len() as f64
    }

    /// Diagonal of `G_t` for an `n`-equation system.
    pub fn diagonal(&self, s: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| logistic(s, self.gamma(i), self.location(i)))
            .collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if !self.is_shared() && self.gammas.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "transition has {} slopes for {n} equations",
                self.gammas.len()
            )));
        }
        for (&g, &c) in self.gammas.iter().zip(&self.locations) {
            if !(g >= 0.0) || !g.is_finite() || !c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "transition slope must be finite and nonnegative (gamma = {g}, c = {c})"
                )));
            }
        }
        Ok(())
    }
}

/// `T x n` observations with an aligned transition variable.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePanel {
    pub y: Matrix,
    pub s: Vec<f64>,
    pub labels: Vec<String>,
}

impl TimePanel {
    pub fn new(y: Matrix, s: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if s.len() != y.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} observations but {} transition values",
                y.nrows(),
                s.len()
            )));
        }
        if labels.len() != y.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} series but {} labels",
                y.ncols(),
                labels.len()
            )));
        }
        check_finite(&y)?;
        if let Some(i) = s.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: y.ncols() });
        }
        Ok(Self { y, s, labels })
    }

    /// Panel with generated labels `y1..yn`.
    pub fn unlabeled(y: Matrix, s: Vec<f64>) -> Result<Self> {
        let labels = (1..=y.ncols()).map(|i| format!("y{i}")).collect();
        Self::new(y, s, labels)
    }

    pub fn len(&self) -> usize {
        self.y.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.y.nrows() == 0
    }

    pub fn n_series(&self) -> usize {
        self.y.ncols()
    }

    /// Enforce `T > p n + 1`, the minimum for any test.
    pub fn ensure_testable(&self, p: usize) -> Result<()> {
        let needed = p * self.n_series() + 1;
        if self.len() <= needed {
            return Err(Error::InsufficientData {
                needed,
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// Smooth-transition VAR `y_t = sum_d G_t^(d-1) B_d' x_t + e_t` with
/// `G^(0) = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct VlstarModel {
    pub n: usize,
    pub p: usize,
    pub intercept: bool,
    /// `k x (m n)`, blocks `B_1 .. B_m` side by side.
    pub b: Matrix,
    /// `m - 1` transitions, locations increasing.
    pub transitions: Vec<TransitionSpec>,
    pub omega: Matrix,
}

impl VlstarModel {
    pub fn new(
        n: usize,
        p: usize,
        intercept: bool,
        b: Matrix,
        transitions: Vec<TransitionSpec>,
        omega: Matrix,
    ) -> Result<Self> {
        let model = Self {
            n,
            p,
            intercept,
            b,
            transitions,
            omega,
        };
        model.validate()?;
        Ok(model)
    }

    /// Number of regressors `k = [1 +] p n`.
    pub fn k(&self) -> usize {
        usize::from(self.intercept) + self.p * self.n
    }

    pub fn regimes(&self) -> usize {
        self.transitions.len() + 1
    }

    /// Coefficient block `B_d` (`d` counted from 1).
    pub fn block(&self, d: usize) -> Matrix {
        self.b.columns((d - 1) * self.n, self.n).into_owned()
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("model needs at least one series".into()));
        }
        if self.p == 0 {
            return Err(Error::InsufficientLags);
        }
        let m = self.regimes();
        if self.b.nrows() != self.k() || self.b.ncols() != m * self.n {
            return Err(Error::DimensionMismatch(format!(
                "B is {}x{}, expected {}x{}",
                self.b.nrows(),
                self.b.ncols(),
                self.k(),
                m * self.n
            )));
        }
        for t in &self.transitions {
            t.validate(self.n)?;
        }
        for w in self.transitions.windows(2) {
            if !(w[0].center() < w[1].center()) {
                return Err(Error::InvalidParameter(
                    "transition locations must be strictly increasing".into(),
                ));
            }
        }
        validate_omega(&self.omega, self.n)?;
        check_finite(&self.b)
    }

    /// Conditional mean `Psi_t' B' x_t`.
    pub fn evaluate(&self, x_t: &[f64], s_t: f64) -> Vec<f64> {
        evaluate_vlstar(self, x_t, s_t)
    }
}

fn validate_omega(omega: &Matrix, n: usize) -> Result<()> {
    if omega.nrows() != n || omega.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "omega is {}x{}, expected {n}x{n}",
            omega.nrows(),
            omega.ncols()
        )));
    }
    check_finite(omega)?;
    if (omega - omega.transpose()).abs().max() > 1e-10 * (1.0 + omega.abs().max()) {
        return Err(Error::InvalidParameter("omega must be symmetric".into()));
    }
    // zero covariance is allowed (noiseless simulation); otherwise PSD
    if crate::statcore::min_eigenvalue(omega) < -1e-12 {
        return Err(Error::InvalidParameter("omega must be positive semidefinite".into()));
    }
    Ok(())
}

/// `sum_d G_t^(d-1) B_d' x_t`.
pub fn evaluate_vlstar(model: &VlstarModel, x_t: &[f64], s_t: f64) -> Vec<f64> {
    let n = model.n;
    let k = model.k();
    debug_assert_eq!(x_t.len(), k);
    let mut out = vec![0.0; n];
    for d in 0..model.regimes() {
        let weights = if d == 0 {
            vec![1.0; n]
        } else {
            model.transitions[d - 1].diagonal(s_t, n)
        };
        for (i, (o, w)) in out.iter_mut().zip(&weights).enumerate() {
            let col = d * n + i;
            let mut acc = 0.0;
            for (r, xr) in x_t.iter().enumerate() {
                acc += model.b[(r, col)] * xr;
            }
            *o += w * acc;
        }
    }
    out
}

/// Threshold VAR in additive form
/// `y_t = Phi*_1' x_t + sum_{d>=2} 1(s_t > c_{d-1}) Phi*_d' x_t + e_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VtarModel {
    pub n: usize,
    pub p: usize,
    pub intercept: bool,
    /// `k x (m n)`, blocks `Phi*_1 .. Phi*_m`.
    pub blocks: Matrix,
    pub thresholds: Vec<f64>,
    pub omega: Matrix,
}

impl VtarModel {
    pub fn new(
        n: usize,
        p: usize,
        intercept: bool,
        blocks: Matrix,
        thresholds: Vec<f64>,
        omega: Matrix,
    ) -> Result<Self> {
        let k = usize::from(intercept) + p * n;
        if p == 0 {
            return Err(Error::InsufficientLags);
        }
        if blocks.nrows() != k || blocks.ncols() != (thresholds.len() + 1) * n {
            return Err(Error::DimensionMismatch(format!(
                "coefficient blocks are {}x{}, expected {k}x{}",
                blocks.nrows(),
                blocks.ncols(),
                (thresholds.len() + 1) * n
            )));
        }
        for w in thresholds.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidParameter(
                    "thresholds must be strictly increasing".into(),
                ));
            }
        }
        if thresholds.iter().any(|c| c.is_nan()) {
            return Err(Error::InvalidParameter("threshold is NaN".into()));
        }
        validate_omega(&omega, n)?;
        check_finite(&blocks)?;
        Ok(Self {
            n,
            p,
            intercept,
            blocks,
            thresholds,
            omega,
        })
    }

    /// Build from regime-wise coefficients `Phi_1 .. Phi_m` (each `k x n`),
    /// regime `d` being active for `c_{d-1} < s_t <= c_d`.
    pub fn from_regimes(
        n: usize,
        p: usize,
        intercept: bool,
        regimes: &[Matrix],
        thresholds: Vec<f64>,
        omega: Matrix,
    ) -> Result<Self> {
        if regimes.len() != thresholds.len() + 1 {
            return Err(Error::DimensionMismatch(
                "need one coefficient matrix per regime".into(),
            ));
        }
        let k = regimes[0].nrows();
        let mut blocks = Matrix::zeros(k, regimes.len() * n);
        for (d, phi) in regimes.iter().enumerate() {
            let delta = if d == 0 {
                phi.clone()
            } else {
                phi - &regimes[d - 1]
            };
            blocks.columns_mut(d * n, n).copy_from(&delta);
        }
        Self::new(n, p, intercept, blocks, thresholds, omega)
    }

    pub fn k(&self) -> usize {
        usize::from(self.intercept) + self.p * self.n
    }

    pub fn regimes(&self) -> usize {
        self.thresholds.len() + 1
    }

    /// Regime-wise coefficient matrix `Phi_d` (`d` from 1).
    pub fn regime_coefficients(&self, d: usize) -> Matrix {
        let mut acc = self.blocks.columns(0, self.n).into_owned();
        for j in 1..d {
            acc += self.blocks.columns(j * self.n, self.n);
        }
        acc
    }

    pub fn evaluate(&self, x_t: &[f64], s_t: f64) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for d in 0..self.regimes() {
            if d > 0 && !(s_t > self.thresholds[d - 1]) {
                continue;
            }
            for (i, o) in out.iter_mut().enumerate() {
                let col = d * n + i;
                *o += x_t
                    .iter()
                    .enumerate()
                    .map(|(r, xr)| self.blocks[(r, col)] * xr)
                    .sum::<f64>();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn logistic_at_location_is_half() {
        assert_eq!(logistic(2.0, 2.0, 2.0), 0.5);
    }

    #[test]
    fn logistic_closed_form_value() {
        let v = logistic(4.0, 2.0, 2.0);
        assert!((v - 1.0 / (1.0 + (-4.0f64).exp())).abs() < 1e-15);
        assert!((v - 0.982014).abs() < 1e-6);
    }

    #[test]
    fn logistic_zero_slope_is_half() {
        for s in [-10.0, 0.0, 3.0, 1e3] {
            assert_eq!(logistic(s, 0.0, 2.0), 0.5);
        }
    }

    #[test]
    fn logistic_derivatives_at_symmetry_point() {
        assert_eq!(logistic_dgamma(2.0, 2.0, 2.0), 0.0);
        assert_eq!(logistic_dlocation(2.0, 2.0, 2.0), -0.5);
    }

    #[test]
    fn steep_logistic_approximates_indicator() {
        for gamma in [200.0, 500.0, 1e4] {
            for delta in [0.1, 0.5, 3.0, -0.1, -0.7, -20.0] {
                let s = 1.5 + delta;
                let ind = if s > 1.5 { 1.0 } else { 0.0 };
                assert!((logistic(s, gamma, 1.5) - ind).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn logistic_point_symmetry(c in -5.0f64..5.0, gamma in 0.01f64..50.0, delta in 0.0f64..10.0) {
            let sum = logistic(c + delta, gamma, c) + logistic(c - delta, gamma, c);
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }

        #[test]
        fn logistic_bounded_and_increasing(c in -5.0f64..5.0, gamma in 0.01f64..5.0, s in -5.0f64..5.0, ds in 0.01f64..2.0) {
            let a = logistic(s, gamma, c);
            let b = logistic(s + ds, gamma, c);
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!(b >= a);
            if a > 1e-6 && a < 1.0 - 1e-6 {
                prop_assert!(b > a);
            }
        }
    }

    fn two_regime(gamma: f64) -> VlstarModel {
        let b = Matrix::from_fn(3, 4, |r, c| 0.1 * (r as f64 + 1.0) - 0.05 * c as f64);
        VlstarModel::new(
            2,
            1,
            true,
            b,
            vec![TransitionSpec::shared(gamma, 0.5)],
            Matrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn single_regime_is_linear_var() {
        let b = Matrix::from_fn(3, 2, |r, c| r as f64 - c as f64 * 0.5);
        let m = VlstarModel::new(2, 1, true, b.clone(), vec![], Matrix::identity(2, 2)).unwrap();
        let x = [1.0, 0.3, -2.0];
        let expected = b.transpose() * nalgebra::DVector::from_column_slice(&x);
        let got = evaluate_vlstar(&m, &x, 123.0);
        for i in 0..2 {
            assert!((got[i] - expected[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_slope_collapses_to_half_blend() {
        let m = two_regime(0.0);
        let x = [1.0, -0.4, 0.9];
        let combined = m.block(1) + m.block(2) * 0.5;
        let expected = combined.transpose() * nalgebra::DVector::from_column_slice(&x);
        let got = m.evaluate(&x, 7.0);
        for i in 0..2 {
            assert!((got[i] - expected[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn steep_slope_saturates_upper_regime() {
        let m = two_regime(200.0);
        let x = [1.0, 0.7, -1.3];
        let combined = m.block(1) + m.block(2);
        let expected = combined.transpose() * nalgebra::DVector::from_column_slice(&x);
        let got = m.evaluate(&x, 1.5);
        for i in 0..2 {
            assert!((got[i] - expected[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn locations_must_increase() {
        let b = Matrix::zeros(3, 6);
        let r = VlstarModel::new(
            2,
            1,
            true,
            b,
            vec![TransitionSpec::shared(2.0, 4.0), TransitionSpec::shared(2.0, 2.0)],
            Matrix::identity(2, 2),
        );
        assert!(matches!(r, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn wrong_block_shape_rejected() {
        let r = VlstarModel::new(
            2,
            1,
            true,
            Matrix::zeros(3, 3),
            vec![],
            Matrix::identity(2, 2),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn vtar_regime_round_trip() {
        let phi1 = Matrix::from_fn(2, 2, |r, c| if r == c { 0.4 } else { 0.1 });
        let phi2 = -&phi1;
        let phi3 = Matrix::identity(2, 2) * -0.7;
        let m = VtarModel::from_regimes(
            2,
            1,
            false,
            &[phi1.clone(), phi2.clone(), phi3.clone()],
            vec![2.0, 4.0],
            Matrix::identity(2, 2),
        )
        .unwrap();
        assert!((m.regime_coefficients(1) - &phi1).abs().max() < 1e-15);
        assert!((m.regime_coefficients(3) - &phi3).abs().max() < 1e-15);
        let x = [0.5, -1.0];
        let at = |s: f64, phi: &Matrix| {
            let v = phi.transpose() * nalgebra::DVector::from_column_slice(&x);
            let got = m.evaluate(&x, s);
            (0..2).all(|i| (got[i] - v[i]).abs() < 1e-14)
        };
        assert!(at(0.0, &phi1));
        assert!(at(3.0, &phi2));
        assert!(at(9.0, &phi3));
    }

    #[test]
    fn panel_validation() {
        let y = Matrix::zeros(4, 2);
        assert!(TimePanel::unlabeled(y.clone(), vec![0.0; 3]).is_err());
        assert!(TimePanel::unlabeled(y.clone(), vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
        let p = TimePanel::unlabeled(y, vec![0.0; 4]).unwrap();
        assert_eq!(p.labels, vec!["y1", "y2"]);
        assert!(p.ensure_testable(1).is_ok());
        assert!(p.ensure_testable(2).is_err());
    }
}
