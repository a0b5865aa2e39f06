use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::statcore::{Matrix, RngStream};

use super::{TimePanel, VlstarModel, VtarModel};

pub const DEFAULT_BURN_IN: usize = 200;

/// Any simulated value beyond this magnitude aborts the path as explosive.
pub const OVERFLOW_BOUND: f64 = 1e8;

/// Where the transition variable comes from during simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionSource {
    /// `s_t = phi s_{t-1} + eta_t`, `eta_t ~ N(0, 1)`, `s_0 = 0`.
    Ar1 { phi: f64 },
    /// Exogenous path covering burn-in and sample (`burn_in + t` values).
    Provided(Vec<f64>),
}

impl TransitionSource {
    fn path(&self, len: usize, stream: RngStream) -> Result<Vec<f64>> {
        match self {
            TransitionSource::Ar1 { phi } => {
                if !phi.is_finite() {
                    return Err(Error::InvalidParameter("AR coefficient must be finite".into()));
                }
                let mut rng = stream.generator();
                let mut prev = 0.0;
                Ok((0..len)
                    .map(|_| {
                        let e: f64 = rng.sample(StandardNormal);
                        prev = phi * prev + e;
                        prev
                    })
                    .collect())
            }
            TransitionSource::Provided(s) => {
                if s.len() != len {
                    return Err(Error::DimensionMismatch(format!(
                        "provided transition path has {} values, need {len}",
                        s.len()
                    )));
                }
                if let Some(i) = s.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: 0 });
                }
                Ok(s.clone())
            }
        }
    }
}

/// A factor `A` with `A A' = omega`; tolerates a singular (even zero) omega.
fn covariance_factor(omega: &Matrix) -> Matrix {
    if let Some(ch) = omega.clone().cholesky() {
        return ch.l();
    }
    let eig = omega.clone().symmetric_eigen();
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&roots)
}

fn run(
    n: usize,
    p: usize,
    intercept: bool,
    omega: &Matrix,
    t: usize,
    burn_in: usize,
    source: &TransitionSource,
    stream: RngStream,
    mean: impl Fn(&[f64], f64) -> Vec<f64>,
) -> Result<TimePanel> {
    if t == 0 {
        return Err(Error::InvalidParameter("sample length must be positive".into()));
    }
    let total = burn_in + t;
    let s = source.path(total, stream.split(0))?;
    let factor = covariance_factor(omega);
    let mut rng = stream.split(1).generator();
    let offset = usize::from(intercept);
    // history padded with p zero vectors as initial values
    let mut hist = vec![0.0; (total + p) * n];
    let mut x = vec![0.0; offset + p * n];
    if intercept {
        x[0] = 1.0;
    }
    let mut eps = vec![0.0; n];
    for step in 0..total {
        let cur = step + p;
        for lag in 1..=p {
            let src = (cur - lag) * n;
            x[offset + (lag - 1) * n..offset + lag * n].copy_from_slice(&hist[src..src + n]);
        }
        let mu = mean(&x, s[step]);
        for e in eps.iter_mut() {
            *e = rng.sample(StandardNormal);
        }
        for i in 0..n {
            let shock: f64 = (0..n).map(|j| factor[(i, j)] * eps[j]).sum();
            let v = mu[i] + shock;
            if !v.is_finite() || v.abs() > OVERFLOW_BOUND {
                return Err(Error::Explosive {
                    step,
                    bound: OVERFLOW_BOUND,
                });
            }
            hist[cur * n + i] = v;
        }
    }
    let y = Matrix::from_row_slice(t, n, &hist[(burn_in + p) * n..]);
    TimePanel::unlabeled(y, s[burn_in..].to_vec())
}

/// Simulate `t` observations after discarding `burn_in`.
pub fn simulate_vlstar(
    model: &VlstarModel,
    t: usize,
    source: &TransitionSource,
    stream: RngStream,
    burn_in: usize,
) -> Result<TimePanel> {
    run(
        model.n,
        model.p,
        model.intercept,
        &model.omega,
        t,
        burn_in,
        source,
        stream,
        |x, s| model.evaluate(x, s),
    )
}

pub fn simulate_vtar(
    model: &VtarModel,
    t: usize,
    source: &TransitionSource,
    stream: RngStream,
    burn_in: usize,
) -> Result<TimePanel> {
    run(
        model.n,
        model.p,
        model.intercept,
        &model.omega,
        t,
        burn_in,
        source,
        stream,
        |x, s| model.evaluate(x, s),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TransitionSpec;

    fn table_dgp() -> VlstarModel {
        let n = 3;
        let mut b1 = Matrix::from_element(n, n, 0.1);
        for (i, rho) in [0.35, 0.42, 0.48].iter().enumerate() {
            b1[(i, i)] = *rho;
        }
        let mut b = Matrix::zeros(1 + n, 2 * n);
        b.view_mut((1, 0), (n, n)).copy_from(&b1);
        b.view_mut((1, n), (n, n)).copy_from(&(-&b1));
        VlstarModel::new(
            n,
            1,
            true,
            b,
            vec![TransitionSpec::shared(2.0, 2.0)],
            Matrix::identity(n, n),
        )
        .unwrap()
    }

    #[test]
    fn reproducible_and_stable() {
        let m = table_dgp();
        let src = TransitionSource::Ar1 { phi: 0.95 };
        let a = simulate_vlstar(&m, 1000, &src, RngStream::new(1, 0), DEFAULT_BURN_IN).unwrap();
        let b = simulate_vlstar(&m, 1000, &src, RngStream::new(1, 0), DEFAULT_BURN_IN).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.y.shape(), (1000, 3));
        assert!(a.y.abs().max() < 100.0);
        let c = simulate_vlstar(&m, 1000, &src, RngStream::new(1, 1), DEFAULT_BURN_IN).unwrap();
        assert_ne!(a.y, c.y);
    }

    #[test]
    fn noiseless_path_follows_recursion() {
        let mut m = table_dgp();
        m.omega = Matrix::zeros(3, 3);
        m.b[(0, 0)] = 1.0;
        let s: Vec<f64> = (0..20).map(|i| (i as f64 * 0.3).sin() * 3.0).collect();
        let panel =
            simulate_vlstar(&m, 15, &TransitionSource::Provided(s.clone()), RngStream::new(0, 0), 5)
                .unwrap();
        assert_eq!(panel.s, s[5..].to_vec());
        for t in 1..15 {
            let mut x = vec![1.0];
            x.extend(panel.y.row(t - 1).iter());
            let mu = m.evaluate(&x, panel.s[t]);
            for i in 0..3 {
                assert!((panel.y[(t, i)] - mu[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explosive_path_detected() {
        let mut m = table_dgp();
        for i in 0..3 {
            m.b[(1 + i, i)] = 1.5;
        }
        let r = simulate_vlstar(
            &m,
            500,
            &TransitionSource::Ar1 { phi: 0.95 },
            RngStream::new(3, 0),
            DEFAULT_BURN_IN,
        );
        assert!(matches!(r, Err(Error::Explosive { .. })));
    }

    #[test]
    fn vtar_simulation_runs() {
        let phi1 = Matrix::from_fn(2, 2, |r, c| if r == c { 0.4 } else { 0.1 });
        let mut r1 = Matrix::zeros(3, 2);
        r1.view_mut((1, 0), (2, 2)).copy_from(&phi1);
        let m = VtarModel::from_regimes(2, 1, true, &[r1.clone(), -r1], vec![2.0], Matrix::identity(2, 2))
            .unwrap();
        let p = simulate_vtar(&m, 300, &TransitionSource::Ar1 { phi: 0.95 }, RngStream::new(5, 2), 200)
            .unwrap();
        assert_eq!(p.len(), 300);
    }
}
