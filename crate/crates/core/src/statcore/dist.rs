//! Reference distributions for p-values.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

/// A null distribution a statistic is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionRef {
    ChiSquare {
        df: u64,
    },
    F {
        df1: u64,
        df2: u64,
    },
    /// Wilks' Λ(n, error_df, hypothesis_df), evaluated through Bartlett's
    /// chi-square approximation. The argument of [`survival`] is Λ itself.
    WilksBartlett {
        n: u64,
        error_df: u64,
        hypothesis_df: u64,
    },
}

impl DistributionRef {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DistributionRef::ChiSquare { df } => df > 0,
            DistributionRef::F { df1, df2 } => df1 > 0 && df2 > 0,
            DistributionRef::WilksBartlett {
                n,
                error_df,
                hypothesis_df,
            } => n > 0 && error_df > 0 && hypothesis_df > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "degrees of freedom must be positive: {self:?}"
            )))
        }
    }

    /// Degrees of freedom of the chi-square or the numerator of the F.
    pub fn restriction_df(&self) -> u64 {
        match *self {
            DistributionRef::ChiSquare { df } => df,
            DistributionRef::F { df1, .. } => df1,
            DistributionRef::WilksBartlett {
                n, hypothesis_df, ..
            } => n * hypothesis_df,
        }
    }
}

/// Bartlett's transform of Wilks' Λ:
/// `-(error_df - (n - hypothesis_df + 1) / 2) ln Λ`, asymptotically
/// chi-square with `n * hypothesis_df` degrees of freedom.
pub fn bartlett_statistic(lambda: f64, n: u64, error_df: u64, hypothesis_df: u64) -> f64 {
    if lambda <= 0.0 {
        return f64::INFINITY;
    }
    let multiplier = error_df as f64 - 0.5 * (n as f64 - hypothesis_df as f64 + 1.0);
    (-multiplier * lambda.ln()).max(0.0)
}

/// Upper-tail probability `P(X > x)` under `dist`.
pub fn survival(dist: DistributionRef, x: f64) -> Result<f64> {
    dist.validate()?;
    if x.is_nan() {
        return Err(Error::InvalidParameter("statistic is NaN".into()));
    }
    let p = match dist {
        DistributionRef::ChiSquare { df } => {
            if x < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "chi-square argument {x} is negative"
                )));
            }
            chi_square_sf(df, x)
        }
        DistributionRef::F { df1, df2 } => {
            if x < 0.0 {
                return Err(Error::InvalidParameter(format!("F argument {x} is negative")));
            }
            if x == 0.0 {
                1.0
            } else if x.is_infinite() {
                0.0
            } else {
                FisherSnedecor::new(df1 as f64, df2 as f64)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?
                    .sf(x)
            }
        }
        DistributionRef::WilksBartlett {
            n,
            error_df,
            hypothesis_df,
        } => {
            let stat = bartlett_statistic(x, n, error_df, hypothesis_df);
            chi_square_sf(n * hypothesis_df, stat)
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

fn chi_square_sf(df: u64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    ChiSquared::new(df as f64)
        .map(|d| d.sf(x))
        .unwrap_or(f64::NAN)
}

/// One-sample Kolmogorov–Smirnov test against Uniform(0, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_uniform(sample: &[f64]) -> Result<KsOutcome> {
    if sample.is_empty() {
        return Err(Error::InsufficientData { needed: 0, got: 0 });
    }
    let mut sorted = sample.to_vec();
    if sorted.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("NaN in KS sample".into()));
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &u) in sorted.iter().enumerate() {
        let u = u.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - u).max(u - i as f64 / n);
    }
    // Stephens' finite-sample adjustment of the Kolmogorov limit.
    let sq = n.sqrt();
    let t = (sq + 0.12 + 0.11 / sq) * d;
    Ok(KsOutcome {
        statistic: d,
        p_value: kolmogorov_sf(t),
    })
}

/// `P(K > t)` for the Kolmogorov distribution.
fn kolmogorov_sf(t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if t < 0.3 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_at_zero_is_one() {
        let p = survival(DistributionRef::ChiSquare { df: 36 }, 0.0).unwrap();
        assert_eq!(p, 1.0);
    }

    #[test]
    fn f_tail_limit() {
        let d = DistributionRef::F { df1: 2, df2: 10 };
        assert_eq!(survival(d, f64::INFINITY).unwrap(), 0.0);
        assert!(survival(d, 1e6).unwrap() < 1e-9);
        assert_eq!(survival(d, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn nonpositive_df_rejected() {
        assert!(matches!(
            survival(DistributionRef::ChiSquare { df: 0 }, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(survival(DistributionRef::F { df1: 3, df2: 0 }, 1.0).is_err());
    }

    #[test]
    fn negative_argument_rejected() {
        assert!(survival(DistributionRef::ChiSquare { df: 2 }, -1.0).is_err());
    }

    #[test]
    fn wilks_unit_lambda_has_unit_p_value() {
        let d = DistributionRef::WilksBartlett {
            n: 3,
            error_df: 380,
            hypothesis_df: 12,
        };
        assert_eq!(bartlett_statistic(1.0, 3, 380, 12), 0.0);
        assert_eq!(survival(d, 1.0).unwrap(), 1.0);
        assert_eq!(survival(d, 0.0).unwrap(), 0.0);
        assert!(survival(d, 1e-12).unwrap() < 1e-12);
    }

    #[test]
    fn chi_square_two_df_closed_form() {
        // chi-square(2) is exponential with mean 2
        for x in [0.1, 1.0, 5.0, 30.0] {
            let p = survival(DistributionRef::ChiSquare { df: 2 }, x).unwrap();
            assert!((p - (-x / 2.0).exp()).abs() < 1e-13);
        }
    }

    #[test]
    fn ks_rejects_obvious_nonuniform() {
        let sample: Vec<f64> = (0..200).map(|i| (i as f64 / 200.0).powi(4)).collect();
        assert!(ks_uniform(&sample).unwrap().p_value < 1e-6);
        let grid: Vec<f64> = (0..200).map(|i| (i as f64 + 0.5) / 200.0).collect();
        assert!(ks_uniform(&grid).unwrap().p_value > 0.99);
    }

    #[test]
    fn kolmogorov_known_quantiles() {
        // classical critical values of the limiting distribution
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 1e-3);
    }
}
