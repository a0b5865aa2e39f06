use crate::error::{Error, Result};
use crate::statcore::Matrix;

use super::TimePanel;

/// Lagged regressors aligned with the dependent block and transition
/// variable; the first `p` observations are consumed as initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct LaggedDesign {
    /// `(T - p) x k`, rows `(1, y_{t-1}', ..., y_{t-p}')`.
    pub x: Matrix,
    /// `(T - p) x n`.
    pub y: Matrix,
    pub s: Vec<f64>,
    pub intercept: bool,
}

impl LaggedDesign {
    pub fn nobs(&self) -> usize {
        self.y.nrows()
    }

    pub fn n(&self) -> usize {
        self.y.ncols()
    }

    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    /// Keep rows `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> LaggedDesign {
        LaggedDesign {
            x: self.x.rows(from, to - from).into_owned(),
            y: self.y.rows(from, to - from).into_owned(),
            s: self.s[from..to].to_vec(),
            intercept: self.intercept,
        }
    }
}

pub fn build_regressors(panel: &TimePanel, p: usize, intercept: bool) -> Result<LaggedDesign> {
    if p == 0 {
        return Err(Error::InsufficientLags);
    }
    let total = panel.len();
    if total <= p {
        return Err(Error::InsufficientData {
            needed: p + 1,
            got: total,
        });
    }
    let n = panel.n_series();
    let rows = total - p;
    let offset = usize::from(intercept);
    let k = offset + p * n;
    let mut x = Matrix::zeros(rows, k);
    for r in 0..rows {
        let t = r + p;
        if intercept {
            x[(r, 0)] = 1.0;
        }
        for lag in 1..=p {
            for i in 0..n {
                x[(r, offset + (lag - 1) * n + i)] = panel.y[(t - lag, i)];
            }
        }
    }
    Ok(LaggedDesign {
        x,
        y: panel.y.rows(p, rows).into_owned(),
        s: panel.s[p..].to_vec(),
        intercept,
    })
}

/// Auxiliary block `[x_t s_t, x_t s_t^2, ..., x_t s_t^L]`, `T x (L k)`.
pub fn build_taylor_design(x: &Matrix, s: &[f64], order: usize) -> Result<Matrix> {
    if order == 0 {
        return Err(Error::InvalidParameter("Taylor order must be at least 1".into()));
    }
    if s.len() != x.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} regressor rows but {} transition values",
            x.nrows(),
            s.len()
        )));
    }
    let k = x.ncols();
    let mut z = Matrix::zeros(x.nrows(), order * k);
    for (t, &st) in s.iter().enumerate() {
        let mut power = 1.0;
        for l in 0..order {
            power *= st;
            for j in 0..k {
                z[(t, l * k + j)] = x[(t, j)] * power;
            }
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statcore::matrix_from_rows;

    fn panel() -> TimePanel {
        let y = matrix_from_rows(5, 2, &[1., 10., 2., 20., 3., 30., 4., 40., 5., 50.]).unwrap();
        TimePanel::unlabeled(y, vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap()
    }

    #[test]
    fn lag_alignment() {
        let d = build_regressors(&panel(), 2, true).unwrap();
        assert_eq!(d.x.shape(), (3, 5));
        // row for t = 3 (0-based 2): 1, y_2', y_1'
        assert_eq!(d.x.row(0).iter().copied().collect::<Vec<_>>(), vec![1., 2., 20., 1., 10.]);
        assert_eq!(d.y[(0, 1)], 30.0);
        assert_eq!(d.s, vec![0.3, 0.4, 0.5]);
        let nc = build_regressors(&panel(), 1, false).unwrap();
        assert_eq!(nc.k(), 2);
    }

    #[test]
    fn lag_errors() {
        assert_eq!(build_regressors(&panel(), 0, true), Err(Error::InsufficientLags));
        assert!(matches!(
            build_regressors(&panel(), 5, true),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn taylor_columns() {
        let d = build_regressors(&panel(), 1, true).unwrap();
        let z = build_taylor_design(&d.x, &d.s, 3).unwrap();
        assert_eq!(z.shape(), (4, 9));
        let s = d.s[1];
        for j in 0..3 {
            assert!((z[(1, j)] - d.x[(1, j)] * s).abs() < 1e-15);
            assert!((z[(1, 6 + j)] - d.x[(1, j)] * s.powi(3)).abs() < 1e-15);
        }
    }
}
