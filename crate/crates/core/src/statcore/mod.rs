//! Numerical primitives: least squares, projections, reference
//! distributions and reproducible random streams.

pub mod dist;
pub mod linalg;
pub mod rng;

pub use dist::{bartlett_statistic, ks_uniform, survival, DistributionRef, KsOutcome};
pub use linalg::{
    check_finite, gram, log_det_spd, matrix_from_rows, max_abs, min_eigenvalue, ols_fit,
    projection, solve_spd, Matrix, OlsFit, PivotedQr,
};
pub use rng::{rng_normal, RngStream};
