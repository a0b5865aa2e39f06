//! Specification and estimation of vector smooth-transition and threshold
//! autoregressions, with sequential tests for the number of regimes.

pub mod error;
pub mod estimate;
pub mod hypothesis;
pub mod model;
pub mod montecarlo;
pub mod sequential;
pub mod statcore;

pub use error::{Error, Result};
