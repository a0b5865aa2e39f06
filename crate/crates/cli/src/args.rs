use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use vstar_core::estimate::InformationCriterion;
use vstar_core::hypothesis::Variant;
use vstar_core::montecarlo::{ExperimentKind, RhoLaw};
use vstar_core::sequential::ModelFamily;

use crate::ingest::Transform;

#[derive(Debug, Parser)]
#[command(name = "vstar", version, about = "Tests for the number of regimes in vector smooth-transition and threshold autoregressions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Simulate a panel from the Monte Carlo designs and write it as CSV.
    Simulate(SimulateArgs),
    /// Joint linearity test against a two-regime model.
    Linearity(LinearityArgs),
    /// Test a fitted m-regime null against one more regime.
    Additive(AdditiveArgs),
    /// Select the number of regimes by sequential testing.
    Sequential(SequentialArgs),
    /// Size, power or selection-frequency experiment.
    Montecarlo(MonteCarloArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Vlstar,
    Vtar,
}

impl From<Family> for ModelFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Vlstar => ModelFamily::Vlstar,
            Family::Vtar => ModelFamily::Vtar,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantChoice {
    Lm,
    LmRescaled,
    Wilks,
    All,
}

impl VariantChoice {
    /// Variants reported for a single test.
    pub fn reported(&self) -> Vec<Variant> {
        match self {
            VariantChoice::Lm => vec![Variant::Lm],
            VariantChoice::LmRescaled => vec![Variant::LmRescaled],
            VariantChoice::Wilks => vec![Variant::Wilks],
            VariantChoice::All => Variant::ALL.to_vec(),
        }
    }

    /// Variants that can drive a decision.
    pub fn deciding(&self) -> Vec<Variant> {
        match self {
            VariantChoice::All => vec![Variant::Lm, Variant::LmRescaled, Variant::Wilks],
            other => other.reported(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Aic,
    Bic,
}

impl From<Criterion> for InformationCriterion {
    fn from(c: Criterion) -> Self {
        match c {
            Criterion::Aic => InformationCriterion::Aic,
            Criterion::Bic => InformationCriterion::Bic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rho {
    /// U(0.3, 0.5)
    Moderate,
    /// U(0.5, 0.8)
    Persistent,
}

impl From<Rho> for RhoLaw {
    fn from(r: Rho) -> Self {
        match r {
            Rho::Moderate => RhoLaw::Moderate,
            Rho::Persistent => RhoLaw::Persistent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Size,
    Power,
    Selection,
}

impl From<Kind> for ExperimentKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Size => ExperimentKind::Size,
            Kind::Power => ExperimentKind::Power,
            Kind::Selection => ExperimentKind::Selection,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DataArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value = "s")]
    pub transition_col: String,
    /// Comma-separated; `log-growth` and `ma3-spread` may be combined.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "none")]
    pub transform: Vec<Transform>,
    #[arg(long, conflicts_with = "select_lags")]
    pub lags: Option<usize>,
    /// Choose the lag order of a linear VAR by information criterion.
    #[arg(long, value_enum)]
    pub select_lags: Option<Criterion>,
    #[arg(long, default_value_t = 8)]
    pub max_lags: usize,
    #[arg(long)]
    pub no_intercept: bool,
    #[arg(long, default_value_t = vstar_core::hypothesis::DEFAULT_TAYLOR_ORDER)]
    pub taylor_order: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TestChoice {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, value_enum, default_value = "all")]
    pub variant: VariantChoice,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value = "vlstar")]
    pub family: Family,
    #[arg(long, default_value_t = 2)]
    pub regimes: usize,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    /// Observations written, after burn-in.
    #[arg(long, default_value_t = 600)]
    pub t: usize,
    #[arg(long, value_enum, default_value = "moderate")]
    pub rho_law: Rho,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LinearityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub test: TestChoice,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct AdditiveArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub test: TestChoice,
    #[arg(long, value_enum, default_value = "vlstar")]
    pub family: Family,
    /// Regimes under the null.
    #[arg(long, default_value_t = 2)]
    pub regimes: usize,
    /// Slope of the logistic standing in for a threshold.
    #[arg(long, default_value_t = vstar_core::sequential::DEFAULT_GAMMA_STAR)]
    pub gamma_star: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SequentialArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// `all` runs the procedure once per statistic.
    #[arg(long, value_enum, default_value = "lm")]
    pub variant: VariantChoice,
    #[arg(long, value_enum, default_value = "vlstar")]
    pub family: Family,
    #[arg(long, default_value_t = vstar_core::sequential::DEFAULT_MAX_REGIMES)]
    pub max_regimes: usize,
    #[arg(long, default_value_t = vstar_core::sequential::DEFAULT_GAMMA_STAR)]
    pub gamma_star: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct MonteCarloArgs {
    #[arg(long, value_enum, default_value = "size")]
    pub kind: Kind,
    #[arg(long, value_enum, default_value = "vlstar")]
    pub family: Family,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 400)]
    pub t: usize,
    #[arg(long, default_value_t = vstar_core::montecarlo::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, value_enum, default_value = "moderate")]
    pub rho_law: Rho,
    /// Comma-separated nominal levels.
    #[arg(long, value_delimiter = ',', default_value = "0.10,0.05,0.01")]
    pub alpha: Vec<f64>,
    #[arg(long, value_enum, default_value = "all")]
    pub variant: VariantChoice,
    #[arg(long, default_value_t = vstar_core::hypothesis::DEFAULT_TAYLOR_ORDER)]
    pub taylor_order: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}
