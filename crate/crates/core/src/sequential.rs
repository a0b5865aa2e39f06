//! Top-down selection of the number of regimes: test `m` against `m + 1`
//! regimes, starting from linearity, until the first non-rejection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{
    extend_vlstar, fit_fixed_transitions, fit_vlstar_2regime, fit_vtar_threshold, EstimationResult,
    FittedModel, GridSpec,
};
use crate::hypothesis::{
    additive_tests, linearity_tests, AdditiveOptions, TestBattery, TestOutcome, TransitionTreatment, Variant,
    DEFAULT_TAYLOR_ORDER,
};
use crate::model::{LaggedDesign, TransitionSpec};

pub const DEFAULT_MAX_REGIMES: usize = 5;
/// Slope of the logistic stand-in for a threshold indicator.
pub const DEFAULT_GAMMA_STAR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelFamily {
    Vlstar,
    Vtar,
}

impl std::fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelFamily::Vlstar => "vlstar",
            ModelFamily::Vtar => "vtar",
        })
    }
}

/// Settings shared by every step of a regime search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub family: ModelFamily,
    pub taylor_order: usize,
    pub gamma_star: f64,
    pub grid: GridSpec,
}

impl SearchSettings {
    pub fn new(family: ModelFamily) -> Self {
        Self {
            family,
            taylor_order: DEFAULT_TAYLOR_ORDER,
            gamma_star: DEFAULT_GAMMA_STAR,
            grid: GridSpec::default(),
        }
    }
}

/// Runs one step at a time: test the current null, then fit the null with
/// one more regime. Earlier transitions stay fixed once estimated.
#[derive(Debug, Clone)]
pub struct RegimeSearch<'a> {
    design: &'a LaggedDesign,
    settings: &'a SearchSettings,
    null: Option<EstimationResult>,
    thresholds: Vec<f64>,
    flat_profile: bool,
}

impl<'a> RegimeSearch<'a> {
    pub fn new(design: &'a LaggedDesign, settings: &'a SearchSettings) -> Self {
        Self {
            design,
            settings,
            null: None,
            thresholds: Vec::new(),
            flat_profile: false,
        }
    }

    pub fn null_regimes(&self) -> usize {
        self.null.as_ref().map_or(1, |f| f.model.regimes())
    }

    /// The fitted null model (absent for the linear first step).
    pub fn null_fit(&self) -> Option<&EstimationResult> {
        self.null.as_ref()
    }

    /// Threshold estimates so far (threshold family).
    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Whether the most recent threshold search had a flat SSR profile.
    pub fn flat_profile(&self) -> bool {
        self.flat_profile
    }

    /// All test variants for the current null against one more regime.
    pub fn test(&self) -> Result<TestBattery> {
        let order = self.settings.taylor_order;
        match &self.null {
            None => linearity_tests(self.design, order),
            Some(fit) => {
                let transitions = match self.settings.family {
                    ModelFamily::Vlstar => TransitionTreatment::Estimated,
                    ModelFamily::Vtar => TransitionTreatment::Known,
                };
                let opts = AdditiveOptions {
                    taylor_order: order,
                    transitions,
                    allow_unconverged: true,
                };
                additive_tests(self.design, fit, &opts)
            }
        }
    }

    /// Fit the null with one more regime than the current one.
    pub fn advance(&mut self) -> Result<()> {
        let next = match self.settings.family {
            ModelFamily::Vlstar => match &self.null {
                None => fit_vlstar_2regime(self.design, &self.settings.grid)?,
                Some(fit) => extend_vlstar(self.design, fit, &self.settings.grid)?,
            },
            ModelFamily::Vtar => {
                let fit = fit_vtar_threshold(self.design, &self.thresholds)?;
                self.flat_profile = fit.flat_profile;
                self.thresholds.push(fit.threshold);
                self.thresholds.sort_by(|a, b| a.total_cmp(b));
                let transitions = self
                    .thresholds
                    .iter()
                    .map(|&c| TransitionSpec::shared(self.settings.gamma_star, c))
                    .collect();
                fit_fixed_transitions(self.design, transitions)?
            }
        };
        self.null = Some(next);
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialConfig {
    pub alpha: f64,
    pub max_regimes: usize,
    pub variant: Variant,
    pub search: SearchSettings,
}

impl SequentialConfig {
    pub fn new(family: ModelFamily, variant: Variant, alpha: f64) -> Self {
        Self {
            alpha,
            max_regimes: DEFAULT_MAX_REGIMES,
            variant,
            search: SearchSettings::new(family),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.max_regimes < 2 {
            return Err(Error::InvalidParameter("max_regimes must be at least 2".into()));
        }
        if self.search.taylor_order == 0 {
            return Err(Error::InvalidParameter("Taylor order must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Warning {
    /// The local search for this step's null stopped at its iteration cap.
    NonConvergence { step: usize },
    /// Tests of nulls with three or more regimes only suggest at least that
    /// many regimes.
    ThreeRegimeCaveat { step: usize },
    /// The threshold search barely improved on the smaller model.
    FlatProfile { step: usize },
    CapReached { max_regimes: usize },
}

/// Fitted null summarized for reporting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NullSummary {
    /// `(gamma, c)` per transition; thresholds carry the fixed slope.
    pub transitions: Vec<(f64, f64)>,
    pub objective: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl NullSummary {
    pub fn from_fit(fit: &EstimationResult) -> Self {
        let transitions = match &fit.model {
            FittedModel::Vlstar(m) => m
                .transitions
                .iter()
                .map(|t| (t.gamma(0), t.location(0)))
                .collect(),
            FittedModel::Vtar(m) => m.thresholds.iter().map(|&c| (f64::INFINITY, c)).collect(),
        };
        Self {
            transitions,
            objective: fit.objective,
            converged: fit.converged,
            iterations: fit.iterations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub null_regimes: usize,
    pub outcome: TestOutcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_fit: Option<NullSummary>,
    pub caveat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialReport {
    pub steps: Vec<StepReport>,
    pub selected_m: usize,
    pub warnings: Vec<Warning>,
}

fn at_step<T>(step: usize, null_m: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Step {
        step,
        null_m,
        source: Box::new(e),
    })
}

/// Run the sequential procedure for either model family.
pub fn select_regimes(design: &LaggedDesign, cfg: &SequentialConfig) -> Result<SequentialReport> {
    cfg.validate()?;
    let mut search = RegimeSearch::new(design, &cfg.search);
    let mut steps = Vec::new();
    let mut warnings = Vec::new();
    loop {
        let step = steps.len() + 1;
        let null_m = search.null_regimes();
        let battery = at_step(step, null_m, search.test())?;
        let outcome = battery.get(cfg.variant).clone();
        let caveat = null_m >= 3;
        if caveat {
            warnings.push(Warning::ThreeRegimeCaveat { step });
        }
        let summary = search.null_fit().map(NullSummary::from_fit);
        if let Some(s) = &summary {
            if !s.converged {
                warnings.push(Warning::NonConvergence { step });
            }
        }
        if search.flat_profile() {
            warnings.push(Warning::FlatProfile { step });
        }
        let rejected = outcome.rejects(cfg.alpha);
        steps.push(StepReport {
            null_regimes: null_m,
            outcome,
            null_fit: summary,
            caveat,
        });
        if !rejected {
            return Ok(SequentialReport {
                steps,
                selected_m: null_m,
                warnings,
            });
        }
        if null_m + 1 >= cfg.max_regimes {
            warnings.push(Warning::CapReached {
                max_regimes: cfg.max_regimes,
            });
            return Ok(SequentialReport {
                steps,
                selected_m: cfg.max_regimes,
                warnings,
            });
        }
        at_step(step + 1, null_m + 1, search.advance())?;
    }
}

pub fn select_regimes_vlstar(design: &LaggedDesign, cfg: &SequentialConfig) -> Result<SequentialReport> {
    if cfg.search.family != ModelFamily::Vlstar {
        return Err(Error::InvalidParameter("configuration is not for the smooth-transition family".into()));
    }
    select_regimes(design, cfg)
}

pub fn select_regimes_vtar(design: &LaggedDesign, cfg: &SequentialConfig) -> Result<SequentialReport> {
    if cfg.search.family != ModelFamily::Vtar {
        return Err(Error::InvalidParameter("configuration is not for the threshold family".into()));
    }
    select_regimes(design, cfg)
}
