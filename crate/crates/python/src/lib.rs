//! Python bindings: panels, the test battery, sequential selection and
//! Monte Carlo experiments.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use vstar_cli::{ingest_csv, CliError, Transform};
use vstar_core::estimate::{select_lag_order, InformationCriterion};
use vstar_core::hypothesis::{linearity_tests, Variant};
use vstar_core::model::{build_regressors, simulate_vlstar, simulate_vtar, LaggedDesign, TimePanel, TransitionSource};
use vstar_core::montecarlo::{
    run_experiment, vlstar_dgp, vtar_dgp, DgpParams, ExperimentKind, ExperimentSpec, RhoLaw,
};
use vstar_core::sequential::{select_regimes, ModelFamily, RegimeSearch, SearchSettings, SequentialConfig};
use vstar_core::statcore::{DistributionRef, Matrix, RngStream};

create_exception!(vstar, VstarError, PyException);
create_exception!(vstar, DataError, VstarError);
create_exception!(vstar, StatisticalError, VstarError);

fn core_err(e: vstar_core::Error) -> PyErr {
    if e.is_statistical() {
        StatisticalError::new_err(e.to_string())
    } else {
        DataError::new_err(e.to_string())
    }
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Core(c) => core_err(c),
        other => DataError::new_err(other.to_string()),
    }
}

fn family(name: &str) -> PyResult<ModelFamily> {
    match name {
        "vlstar" => Ok(ModelFamily::Vlstar),
        "vtar" => Ok(ModelFamily::Vtar),
        _ => Err(PyValueError::new_err(format!("family must be 'vlstar' or 'vtar', got '{name}'"))),
    }
}

fn variant(name: &str) -> PyResult<Variant> {
    name.parse().map_err(core_err)
}

fn rho_law(name: &str) -> PyResult<RhoLaw> {
    match name {
        "moderate" => Ok(RhoLaw::Moderate),
        "persistent" => Ok(RhoLaw::Persistent),
        _ => Err(PyValueError::new_err(format!(
            "rho_law must be 'moderate' or 'persistent', got '{name}'"
        ))),
    }
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Observations of `n` series plus the transition variable.
#[pyclass(module = "vstar", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct Panel {
    inner: TimePanel,
}

#[pymethods]
impl Panel {
    #[new]
    #[pyo3(signature = (y, s, labels = None))]
    fn new(y: Vec<Vec<f64>>, s: Vec<f64>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let n = y.first().map_or(0, Vec::len);
        if y.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("rows of y differ in length"));
        }
        let m = Matrix::from_fn(y.len(), n, |t, j| y[t][j]);
        let inner = match labels {
            Some(l) => TimePanel::new(m, s, l),
            None => TimePanel::unlabeled(m, s),
        }
        .map_err(core_err)?;
        Ok(Self { inner })
    }

    /// Read a CSV panel; every column except `transition_col` is a series.
    #[staticmethod]
    #[pyo3(signature = (path, transition_col = "s", transforms = vec![]))]
    fn from_csv(path: PathBuf, transition_col: &str, transforms: Vec<String>) -> PyResult<Self> {
        let transforms = transforms
            .iter()
            .map(|t| match t.as_str() {
                "log-growth" => Ok(Transform::LogGrowth),
                "ma3-spread" => Ok(Transform::Ma3Spread),
                "none" => Ok(Transform::None),
                other => Err(PyValueError::new_err(format!("unknown transform '{other}'"))),
            })
            .collect::<PyResult<Vec<_>>>()?;
        let ing = ingest_csv(&path, transition_col, &transforms).map_err(cli_err)?;
        Ok(Self { inner: ing.panel })
    }

    #[getter]
    fn y(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len())
            .map(|t| self.inner.y.row(t).iter().copied().collect())
            .collect()
    }

    #[getter]
    fn s(&self) -> Vec<f64> {
        self.inner.s.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels.clone()
    }

    /// Lag order minimizing `"aic"` or `"bic"` over `1..=max_lags`.
    #[pyo3(signature = (criterion = "bic", max_lags = 8, intercept = true))]
    fn select_lags(&self, criterion: &str, max_lags: usize, intercept: bool) -> PyResult<usize> {
        let crit = match criterion {
            "aic" => InformationCriterion::Aic,
            "bic" => InformationCriterion::Bic,
            other => return Err(PyValueError::new_err(format!("unknown criterion '{other}'"))),
        };
        Ok(select_lag_order(&self.inner, max_lags, crit, intercept).map_err(core_err)?.p)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Panel(t={}, series={:?})", self.inner.len(), self.inner.labels)
    }
}

#[pyclass(module = "vstar", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct TestOutcome {
    variant: String,
    null_regimes: usize,
    statistic: f64,
    p_value: f64,
    /// `"chi-square"`, `"f"` or `"wilks-bartlett"`.
    distribution: String,
    df1: u64,
    df2: Option<u64>,
}

impl From<&vstar_core::hypothesis::TestOutcome> for TestOutcome {
    fn from(o: &vstar_core::hypothesis::TestOutcome) -> Self {
        let (distribution, df1, df2) = match o.dist {
            DistributionRef::ChiSquare { df } => ("chi-square", df, None),
            DistributionRef::F { df1, df2 } => ("f", df1, Some(df2)),
            DistributionRef::WilksBartlett {
                n, hypothesis_df, ..
            } => ("wilks-bartlett", n * hypothesis_df, None),
        };
        Self {
            variant: o.variant.name().to_string(),
            null_regimes: o.null_regimes,
            statistic: o.statistic,
            p_value: o.p_value,
            distribution: distribution.to_string(),
            df1,
            df2,
        }
    }
}

#[pymethods]
impl TestOutcome {
    fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }

    fn __repr__(&self) -> String {
        format!(
            "TestOutcome(variant='{}', null_regimes={}, statistic={:.4}, p_value={:.4})",
            self.variant, self.null_regimes, self.statistic, self.p_value
        )
    }
}

#[pyclass(module = "vstar", frozen)]
pub struct SequentialReport {
    inner: vstar_core::sequential::SequentialReport,
}

#[pymethods]
impl SequentialReport {
    #[getter]
    fn selected_m(&self) -> usize {
        self.inner.selected_m
    }

    #[getter]
    fn steps(&self) -> Vec<TestOutcome> {
        self.inner.steps.iter().map(|s| TestOutcome::from(&s.outcome)).collect()
    }

    #[getter]
    fn p_values(&self) -> Vec<f64> {
        self.inner.steps.iter().map(|s| s.outcome.p_value).collect()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.iter().map(|w| format!("{w:?}")).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("SequentialReport(selected_m={}, steps={})", self.inner.selected_m, self.inner.steps.len())
    }
}

#[pyclass(module = "vstar", frozen)]
pub struct ExperimentResult {
    inner: vstar_core::montecarlo::ExperimentResult,
}

#[pymethods]
impl ExperimentResult {
    /// Rejection percentage for size and power experiments.
    fn rate(&self, variant: &str, alpha: f64) -> PyResult<f64> {
        let cell = self
            .inner
            .cell(self::variant(variant)?, alpha)
            .ok_or_else(|| PyValueError::new_err("no such cell"))?;
        Ok(cell.rate_pct())
    }

    /// Percentages selecting 1, 2 and 3 or more regimes.
    fn selection(&self, variant: &str, alpha: f64) -> PyResult<(f64, f64, f64)> {
        let cell = self
            .inner
            .cell(self::variant(variant)?, alpha)
            .ok_or_else(|| PyValueError::new_err("no such cell"))?;
        let [a, b, c] = cell.selection_pct();
        Ok((a, b, c))
    }

    #[getter]
    fn successes(&self) -> usize {
        self.inner.successes
    }

    #[getter]
    fn failures(&self) -> usize {
        self.inner.failures
    }

    fn to_csv(&self) -> PyResult<String> {
        self.inner.to_csv_string().map_err(core_err)
    }

    fn table(&self) -> String {
        self.inner.table()
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }
}

fn design(panel: &Panel, lags: usize, intercept: bool) -> PyResult<LaggedDesign> {
    panel.inner.ensure_testable(lags).map_err(core_err)?;
    build_regressors(&panel.inner, lags, intercept).map_err(core_err)
}

fn settings(family_name: &str, taylor_order: usize, gamma_star: f64) -> PyResult<SearchSettings> {
    let mut s = SearchSettings::new(family(family_name)?);
    s.taylor_order = taylor_order;
    s.gamma_star = gamma_star;
    Ok(s)
}

/// Simulate one of the Monte Carlo designs with 1 to 3 regimes.
#[pyfunction]
#[pyo3(signature = (family = "vlstar", regimes = 2, n = 3, t = 600, rho_law = "moderate", seed = 0))]
fn simulate(family: &str, regimes: usize, n: usize, t: usize, rho_law: &str, seed: u64) -> PyResult<Panel> {
    let fam = self::family(family)?;
    let law = self::rho_law(rho_law)?;
    ExperimentSpec::new(ExperimentKind::Size, fam, n, t, law)
        .validate()
        .map_err(core_err)?;
    let stream = RngStream::new(seed, 0);
    let rho = law.draw(n, &stream.split(2));
    let params = DgpParams::default();
    let source = TransitionSource::Ar1 {
        phi: params.transition_ar,
    };
    let inner = match fam {
        ModelFamily::Vlstar => vlstar_dgp(&rho, regimes, &params)
            .and_then(|m| simulate_vlstar(&m, t, &source, stream, params.burn_in)),
        ModelFamily::Vtar => {
            vtar_dgp(&rho, regimes, &params).and_then(|m| simulate_vtar(&m, t, &source, stream, params.burn_in))
        }
    }
    .map_err(core_err)?;
    Ok(Panel { inner })
}

/// Linearity against two regimes: outcomes for lm, lm-tr2, lm-rescaled, wilks.
#[pyfunction]
#[pyo3(signature = (panel, lags = 1, intercept = true, taylor_order = 3))]
fn linearity(panel: &Panel, lags: usize, intercept: bool, taylor_order: usize) -> PyResult<Vec<TestOutcome>> {
    let d = design(panel, lags, intercept)?;
    let battery = linearity_tests(&d, taylor_order).map_err(core_err)?;
    Ok(Variant::ALL.iter().map(|&v| TestOutcome::from(battery.get(v))).collect())
}

/// Fit a `regimes`-regime null and test it against one more regime.
#[pyfunction]
#[pyo3(signature = (panel, regimes = 2, lags = 1, family = "vlstar", intercept = true, taylor_order = 3, gamma_star = 100.0))]
fn additive(
    panel: &Panel,
    regimes: usize,
    lags: usize,
    family: &str,
    intercept: bool,
    taylor_order: usize,
    gamma_star: f64,
) -> PyResult<Vec<TestOutcome>> {
    if regimes < 2 {
        return Err(PyValueError::new_err("the null needs at least two regimes"));
    }
    let settings = settings(family, taylor_order, gamma_star)?;
    let d = design(panel, lags, intercept)?;
    let mut search = RegimeSearch::new(&d, &settings);
    for _ in 1..regimes {
        search.advance().map_err(core_err)?;
    }
    let battery = search.test().map_err(core_err)?;
    Ok(Variant::ALL.iter().map(|&v| TestOutcome::from(battery.get(v))).collect())
}

#[pyfunction]
#[pyo3(signature = (panel, lags = 1, alpha = 0.05, variant = "lm", family = "vlstar", max_regimes = 5, intercept = true, taylor_order = 3, gamma_star = 100.0))]
#[allow(clippy::too_many_arguments)]
fn sequential(
    py: Python<'_>,
    panel: &Panel,
    lags: usize,
    alpha: f64,
    variant: &str,
    family: &str,
    max_regimes: usize,
    intercept: bool,
    taylor_order: usize,
    gamma_star: f64,
) -> PyResult<SequentialReport> {
    let cfg = SequentialConfig {
        alpha,
        max_regimes,
        variant: self::variant(variant)?,
        search: settings(family, taylor_order, gamma_star)?,
    };
    let d = design(panel, lags, intercept)?;
    let inner = py.detach(|| select_regimes(&d, &cfg)).map_err(core_err)?;
    Ok(SequentialReport { inner })
}

#[pyfunction]
#[pyo3(signature = (kind = "size", family = "vlstar", n = 3, t = 400, reps = 500, rho_law = "moderate", alphas = vec![0.10, 0.05, 0.01], seed = 0, threads = 1))]
#[allow(clippy::too_many_arguments)]
fn montecarlo(
    py: Python<'_>,
    kind: &str,
    family: &str,
    n: usize,
    t: usize,
    reps: usize,
    rho_law: &str,
    alphas: Vec<f64>,
    seed: u64,
    threads: usize,
) -> PyResult<ExperimentResult> {
    let kind = match kind {
        "size" => ExperimentKind::Size,
        "power" => ExperimentKind::Power,
        "selection" => ExperimentKind::Selection,
        other => return Err(PyValueError::new_err(format!("unknown experiment kind '{other}'"))),
    };
    let mut spec = ExperimentSpec::new(kind, self::family(family)?, n, t, self::rho_law(rho_law)?);
    spec.reps = reps;
    spec.alphas = alphas;
    spec.seed = seed;
    let inner = py.detach(|| run_experiment(&spec, threads)).map_err(core_err)?;
    Ok(ExperimentResult { inner })
}

#[pymodule]
fn vstar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("VstarError", m.py().get_type::<VstarError>())?;
    m.add("DataError", m.py().get_type::<DataError>())?;
    m.add("StatisticalError", m.py().get_type::<StatisticalError>())?;
    m.add_class::<Panel>()?;
    m.add_class::<TestOutcome>()?;
    m.add_class::<SequentialReport>()?;
    m.add_class::<ExperimentResult>()?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(linearity, m)?)?;
    m.add_function(wrap_pyfunction!(additive, m)?)?;
    m.add_function(wrap_pyfunction!(sequential, m)?)?;
    m.add_function(wrap_pyfunction!(montecarlo, m)?)?;
    Ok(())
}
