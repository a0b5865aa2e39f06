use std::fs;

use vstar_core::estimate::select_lag_order;
use vstar_core::hypothesis::linearity_tests;
use vstar_core::model::{build_regressors, simulate_vlstar, simulate_vtar, LaggedDesign, TransitionSource};
use vstar_core::montecarlo::{run_experiment, vlstar_dgp, vtar_dgp, DgpParams, ExperimentKind, ExperimentSpec, RhoLaw};
use vstar_core::sequential::{
    select_regimes, NullSummary, RegimeSearch, SearchSettings, SequentialConfig,
};
use vstar_core::statcore::RngStream;

use crate::args::{
    AdditiveArgs, Command, DataArgs, Family, Format, LinearityArgs, MonteCarloArgs, OutputArgs, SequentialArgs,
    SimulateArgs,
};
use crate::ingest::ingest_csv;
use crate::report::{DataSummary, ReportBody, ReportDocument, SequentialRun};
use crate::CliError;

impl Command {
    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Simulate(a) => &a.output,
            Command::Linearity(a) => &a.output,
            Command::Additive(a) => &a.output,
            Command::Sequential(a) => &a.output,
            Command::Montecarlo(a) => &a.output,
        }
    }
}

pub fn run(cmd: &Command) -> Result<ReportDocument, CliError> {
    match cmd {
        Command::Simulate(a) => simulate(cmd, a),
        Command::Linearity(a) => linearity(cmd, a),
        Command::Additive(a) => additive(cmd, a),
        Command::Sequential(a) => sequential(cmd, a),
        Command::Montecarlo(a) => montecarlo(cmd, a),
    }
}

/// Write the report where the command asked for it. With `--out`, a short
/// summary also goes to standard output.
pub fn emit(doc: &ReportDocument, output: &OutputArgs) -> Result<(), CliError> {
    let content = match output.format {
        Format::Json => doc.to_json()? + "\n",
        Format::Csv => doc.to_csv()?,
    };
    match &output.out {
        Some(path) => {
            fs::write(path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            print!("{}", doc.summary());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), CliError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

fn load(d: &DataArgs) -> Result<(LaggedDesign, DataSummary), CliError> {
    let ing = ingest_csv(&d.data, &d.transition_col, &d.transform)?;
    let intercept = !d.no_intercept;
    let (p, lag_selection) = match (d.lags, d.select_lags) {
        (Some(p), _) => (p, None),
        (None, Some(c)) => {
            let sel = select_lag_order(&ing.panel, d.max_lags, c.into(), intercept)?;
            (sel.p, Some(sel))
        }
        (None, None) => return Err(CliError::Usage("give --lags P or --select-lags aic|bic".into())),
    };
    ing.panel.ensure_testable(p)?;
    let design = build_regressors(&ing.panel, p, intercept)?;
    let summary = DataSummary {
        path: d.data.display().to_string(),
        transition_column: ing.transition_column.clone(),
        series: ing.panel.labels.clone(),
        rows_read: ing.rows_read,
        rows_dropped: ing.rows_dropped,
        nobs: design.nobs(),
        lags: p,
        intercept,
        lag_selection,
    };
    Ok((design, summary))
}

fn settings(family: Family, taylor_order: usize, gamma_star: f64) -> Result<SearchSettings, CliError> {
    if taylor_order == 0 {
        return Err(CliError::Usage("Taylor order must be at least 1".into()));
    }
    if !(gamma_star > 0.0 && gamma_star.is_finite()) {
        return Err(CliError::Usage("gamma-star must be positive".into()));
    }
    let mut s = SearchSettings::new(family.into());
    s.taylor_order = taylor_order;
    s.gamma_star = gamma_star;
    Ok(s)
}

fn simulate(cmd: &Command, a: &SimulateArgs) -> Result<ReportDocument, CliError> {
    if !(1..=3).contains(&a.regimes) {
        return Err(CliError::Usage("simulated designs have one to three regimes".into()));
    }
    let family = a.family.into();
    ExperimentSpec::new(ExperimentKind::Size, family, a.n, a.t, a.rho_law.into()).validate()?;
    let stream = RngStream::new(a.seed, 0);
    let rho = RhoLaw::from(a.rho_law).draw(a.n, &stream.split(2));
    let params = DgpParams::default();
    let source = TransitionSource::Ar1 {
        phi: params.transition_ar,
    };
    let panel = match a.family {
        Family::Vlstar => simulate_vlstar(&vlstar_dgp(&rho, a.regimes, &params)?, a.t, &source, stream, params.burn_in)?,
        Family::Vtar => simulate_vtar(&vtar_dgp(&rho, a.regimes, &params)?, a.t, &source, stream, params.burn_in)?,
    };
    let rows = (0..panel.len())
        .map(|t| {
            let mut r: Vec<f64> = panel.y.row(t).iter().copied().collect();
            r.push(panel.s[t]);
            r
        })
        .collect();
    let body = ReportBody::Simulate {
        labels: panel.labels.clone(),
        transition_column: "s".into(),
        rows,
    };
    Ok(ReportDocument::new(cmd.clone(), None, body))
}

fn linearity(cmd: &Command, a: &LinearityArgs) -> Result<ReportDocument, CliError> {
    check_alpha(a.test.alpha)?;
    if a.data.taylor_order == 0 {
        return Err(CliError::Usage("Taylor order must be at least 1".into()));
    }
    let (design, summary) = load(&a.data)?;
    let battery = linearity_tests(&design, a.data.taylor_order)?;
    let outcomes = a.test.variant.reported().iter().map(|&v| battery.get(v).clone()).collect();
    let body = ReportBody::Test {
        null_regimes: 1,
        alpha: a.test.alpha,
        outcomes,
        null_fit: None,
    };
    Ok(ReportDocument::new(cmd.clone(), Some(summary), body))
}

fn additive(cmd: &Command, a: &AdditiveArgs) -> Result<ReportDocument, CliError> {
    check_alpha(a.test.alpha)?;
    if a.regimes < 2 {
        return Err(CliError::Usage("the null needs at least two regimes; use `linearity` for one".into()));
    }
    let settings = settings(a.family, a.data.taylor_order, a.gamma_star)?;
    let (design, summary) = load(&a.data)?;
    let mut search = RegimeSearch::new(&design, &settings);
    for _ in 1..a.regimes {
        search.advance()?;
    }
    let battery = search.test()?;
    let outcomes = a.test.variant.reported().iter().map(|&v| battery.get(v).clone()).collect();
    let body = ReportBody::Test {
        null_regimes: a.regimes,
        alpha: a.test.alpha,
        outcomes,
        null_fit: search.null_fit().map(NullSummary::from_fit),
    };
    Ok(ReportDocument::new(cmd.clone(), Some(summary), body))
}

fn sequential(cmd: &Command, a: &SequentialArgs) -> Result<ReportDocument, CliError> {
    check_alpha(a.alpha)?;
    let settings = settings(a.family, a.data.taylor_order, a.gamma_star)?;
    let (design, summary) = load(&a.data)?;
    let mut runs = Vec::new();
    for variant in a.variant.deciding() {
        let cfg = SequentialConfig {
            alpha: a.alpha,
            max_regimes: a.max_regimes,
            variant,
            search: settings.clone(),
        };
        runs.push(SequentialRun {
            variant,
            report: select_regimes(&design, &cfg)?,
        });
    }
    let body = ReportBody::Sequential { alpha: a.alpha, runs };
    Ok(ReportDocument::new(cmd.clone(), Some(summary), body))
}

fn montecarlo(cmd: &Command, a: &MonteCarloArgs) -> Result<ReportDocument, CliError> {
    let mut spec = ExperimentSpec::new(a.kind.into(), a.family.into(), a.n, a.t, a.rho_law.into());
    spec.reps = a.reps;
    spec.alphas = a.alpha.clone();
    spec.variants = a.variant.deciding();
    spec.taylor_order = a.taylor_order;
    spec.seed = a.seed;
    let result = run_experiment(&spec, a.threads)?;
    Ok(ReportDocument::new(cmd.clone(), None, ReportBody::MonteCarlo { result }))
}
