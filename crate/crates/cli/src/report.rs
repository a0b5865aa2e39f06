use serde::{Deserialize, Serialize};
use vstar_core::estimate::LagSelection;
use vstar_core::hypothesis::{TestOutcome, Variant};
use vstar_core::montecarlo::ExperimentResult;
use vstar_core::sequential::{NullSummary, SequentialReport};
use vstar_core::statcore::DistributionRef;

use crate::args::Command;
use crate::CliError;

/// Bumped whenever a field changes meaning or disappears.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub library_version: String,
    /// The parsed command line; rerunning it reproduces the result.
    pub config: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataSummary>,
    pub result: ReportBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub path: String,
    pub transition_column: String,
    pub series: Vec<String>,
    pub rows_read: usize,
    pub rows_dropped: usize,
    /// Observations left after lags.
    pub nobs: usize,
    pub lags: usize,
    pub intercept: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lag_selection: Option<LagSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialRun {
    pub variant: Variant,
    pub report: SequentialReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ReportBody {
    Simulate {
        labels: Vec<String>,
        transition_column: String,
        rows: Vec<Vec<f64>>,
    },
    Test {
        null_regimes: usize,
        alpha: f64,
        outcomes: Vec<TestOutcome>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        null_fit: Option<NullSummary>,
    },
    Sequential {
        alpha: f64,
        runs: Vec<SequentialRun>,
    },
    MonteCarlo {
        result: ExperimentResult,
    },
}

impl ReportDocument {
    pub fn new(config: Command, data: Option<DataSummary>, result: ReportBody) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            data,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        serde_json::to_string_pretty(self).map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Data(format!("not a report: {e}")))
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            let io = |e: csv::Error| CliError::Io(e.to_string());
            match &self.result {
                ReportBody::Simulate {
                    labels,
                    transition_column,
                    rows,
                } => {
                    let mut header = labels.clone();
                    header.push(transition_column.clone());
                    w.write_record(&header).map_err(io)?;
                    for r in rows {
                        w.write_record(r.iter().map(f64::to_string)).map_err(io)?;
                    }
                }
                ReportBody::Test {
                    null_regimes,
                    alpha,
                    outcomes,
                    ..
                } => {
                    w.write_record(TEST_HEADER).map_err(io)?;
                    for o in outcomes {
                        let mut rec = vec![null_regimes.to_string()];
                        rec.extend(outcome_fields(o, *alpha));
                        w.write_record(&rec).map_err(io)?;
                    }
                }
                ReportBody::Sequential { alpha, runs } => {
                    let mut header = vec!["step"];
                    header.extend(TEST_HEADER);
                    header.push("selected_m");
                    w.write_record(&header).map_err(io)?;
                    for run in runs {
                        for (i, step) in run.report.steps.iter().enumerate() {
                            let mut rec = vec![(i + 1).to_string(), step.null_regimes.to_string()];
                            rec.extend(outcome_fields(&step.outcome, *alpha));
                            rec.push(run.report.selected_m.to_string());
                            w.write_record(&rec).map_err(io)?;
                        }
                    }
                }
                ReportBody::MonteCarlo { result } => {
                    drop(w);
                    result.write_csv(&mut buf)?;
                    return String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()));
                }
            }
            w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        }
        String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))
    }

    /// Short plain-text account for the terminal.
    pub fn summary(&self) -> String {
        match &self.result {
            ReportBody::Simulate { rows, labels, .. } => {
                format!("simulated {} observations of {} series\n", rows.len(), labels.len())
            }
            ReportBody::Test {
                null_regimes,
                alpha,
                outcomes,
                ..
            } => {
                let mut out = format!("H0: {null_regimes} regime(s) against {}\n", null_regimes + 1);
                for o in outcomes {
                    out.push_str(&format!(
                        "  {:<12} {:>12.4} ({:.4}){}\n",
                        o.variant.name(),
                        o.statistic,
                        o.p_value,
                        if o.rejects(*alpha) { "  reject" } else { "" }
                    ));
                }
                out
            }
            ReportBody::Sequential { runs, .. } => {
                let mut out = String::new();
                for run in runs {
                    let pv: Vec<String> = run
                        .report
                        .steps
                        .iter()
                        .map(|s| format!("{:.4}", s.outcome.p_value))
                        .collect();
                    out.push_str(&format!(
                        "{:<12} selected m = {}  (p-values by step: {})\n",
                        run.variant.name(),
                        run.report.selected_m,
                        pv.join(", ")
                    ));
                    for w in &run.report.warnings {
                        out.push_str(&format!("  warning: {w:?}\n"));
                    }
                }
                out
            }
            ReportBody::MonteCarlo { result } => result.table(),
        }
    }
}

const TEST_HEADER: [&str; 8] = [
    "null_regimes",
    "variant",
    "statistic",
    "distribution",
    "df1",
    "df2",
    "p_value",
    "reject",
];

fn outcome_fields(o: &TestOutcome, alpha: f64) -> Vec<String> {
    let (name, df1, df2) = match o.dist {
        DistributionRef::ChiSquare { df } => ("chi-square", df, None),
        DistributionRef::F { df1, df2 } => ("f", df1, Some(df2)),
        DistributionRef::WilksBartlett {
            n, hypothesis_df, ..
        } => ("wilks-bartlett", n * hypothesis_df, None),
    };
    vec![
        o.variant.name().to_string(),
        o.statistic.to_string(),
        name.to_string(),
        df1.to_string(),
        df2.map(|d| d.to_string()).unwrap_or_default(),
        o.p_value.to_string(),
        o.rejects(alpha).to_string(),
    ]
}
