//! Replication harness for empirical size, power and selection frequencies.

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypothesis::{TestBattery, Variant, DEFAULT_TAYLOR_ORDER};
use crate::model::{
    build_regressors, simulate_vlstar, simulate_vtar, TimePanel, TransitionSource, TransitionSpec, VlstarModel,
    VtarModel,
};
use crate::sequential::{ModelFamily, RegimeSearch, SearchSettings, DEFAULT_GAMMA_STAR};
use crate::statcore::{Matrix, RngStream};

pub const DEFAULT_REPS: usize = 500;
/// Redraws allowed for a replication whose simulated path explodes.
pub const MAX_REDRAWS: usize = 3;
/// Largest tolerated share of failed replications.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Size,
    Power,
    Selection,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Size => "size",
            ExperimentKind::Power => "power",
            ExperimentKind::Selection => "selection",
        }
    }

    /// Regimes in the simulated data.
    pub fn true_regimes(&self) -> usize {
        match self {
            ExperimentKind::Power => 3,
            _ => 2,
        }
    }
}

/// Law of the own-lag coefficients on the diagonal of `B_1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoLaw {
    /// Uniform on (0.3, 0.5).
    Moderate,
    /// Uniform on (0.5, 0.8).
    Persistent,
}

impl RhoLaw {
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            RhoLaw::Moderate => (0.3, 0.5),
            RhoLaw::Persistent => (0.5, 0.8),
        }
    }

    pub fn label(&self) -> String {
        let (a, b) = self.bounds();
        format!("U({a},{b})")
    }

    /// `n` independent draws from the start of `stream`.
    pub fn draw(&self, n: usize, stream: &RngStream) -> Vec<f64> {
        let (lo, hi) = self.bounds();
        let mut rng = stream.generator();
        (0..n).map(|_| rng.random_range(lo..hi)).collect()
    }
}

/// Parameters of the simulated models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpParams {
    pub off_diagonal: f64,
    pub gamma: f64,
    pub location: f64,
    pub gamma2: f64,
    pub location2: f64,
    /// `B_3 = third_scale * I` (threshold family: `Phi_3`).
    pub third_scale: f64,
    /// AR coefficient of the transition variable.
    pub transition_ar: f64,
    pub burn_in: usize,
}

impl Default for DgpParams {
    fn default() -> Self {
        Self {
            off_diagonal: 0.1,
            gamma: 2.0,
            location: 2.0,
            gamma2: 2.0,
            location2: 4.0,
            third_scale: -0.7,
            transition_ar: 0.95,
            burn_in: crate::model::DEFAULT_BURN_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub family: ModelFamily,
    pub n: usize,
    pub t: usize,
    pub reps: usize,
    pub rho_law: RhoLaw,
    pub alphas: Vec<f64>,
    pub variants: Vec<Variant>,
    pub taylor_order: usize,
    pub dgp: DgpParams,
    pub seed: u64,
    pub gamma_star: f64,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind, family: ModelFamily, n: usize, t: usize, rho_law: RhoLaw) -> Self {
        Self {
            kind,
            family,
            n,
            t,
            reps: DEFAULT_REPS,
            rho_law,
            alphas: vec![0.10, 0.05, 0.01],
            variants: vec![Variant::Lm, Variant::LmRescaled, Variant::Wilks],
            taylor_order: DEFAULT_TAYLOR_ORDER,
            dgp: DgpParams::default(),
            seed: 0,
            gamma_star: DEFAULT_GAMMA_STAR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps == 0 {
            return Err(Error::InvalidParameter("at least one replication required".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("at least one series required".into()));
        }
        let k = 1 + self.n;
        if self.t <= 10 * k {
            return Err(Error::InvalidParameter(format!(
                "sample length {} must exceed 10 (1 + n p) = {}",
                self.t,
                10 * k
            )));
        }
        if self.alphas.is_empty() || self.variants.is_empty() {
            return Err(Error::InvalidParameter("need at least one alpha and one variant".into()));
        }
        if self.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            return Err(Error::InvalidParameter("alphas must lie in (0, 1]".into()));
        }
        if self.n >= 5 && self.rho_law == RhoLaw::Persistent {
            return Err(Error::UnsupportedDesign(format!(
                "own-lag coefficients from {} give nonstationary systems with {} series",
                self.rho_law.label(),
                self.n
            )));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(Variant, f64)> {
        self.variants
            .iter()
            .flat_map(|&v| self.alphas.iter().map(move |&a| (v, a)))
            .collect()
    }
}

/// `B_1` with the given diagonal and a constant off-diagonal.
fn base_block(rho: &[f64], off_diagonal: f64) -> Matrix {
    let n = rho.len();
    Matrix::from_fn(n, n, |i, j| if i == j { rho[i] } else { off_diagonal })
}

/// Smooth-transition model without intercepts: `B_2 = -B_1` and, for three
/// regimes, `B_3 = third_scale I`.
pub fn vlstar_dgp(rho: &[f64], regimes: usize, params: &DgpParams) -> Result<VlstarModel> {
    let n = rho.len();
    let b1 = base_block(rho, params.off_diagonal);
    let mut blocks = vec![b1.clone()];
    let mut transitions = Vec::new();
    if regimes >= 2 {
        blocks.push(-b1);
        transitions.push(TransitionSpec::shared(params.gamma, params.location));
    }
    if regimes >= 3 {
        blocks.push(Matrix::identity(n, n) * params.third_scale);
        transitions.push(TransitionSpec::shared(params.gamma2, params.location2));
    }
    if regimes > 3 || regimes == 0 {
        return Err(Error::InvalidParameter("simulated designs have one to three regimes".into()));
    }
    let mut b = Matrix::zeros(n, n * blocks.len());
    for (d, blk) in blocks.iter().enumerate() {
        b.columns_mut(d * n, n).copy_from(&blk.transpose());
    }
    VlstarModel::new(n, 1, false, b, transitions, Matrix::identity(n, n))
}

/// Threshold model without intercepts, regime-wise `Phi_2 = -Phi_1`,
/// `Phi_3 = third_scale I`.
pub fn vtar_dgp(rho: &[f64], regimes: usize, params: &DgpParams) -> Result<VtarModel> {
    let n = rho.len();
    let phi1 = base_block(rho, params.off_diagonal).transpose();
    let mut list = vec![phi1.clone()];
    let mut thresholds = Vec::new();
    if regimes >= 2 {
        list.push(-phi1);
        thresholds.push(params.location);
    }
    if regimes >= 3 {
        list.push(Matrix::identity(n, n) * params.third_scale);
        thresholds.push(params.location2);
    }
    if regimes > 3 || regimes == 0 {
        return Err(Error::InvalidParameter("simulated designs have one to three regimes".into()));
    }
    VtarModel::from_regimes(n, 1, false, &list, thresholds, Matrix::identity(n, n))
}

/// Replication `rep`, attempt `attempt`: fresh coefficients and a path.
pub fn simulate_replication(spec: &ExperimentSpec, rep: u64, attempt: u64) -> Result<TimePanel> {
    let stream = RngStream::new(spec.seed, (attempt << 48) | rep);
    let rho = spec.rho_law.draw(spec.n, &stream.split(2));
    let regimes = spec.kind.true_regimes();
    let source = TransitionSource::Ar1 {
        phi: spec.dgp.transition_ar,
    };
    // one extra observation is consumed by the lag
    let t = spec.t + 1;
    match spec.family {
        ModelFamily::Vlstar => {
            simulate_vlstar(&vlstar_dgp(&rho, regimes, &spec.dgp)?, t, &source, stream, spec.dgp.burn_in)
        }
        ModelFamily::Vtar => {
            simulate_vtar(&vtar_dgp(&rho, regimes, &spec.dgp)?, t, &source, stream, spec.dgp.burn_in)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum RepOutcome {
    /// Per cell: rejected (size, power) or selected-regime category
    /// `0 = 1`, `1 = 2`, `2 = 3 or more` (selection).
    Done { cells: Vec<u8>, redraws: usize, nonconverged: bool },
    Failed { redraws: usize },
}

fn rejections(battery: &TestBattery, cells: &[(Variant, f64)]) -> Vec<bool> {
    cells
        .iter()
        .map(|&(v, a)| battery.get(v).rejects(a))
        .collect()
}

fn analyse(spec: &ExperimentSpec, panel: &TimePanel, cells: &[(Variant, f64)]) -> Result<(Vec<u8>, bool)> {
    let design = build_regressors(panel, 1, true)?;
    let mut settings = SearchSettings::new(spec.family);
    settings.taylor_order = spec.taylor_order;
    settings.gamma_star = spec.gamma_star;
    let mut search = RegimeSearch::new(&design, &settings);
    match spec.kind {
        ExperimentKind::Size | ExperimentKind::Power => {
            search.advance()?;
            let nonconverged = !search.null_fit().is_some_and(|f| f.converged);
            let battery = search.test()?;
            Ok((
                rejections(&battery, cells).into_iter().map(u8::from).collect(),
                nonconverged,
            ))
        }
        ExperimentKind::Selection => {
            let first = rejections(&search.test()?, cells);
            if !first.iter().any(|&r| r) {
                return Ok((vec![0; cells.len()], false));
            }
            search.advance()?;
            let nonconverged = !search.null_fit().is_some_and(|f| f.converged);
            let second = rejections(&search.test()?, cells);
            let picks = first
                .iter()
                .zip(&second)
                .map(|(&a, &b)| match (a, b) {
                    (false, _) => 0,
                    (true, false) => 1,
                    (true, true) => 2,
                })
                .collect();
            Ok((picks, nonconverged))
        }
    }
}

fn run_replication(spec: &ExperimentSpec, rep: u64, cells: &[(Variant, f64)]) -> RepOutcome {
    for attempt in 0..=MAX_REDRAWS as u64 {
        let panel = match simulate_replication(spec, rep, attempt) {
            Ok(p) => p,
            Err(Error::Explosive { .. }) => continue,
            Err(_) => return RepOutcome::Failed { redraws: attempt as usize },
        };
        return match analyse(spec, &panel, cells) {
            Ok((cells, nonconverged)) => RepOutcome::Done {
                cells,
                redraws: attempt as usize,
                nonconverged,
            },
            Err(_) => RepOutcome::Failed { redraws: attempt as usize },
        };
    }
    RepOutcome::Failed { redraws: MAX_REDRAWS }
}

/// Tallies for one `(variant, alpha)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub variant: Variant,
    pub alpha: f64,
    pub successes: usize,
    /// Size and power: number of rejections.
    pub rejections: usize,
    /// Selection: replications choosing 1, 2 and 3 or more regimes.
    pub selected: [usize; 3],
}

impl CellResult {
    fn pct(&self, count: usize) -> f64 {
        if self.successes == 0 {
            0.0
        } else {
            100.0 * count as f64 / self.successes as f64
        }
    }

    pub fn rate_pct(&self) -> f64 {
        self.pct(self.rejections)
    }

    /// Percentages selecting 1, 2 and 3 or more regimes.
    pub fn selection_pct(&self) -> [f64; 3] {
        [
            self.pct(self.selected[0]),
            self.pct(self.selected[1]),
            self.pct(self.selected[2]),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub cells: Vec<CellResult>,
    pub successes: usize,
    pub failures: usize,
    pub redraws: usize,
    pub nonconverged: usize,
    pub wall_clock_secs: f64,
}

const CSV_HEADER: [&str; 16] = [
    "kind", "family", "n", "t", "reps", "rho_law", "variant", "alpha", "successes", "failures", "redraws",
    "rejections", "rate_pct", "m1_pct", "m2_pct", "m3plus_pct",
];

impl ExperimentResult {
    pub fn cell(&self, variant: Variant, alpha: f64) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.variant == variant && (c.alpha - alpha).abs() < 1e-12)
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let s = &self.spec;
        self.cells
            .iter()
            .map(|c| {
                let sel = c.selection_pct();
                let selection = s.kind == ExperimentKind::Selection;
                let opt = |v: f64, show: bool| if show { format!("{v:.1}") } else { String::new() };
                vec![
                    s.kind.name().to_string(),
                    s.family.to_string(),
                    s.n.to_string(),
                    s.t.to_string(),
                    s.reps.to_string(),
                    s.rho_law.label(),
                    c.variant.to_string(),
                    format!("{}", c.alpha),
                    c.successes.to_string(),
                    self.failures.to_string(),
                    self.redraws.to_string(),
                    if selection { String::new() } else { c.rejections.to_string() },
                    opt(c.rate_pct(), !selection),
                    opt(sel[0], selection),
                    opt(sel[1], selection),
                    opt(sel[2], selection),
                ]
            })
            .collect()
    }

    /// One row per `(variant, alpha)` cell. Timing is left out so that
    /// repeated runs produce identical files.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::InvalidParameter(format!("writing CSV: {e}"));
        w.write_record(CSV_HEADER).map_err(io)?;
        for row in self.rows() {
            w.write_record(&row).map_err(io)?;
        }
        w.flush()
            .map_err(|e| Error::InvalidParameter(format!("writing CSV: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::InvalidParameter(e.to_string()))
    }

    /// Human-readable aligned table.
    pub fn table(&self) -> String {
        let selection = self.spec.kind == ExperimentKind::Selection;
        let mut out = format!(
            "{} / {} / n={} T={} rho~{} : {} of {} replications used ({} failed, {} redrawn, {} not converged)\n",
            self.spec.kind.name(),
            self.spec.family,
            self.spec.n,
            self.spec.t,
            self.spec.rho_law.label(),
            self.successes,
            self.spec.reps,
            self.failures,
            self.redraws,
            self.nonconverged
        );
        if selection {
            out.push_str(&format!(
                "{:<12} {:>6} {:>8} {:>8} {:>8}\n",
                "variant", "alpha", "m=1", "m=2", "m>=3"
            ));
        } else {
            out.push_str(&format!("{:<12} {:>6} {:>8}\n", "variant", "alpha", "rate %"));
        }
        for c in &self.cells {
            if selection {
                let p = c.selection_pct();
                out.push_str(&format!(
                    "{:<12} {:>6.2} {:>8.1} {:>8.1} {:>8.1}\n",
                    c.variant.name(),
                    c.alpha,
                    p[0],
                    p[1],
                    p[2]
                ));
            } else {
                out.push_str(&format!(
                    "{:<12} {:>6.2} {:>8.1}\n",
                    c.variant.name(),
                    c.alpha,
                    c.rate_pct()
                ));
            }
        }
        out
    }
}

/// Run an experiment on `threads` worker threads. Results do not depend on
/// the thread count.
pub fn run_experiment(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let cells = spec.cells();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let outcomes: Vec<RepOutcome> = pool.install(|| {
        (0..spec.reps as u64)
            .into_par_iter()
            .map(|rep| run_replication(spec, rep, &cells))
            .collect()
    });

    let mut tallies: Vec<CellResult> = cells
        .iter()
        .map(|&(variant, alpha)| CellResult {
            variant,
            alpha,
            successes: 0,
            rejections: 0,
            selected: [0; 3],
        })
        .collect();
    let (mut failures, mut redraws, mut nonconverged, mut successes) = (0, 0, 0, 0);
    for o in &outcomes {
        match o {
            RepOutcome::Done {
                cells: picks,
                redraws: r,
                nonconverged: nc,
            } => {
                successes += 1;
                redraws += r;
                nonconverged += usize::from(*nc);
                for (tally, &v) in tallies.iter_mut().zip(picks) {
                    tally.successes += 1;
                    if spec.kind == ExperimentKind::Selection {
                        tally.selected[v as usize] += 1;
                    } else {
                        tally.rejections += usize::from(v);
                    }
                }
            }
            RepOutcome::Failed { redraws: r } => {
                failures += 1;
                redraws += r;
            }
        }
    }
    if failures as f64 > MAX_FAILURE_SHARE * spec.reps as f64 {
        return Err(Error::TooManyFailures {
            failed: failures,
            reps: spec.reps,
        });
    }
    Ok(ExperimentResult {
        spec: spec.clone(),
        cells: tallies,
        successes,
        failures,
        redraws,
        nonconverged,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    })
}

pub fn run_size(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Size)?;
    run_experiment(spec, threads)
}

pub fn run_power(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Power)?;
    run_experiment(spec, threads)
}

pub fn run_selection(spec: &ExperimentSpec, threads: usize) -> Result<ExperimentResult> {
    expect_kind(spec, ExperimentKind::Selection)?;
    run_experiment(spec, threads)
}

fn expect_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::InvalidParameter(format!(
            "expected a {} experiment, got {}",
            kind.name(),
            spec.kind.name()
        )));
    }
    Ok(())
}
