//! Monte Carlo experiment engine: seeded trials, grids over `(s, m)`, success
//! rates with Wilson intervals, CSV emission and `SPR1` instance files.

pub mod instance;
pub mod seed;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Ensemble, RngStream, SparseSignal};
use crate::pipeline::{solve_two_stage, Method, SolverConfig};

pub use instance::{load_instance, save_instance, Instance};
pub use stats::wilson_interval;

pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 1e-3;

pub const CSV_HEADER: &str = "n,s,m,trial,method,seed,success,rel_error,init_dist,htp_iters,chosen_restart,elapsed_ms";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentGrid {
    pub n: usize,
    pub s_list: Vec<usize>,
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    #[serde(default = "default_threshold")]
    pub success_threshold: f64,
    #[serde(default)]
    pub configs: SolverConfig,
    /// Wall-clock timings make records non-reproducible, so they are opt-in.
    #[serde(default)]
    pub record_timing: bool,
}

fn default_threshold() -> f64 {
    DEFAULT_SUCCESS_THRESHOLD
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.trials == 0 {
            return Err(Error::Config("need n ≥ 1 and trials ≥ 1".into()));
        }
        if let Some(s) = self.s_list.iter().find(|&&s| s == 0 || s > self.n) {
            return Err(Error::Config(format!("sparsity {s} outside 1..={}", self.n)));
        }
        if self.m_list.contains(&0) {
            return Err(Error::Config("m must be positive".into()));
        }
        if !(self.success_threshold > 0.0) {
            return Err(Error::Config("success threshold must be positive".into()));
        }
        if self.methods.contains(&Method::TpMr) && (self.configs.b == 0 || self.configs.b > self.n) {
            return Err(Error::Config(format!("restart count b={} outside 1..=n", self.configs.b)));
        }
        self.configs.init.validate()?;
        self.configs.htp.validate()
    }

    fn settings(&self) -> TrialSettings {
        TrialSettings {
            solver: self.configs.clone(),
            success_threshold: self.success_threshold,
            record_timing: self.record_timing,
        }
    }
}

/// Everything a single trial needs besides its coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSettings {
    pub solver: SolverConfig,
    pub success_threshold: f64,
    pub record_timing: bool,
}

impl Default for TrialSettings {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            record_timing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub s: usize,
    pub m: usize,
    pub trial: usize,
    pub method: Method,
    pub seed: u64,
    pub success: bool,
    pub rel_error: f64,
    pub init_dist: f64,
    pub htp_iters: usize,
    pub chosen_restart: Option<usize>,
    pub elapsed_ms: Option<f64>,
}

/// Signal and measurements of one trial, shared by every method in a cell.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub seed: u64,
    pub signal: SparseSignal,
    pub ensemble: Ensemble,
}

impl TrialData {
    pub fn generate(grid_seed: u64, n: usize, s: usize, m: usize, trial: usize) -> Result<Self> {
        let seed = seed::trial_seed(grid_seed, n, s, m, trial);
        let signal = SparseSignal::sample(n, s, &mut RngStream::new(seed, seed::SIGNAL_STREAM))?;
        let ensemble = Ensemble::measure(&signal, m, &mut RngStream::new(seed, seed::ENSEMBLE_STREAM))?;
        Ok(Self { seed, signal, ensemble })
    }
}

/// Solves one generated instance with `method` and scores it.
pub fn evaluate(data: &TrialData, trial: usize, method: Method, settings: &TrialSettings) -> Result<TrialRecord> {
    let start = Instant::now();
    let s = data.signal.s();
    let mut report = solve_two_stage(&data.ensemble, s, method, &settings.solver)?;
    report.score(&data.signal.to_dense())?;
    let elapsed = start.elapsed();
    let rel_error = report.rel_error.expect("sampled signals are nonzero");
    Ok(TrialRecord {
        n: data.signal.n(),
        s,
        m: data.ensemble.m(),
        trial,
        method,
        seed: data.seed,
        success: rel_error <= settings.success_threshold,
        rel_error,
        init_dist: report.init_dist.expect("sampled signals are nonzero"),
        htp_iters: report.iterations,
        chosen_restart: report.chosen_restart,
        elapsed_ms: settings.record_timing.then(|| elapsed.as_secs_f64() * 1e3),
    })
}

/// One seeded trial: derives the data seed from `(grid_seed, n, s, m, trial)`,
/// samples signal and measurements, solves and records the outcome.
pub fn run_trial(
    n: usize,
    s: usize,
    m: usize,
    method: Method,
    trial: usize,
    grid_seed: u64,
    settings: &TrialSettings,
) -> Result<TrialRecord> {
    if s == 0 || s > n || m == 0 {
        return Err(Error::Config(format!("invalid cell n={n}, s={s}, m={m}")));
    }
    let data = TrialData::generate(grid_seed, n, s, m, trial)?;
    evaluate(&data, trial, method, settings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub method: Method,
    pub s: usize,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    pub median_iters: usize,
    pub p90_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Sorted by `(method, s, m, trial)`.
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
}

impl GridOutcome {
    pub fn cell(&self, method: Method, s: usize, m: usize) -> Option<&CellSummary> {
        self.cells.iter().find(|c| c.method == method && c.s == s && c.m == m)
    }
}

pub fn summarize(records: &[TrialRecord]) -> Vec<CellSummary> {
    let mut groups: BTreeMap<(Method, usize, usize), Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.method, r.s, r.m)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((method, s, m), rs)| {
            let trials = rs.len();
            let successes = rs.iter().filter(|r| r.success).count();
            let (wilson_low, wilson_high) = wilson_interval(successes, trials, stats::Z_95);
            let mut iters: Vec<usize> = rs.iter().map(|r| r.htp_iters).collect();
            iters.sort_unstable();
            CellSummary {
                method,
                s,
                m,
                trials,
                successes,
                success_rate: successes as f64 / trials as f64,
                wilson_low,
                wilson_high,
                median_iters: stats::quantile_sorted(&iters, 0.5).unwrap_or(0),
                p90_iters: stats::quantile_sorted(&iters, 0.9).unwrap_or(0),
            }
        })
        .collect()
}

/// Runs every `(s, m, trial)` task on a pool of `parallelism` workers, each
/// task solving its instance with all selected methods.
pub fn run_grid(grid: &ExperimentGrid, parallelism: usize) -> Result<GridOutcome> {
    grid.validate()?;
    let settings = grid.settings();
    let mut methods = grid.methods.clone();
    methods.sort_unstable();
    methods.dedup();

    let tasks: Vec<(usize, usize, usize)> = grid
        .s_list
        .iter()
        .flat_map(|&s| {
            grid.m_list
                .iter()
                .flat_map(move |&m| (0..grid.trials).map(move |t| (s, m, t)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    let per_task: Vec<Vec<TrialRecord>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(s, m, t)| {
                let data = TrialData::generate(grid.seed, grid.n, s, m, t)?;
                methods.iter().map(|&method| evaluate(&data, t, method, &settings)).collect()
            })
            .collect::<Result<_>>()
    })?;

    let mut records: Vec<TrialRecord> = per_task.into_iter().flatten().collect();
    records.sort_by(|a, b| (a.method, a.s, a.m, a.trial).cmp(&(b.method, b.s, b.m, b.trial)));
    let cells = summarize(&records);
    Ok(GridOutcome { records, cells })
}

fn opt_real(v: Option<f64>) -> String {
    v.map(instance::format_real).unwrap_or_default()
}

pub fn emit_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.s,
            r.m,
            r.trial,
            r.method,
            r.seed,
            u8::from(r.success),
            instance::format_real(r.rel_error),
            instance::format_real(r.init_dist),
            r.htp_iters,
            r.chosen_restart.map(|b| b.to_string()).unwrap_or_default(),
            opt_real(r.elapsed_ms),
        )
        .unwrap();
    }
    out
}

pub fn parse_csv(text: &str) -> Result<Vec<TrialRecord>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(Error::parse(1, "missing or unexpected CSV header")),
    }
    lines
        .filter(|(_, l)| !l.is_empty())
        .map(|(no, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 12 {
                return Err(Error::parse(no, format!("expected 12 fields, found {}", f.len())));
            }
            let bad = |name: &str| Error::parse(no, format!("invalid {name}"));
            let int = |i: usize, name: &str| f[i].parse::<usize>().map_err(|_| bad(name));
            let real = |i: usize, name: &str| f[i].parse::<f64>().map_err(|_| bad(name));
            Ok(TrialRecord {
                n: int(0, "n")?,
                s: int(1, "s")?,
                m: int(2, "m")?,
                trial: int(3, "trial")?,
                method: f[4].parse().map_err(|_| bad("method"))?,
                seed: f[5].parse().map_err(|_| bad("seed"))?,
                success: match f[6] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(bad("success")),
                },
                rel_error: real(7, "rel_error")?,
                init_dist: real(8, "init_dist")?,
                htp_iters: int(9, "htp_iters")?,
                chosen_restart: if f[10].is_empty() { None } else { Some(int(10, "chosen_restart")?) },
                elapsed_ms: if f[11].is_empty() { None } else { Some(real(11, "elapsed_ms")?) },
            })
        })
        .collect()
}

/// Fixed-width table of per-cell success rates.
pub fn format_summary(cells: &[CellSummary]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<18} {:>5} {:>6} {:>7} {:>8} {:>17} {:>7} {:>7}",
        "method", "s", "m", "trials", "success", "wilson95", "it_med", "it_p90"
    )
    .unwrap();
    for c in cells {
        writeln!(
            out,
            "{:<18} {:>5} {:>6} {:>7} {:>8.3} [{:>6.3}, {:>6.3}] {:>7} {:>7}",
            c.method.as_str(),
            c.s,
            c.m,
            c.trials,
            c.success_rate,
            c.wilson_low,
            c.wilson_high,
            c.median_iters,
            c.p90_iters
        )
        .unwrap();
    }
    out
}
