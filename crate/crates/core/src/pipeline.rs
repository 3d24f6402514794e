//! End-to-end solvers: an initializer followed by HTP, and the multi-restart
//! variant that reruns TP + HTP from several anchor columns.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::{
    diagonal_ranking, modified_spectral_init, spectral_init, tp_init, tp_init_from_anchor, InitConfig, InitEstimate,
    Surrogate,
};
use crate::linalg::norm;
use crate::model::{dist, relative_error, Ensemble};
use crate::refine::{htp_run, HtpConfig, RefineResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Spectral,
    #[serde(alias = "modspec")]
    ModifiedSpectral,
    Tp,
    #[serde(alias = "tpmr")]
    TpMr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Spectral, Method::ModifiedSpectral, Method::Tp, Method::TpMr];

    pub fn ordinal(self) -> u64 {
        self as u64
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Spectral => "spectral",
            Method::ModifiedSpectral => "modified_spectral",
            Method::Tp => "tp",
            Method::TpMr => "tp_mr",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Method::Spectral),
            "modified_spectral" | "modspec" => Ok(Method::ModifiedSpectral),
            "tp" => Ok(Method::Tp),
            "tp_mr" | "tpmr" => Ok(Method::TpMr),
            other => Err(Error::invalid(format!("unknown method `{other}`"))),
        }
    }
}

/// Parameters for every solver; `b` is only read by the multi-restart method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub init: InitConfig,
    pub htp: HtpConfig,
    pub b: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            init: InitConfig::default(),
            htp: HtpConfig::default(),
            b: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub x_init: Vec<f64>,
    pub method: Method,
    /// `dist(x_init, x) / ‖x‖`, filled in by [`SolveReport::score`].
    pub init_dist: Option<f64>,
    pub rel_error: Option<f64>,
    pub init_elapsed: Duration,
    pub refine_elapsed: Duration,
    pub iterations: usize,
    pub converged: bool,
    /// `‖Aᵀ(Ax − y⊙sgn(Ax))‖₂` of the returned vector.
    pub gradient_residual: f64,
    /// 1-based index of the selected restart.
    pub chosen_restart: Option<usize>,
    pub degenerate_init: bool,
}

impl SolveReport {
    /// Records errors against the ground truth; a zero truth leaves them unset.
    pub fn score(&mut self, truth: &[f64]) -> Result<()> {
        if norm(truth) > 0.0 {
            self.rel_error = Some(relative_error(&self.x, truth)?);
            self.init_dist = Some(dist(&self.x_init, truth)? / norm(truth));
        }
        Ok(())
    }
}

/// `‖Aᵀ(Ax − y⊙sgn(Ax))‖₂`, the restart selection criterion.
pub fn gradient_residual(e: &Ensemble, x: &[f64]) -> f64 {
    let z = e.apply(x);
    let r: Vec<f64> = z
        .iter()
        .zip(e.y())
        .map(|(&zi, &yi)| if zi >= 0.0 { zi - yi } else { zi + yi })
        .collect();
    norm(&e.apply_transpose(&r))
}

fn run_init(e: &Ensemble, s: usize, method: Method, cfg: &InitConfig) -> Result<InitEstimate> {
    match method {
        Method::Spectral => spectral_init(e, s, cfg),
        Method::ModifiedSpectral => modified_spectral_init(e, s, cfg),
        Method::Tp => tp_init(e, s, cfg),
        Method::TpMr => unreachable!("multi-restart is dispatched separately"),
    }
}

struct Stage {
    init: InitEstimate,
    refined: RefineResult,
    init_elapsed: Duration,
    refine_elapsed: Duration,
}

fn refine_from(e: &Ensemble, s: usize, init: InitEstimate, init_elapsed: Duration, cfg: &HtpConfig) -> Result<Stage> {
    let start = Instant::now();
    let refined = htp_run(e, &init.xhat, s, cfg)?;
    Ok(Stage {
        init,
        refined,
        init_elapsed,
        refine_elapsed: start.elapsed(),
    })
}

fn report(e: &Ensemble, method: Method, stage: Stage, chosen_restart: Option<usize>) -> SolveReport {
    SolveReport {
        gradient_residual: gradient_residual(e, &stage.refined.x),
        x: stage.refined.x,
        x_init: stage.init.xhat,
        method,
        init_dist: None,
        rel_error: None,
        init_elapsed: stage.init_elapsed,
        refine_elapsed: stage.refine_elapsed,
        iterations: stage.refined.iterations,
        converged: stage.refined.converged,
        chosen_restart,
        degenerate_init: stage.init.degenerate,
    }
}

/// Initializer (`method`) followed by HTP. [`Method::TpMr`] is forwarded to
/// [`solve_multi_restart`].
pub fn solve_two_stage(e: &Ensemble, s: usize, method: Method, cfg: &SolverConfig) -> Result<SolveReport> {
    if method == Method::TpMr {
        return solve_multi_restart(e, s, cfg);
    }
    cfg.htp.validate()?;
    let start = Instant::now();
    let init = run_init(e, s, method, &cfg.init)?;
    let stage = refine_from(e, s, init, start.elapsed(), &cfg.htp)?;
    Ok(report(e, method, stage, None))
}

/// TP + HTP from the anchors ranked `1..=b` by the diagonal of `Y`; returns the
/// candidate with the smallest [`gradient_residual`], ties to the earlier
/// restart.
///
/// Restarts run in parallel; the selection is a fold in restart order, so the
/// result does not depend on scheduling.
pub fn solve_multi_restart(e: &Ensemble, s: usize, cfg: &SolverConfig) -> Result<SolveReport> {
    let n = e.n();
    if cfg.b == 0 || cfg.b > n {
        return Err(Error::Config(format!("restart count must satisfy 1 ≤ b ≤ n, got b={}", cfg.b)));
    }
    if s == 0 || s > n {
        return Err(Error::invalid(format!("need 1 ≤ s ≤ n, got s={s}, n={n}")));
    }
    cfg.init.validate()?;
    cfg.htp.validate()?;

    let start = Instant::now();
    let anchors = diagonal_ranking(&Surrogate::diag(e), cfg.b);
    let shared = start.elapsed();

    let stages: Vec<Stage> = anchors
        .par_iter()
        .map(|&j0| {
            let t = Instant::now();
            let init = tp_init_from_anchor(e, s, j0, &cfg.init)?;
            refine_from(e, s, init, shared + t.elapsed(), &cfg.htp)
        })
        .collect::<Result<_>>()?;

    let residuals: Vec<f64> = stages.iter().map(|st| gradient_residual(e, &st.refined.x)).collect();
    let best = residuals
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if *r < residuals[best] { i } else { best });
    let total_init: Duration = stages.iter().map(|st| st.init_elapsed).sum();
    let total_refine: Duration = stages.iter().map(|st| st.refine_elapsed).sum();

    let stage = stages.into_iter().nth(best).expect("b ≥ 1");
    let mut rep = report(e, Method::TpMr, stage, Some(best + 1));
    rep.init_elapsed = total_init;
    rep.refine_elapsed = total_refine;
    Ok(rep)
}
