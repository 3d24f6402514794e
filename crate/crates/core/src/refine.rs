//! Hard thresholding pursuit for the local refinement stage.
//!
//! Each step linearizes the magnitude model around the current sign pattern
//! `sgn(A x_k)`, picks a support by hard thresholding a gradient step, and then
//! solves least squares exactly on that support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::init::truncate;
use crate::linalg::{norm, restricted_least_squares};
use crate::model::Ensemble;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HtpConfig {
    pub mu: f64,
    pub max_iters: usize,
    /// Relative residual `‖Ax − y⊙sgn(Ax)‖ / ‖y‖` accepted as converged.
    pub residual_tol: f64,
    /// Consecutive steps with an unchanged support required to stop.
    pub support_stall: usize,
}

impl Default for HtpConfig {
    fn default() -> Self {
        Self {
            mu: 0.95,
            max_iters: 100,
            residual_tol: 1e-12,
            support_stall: 2,
        }
    }
}

impl HtpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu < 2.0) {
            return Err(Error::Config(format!("step size must lie in (0, 2), got {}", self.mu)));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.residual_tol >= 0.0) {
            return Err(Error::Config("residual_tol must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HtpStep {
    pub x: Vec<f64>,
    /// Sorted support chosen by the thresholded gradient step.
    pub support: Vec<usize>,
    pub ridge_applied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefineResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_residual: f64,
    /// Relative residual after each step.
    pub residuals: Vec<f64>,
}

/// `+1` for nonnegative input, `−1` otherwise.
#[inline]
fn sgn(v: f64) -> f64 {
    if v >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn check_iterate(e: &Ensemble, x: &[f64], s: usize) -> Result<()> {
    if x.len() != e.n() {
        return Err(Error::invalid(format!("iterate has length {}, expected {}", x.len(), e.n())));
    }
    if s == 0 || s > e.n() {
        return Err(Error::invalid(format!("need 1 ≤ s ≤ n, got s={s}")));
    }
    let nnz = x.iter().filter(|v| **v != 0.0).count();
    if nnz > s {
        return Err(Error::invalid(format!("iterate has {nnz} nonzeros, more than s={s}")));
    }
    Ok(())
}

/// Relative residual `‖Ax − y⊙sgn(Ax)‖ / ‖y‖` (absolute when `y = 0`).
pub fn relative_residual(e: &Ensemble, x: &[f64]) -> f64 {
    let z = e.apply(x);
    let r: f64 = z
        .iter()
        .zip(e.y())
        .map(|(zi, yi)| {
            let d = zi - yi * sgn(*zi);
            d * d
        })
        .sum::<f64>()
        .sqrt();
    let ny = norm(e.y());
    if ny > 0.0 {
        r / ny
    } else {
        r
    }
}

/// One step; also returns the sign pattern the least-squares target used.
fn step_with_signs(e: &Ensemble, x: &[f64], s: usize, mu: f64) -> Result<(HtpStep, Vec<bool>)> {
    let z = e.apply(x);
    let signs: Vec<bool> = z.iter().map(|&v| v >= 0.0).collect();
    let target: Vec<f64> = e
        .y()
        .iter()
        .zip(&signs)
        .map(|(&yi, &pos)| if pos { yi } else { -yi })
        .collect();
    let resid: Vec<f64> = target.iter().zip(&z).map(|(t, zi)| t - zi).collect();

    // gradient of the normalized loss (1/2m)‖Ax − y⊙sgn(z)‖²
    let scale = mu / e.m() as f64;
    let grad = e.apply_transpose(&resid);
    let g: Vec<f64> = x.iter().zip(&grad).map(|(xi, gi)| xi + scale * gi).collect();
    let support: Vec<usize> = truncate(&g, s)
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j)
        .collect();

    let ls = restricted_least_squares(e.matrix(), &support, &target)?;
    Ok((
        HtpStep {
            x: ls.x,
            support,
            ridge_applied: ls.ridge_applied,
        },
        signs,
    ))
}

/// `z = A x_k`, `g = x_k + (μ/m) Aᵀ(y⊙sgn(z) − z)`, `S = supp(T_s(g))`,
/// `x_{k+1} = argmin_{supp ⊆ S} ‖Ax − y⊙sgn(z)‖`.
///
/// The gradient is taken on the `1/√m`-normalized measurements so that the
/// step size is dimensionless.
pub fn htp_step(e: &Ensemble, x_k: &[f64], s: usize, cfg: &HtpConfig) -> Result<HtpStep> {
    cfg.validate()?;
    check_iterate(e, x_k, s)?;
    Ok(step_with_signs(e, x_k, s, cfg.mu)?.0)
}

/// Runs [`htp_step`] until the support has been stable for `support_stall`
/// steps with the relative residual below `residual_tol`, or `max_iters` is
/// reached.
///
/// When a step reproduces both the previous support and the previous sign
/// pattern, every later iterate would be identical, so the loop ends there.
pub fn htp_run(e: &Ensemble, x0: &[f64], s: usize, cfg: &HtpConfig) -> Result<RefineResult> {
    cfg.validate()?;
    check_iterate(e, x0, s)?;

    let mut x = x0.to_vec();
    let mut prev_support: Vec<usize> = x0
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j)
        .collect();
    let mut prev_signs: Option<Vec<bool>> = None;
    let mut stall = 0;
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut final_residual = relative_residual(e, &x);

    for _ in 0..cfg.max_iters {
        let (step, signs) = step_with_signs(e, &x, s, cfg.mu)?;
        let same_support = step.support == prev_support;
        stall = if same_support { stall + 1 } else { 0 };
        let frozen = same_support && prev_signs.as_ref() == Some(&signs);

        x = step.x;
        prev_support = step.support;
        prev_signs = Some(signs);
        final_residual = relative_residual(e, &x);
        residuals.push(final_residual);

        if stall >= cfg.support_stall && final_residual <= cfg.residual_tol {
            converged = true;
            break;
        }
        if frozen {
            break;
        }
    }

    Ok(RefineResult {
        x,
        iterations: residuals.len(),
        converged,
        final_residual,
        residuals,
    })
}
