//! Initializers: baseline spectral, modified spectral and the truncated power
//! method.
//!
//! All three work through the [`Surrogate`] trait, which exposes the pieces of
//! the weighted covariance `Y = (1/m) Σ y_i² a_i a_iᵀ` and its truncated
//! counterpart `Ȳ` (rows kept only when `l·ν ≤ y_i ≤ u·ν`) that the
//! algorithms touch. [`Ensemble`] implements it matrix-free from data;
//! [`PopulationSurrogate`] implements it from the closed-form expectations and
//! is used to check the algorithms on noiseless operators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, norm, SymMatrix};
use crate::model::{dist, Ensemble, TruncationMoments};

/// Truncation band `[l, u]`, applied to `y_i / ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub l: f64,
    pub u: f64,
}

impl Band {
    pub fn new(l: f64, u: f64) -> Result<Self> {
        let band = Self { l, u };
        band.validate()?;
        Ok(band)
    }

    fn validate(&self) -> Result<()> {
        if !(self.l >= 0.0 && self.u > self.l) || self.l.is_infinite() {
            return Err(Error::Config(format!(
                "truncation band needs 0 ≤ l < u, got l={}, u={}",
                self.l, self.u
            )));
        }
        Ok(())
    }
}

/// `ceil(log(200/δ) / log(1/0.98))` with `δ = 1/8`.
pub fn default_t_max() -> usize {
    let delta: f64 = 0.125;
    ((200.0 / delta).ln() / (1.0 / 0.98f64).ln()).ceil() as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InitConfig {
    pub l: f64,
    pub u: f64,
    /// Working sparsity of the power iteration; `None` means `min(2s, n)`.
    pub s_prime: Option<usize>,
    pub t_max: usize,
    pub eig_tol: f64,
    pub eig_max_iter: usize,
    /// Stop the power iteration once consecutive iterates are this close
    /// (modulo sign). Zero runs all `t_max` steps.
    pub early_stop_tol: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            l: 0.5,
            u: 10.0,
            s_prime: None,
            t_max: default_t_max(),
            eig_tol: linalg::DEFAULT_EIG_TOL,
            eig_max_iter: linalg::DEFAULT_EIG_MAX_ITER,
            early_stop_tol: 1e-8,
        }
    }
}

impl InitConfig {
    pub fn band(&self) -> Result<Band> {
        Band::new(self.l, self.u)
    }

    pub fn validate(&self) -> Result<()> {
        self.band()?;
        if !(self.eig_tol > 0.0) || self.eig_max_iter == 0 {
            return Err(Error::Config("eigen solver needs eig_tol > 0 and eig_max_iter ≥ 1".into()));
        }
        if !(self.early_stop_tol >= 0.0) {
            return Err(Error::Config("early_stop_tol must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn resolved_s_prime(&self, s: usize, n: usize) -> usize {
        self.s_prime.unwrap_or_else(|| (2 * s).min(n))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitEstimate {
    /// `ν · x̂⁰`, at most `s` nonzeros.
    pub xhat: Vec<f64>,
    /// Sorted support of `xhat`.
    pub support: Vec<usize>,
    /// Anchor column used for the support estimate; `None` for the diagonal rule.
    pub j0: Option<usize>,
    pub degenerate: bool,
    /// Truncated power iterations actually performed.
    pub iterations_run: usize,
}

/// The parts of `Y` and `Ȳ` the initializers need.
pub trait Surrogate: Sync {
    fn dim(&self) -> usize;

    /// Estimate of `‖x‖₂` used both for the truncation band and the final scale.
    fn scale(&self) -> f64;

    /// Diagonal of `Y`.
    fn diag(&self) -> Vec<f64>;

    /// `Y e_j`; `j < dim()` is checked by the caller.
    fn column(&self, j: usize) -> Vec<f64>;

    /// `Ȳ w`.
    fn truncated_matvec(&self, w: &[f64], band: Band) -> Vec<f64>;

    /// Principal submatrix `[Ȳ]_S`.
    fn truncated_block(&self, support: &[usize], band: Band) -> SymMatrix;
}

/// `out[j] = (1/m) Σ_i y_i² A[i][j]²`.
pub fn y_diag(e: &Ensemble) -> Vec<f64> {
    let mut out = vec![0.0; e.n()];
    for (i, &yi) in e.y().iter().enumerate() {
        let w = yi * yi;
        if w == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(e.row(i)) {
            *o += w * a * a;
        }
    }
    let inv_m = 1.0 / e.m() as f64;
    out.iter_mut().for_each(|o| *o *= inv_m);
    out
}

/// `Y e_{j0} = (1/m) Σ_i y_i² A[i][j0] a_i`.
pub fn y_column(e: &Ensemble, j0: usize) -> Result<Vec<f64>> {
    if j0 >= e.n() {
        return Err(Error::invalid(format!("column index {j0} out of range 0..{}", e.n())));
    }
    Ok(column_unchecked(e, j0))
}

fn column_unchecked(e: &Ensemble, j0: usize) -> Vec<f64> {
    let mut out = vec![0.0; e.n()];
    for (i, &yi) in e.y().iter().enumerate() {
        let row = e.row(i);
        let c = yi * yi * row[j0];
        if c == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += c * a;
        }
    }
    let inv_m = 1.0 / e.m() as f64;
    out.iter_mut().for_each(|o| *o *= inv_m);
    out
}

/// Per-row weights `y_i² 𝟙{l·r ≤ y_i ≤ u·r} / m` for reference norm `r`.
fn truncated_weights(e: &Ensemble, reference: f64, band: Band) -> Vec<f64> {
    let (lo, hi) = (band.l * reference, band.u * reference);
    let inv_m = 1.0 / e.m() as f64;
    e.y()
        .iter()
        .map(|&yi| if lo <= yi && yi <= hi { yi * yi * inv_m } else { 0.0 })
        .collect()
}

/// `Ȳ w`, one pass over the rows without forming `Ȳ`.
pub fn ybar_matvec(e: &Ensemble, w: &[f64], band: Band) -> Result<Vec<f64>> {
    if w.len() != e.n() {
        return Err(Error::invalid(format!("vector has length {}, expected {}", w.len(), e.n())));
    }
    Ok(matvec_unchecked(e, w, band))
}

fn matvec_unchecked(e: &Ensemble, w: &[f64], band: Band) -> Vec<f64> {
    let weights = truncated_weights(e, e.nu(), band);
    let nz: Vec<(usize, f64)> = w
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| (j, *v))
        .collect();
    let mut out = vec![0.0; e.n()];
    for (i, &wi) in weights.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let row = e.row(i);
        let c = wi * nz.iter().map(|&(j, v)| row[j] * v).sum::<f64>();
        if c == 0.0 {
            continue;
        }
        for (o, a) in out.iter_mut().zip(row) {
            *o += c * a;
        }
    }
    out
}

/// `[Ȳ]_S`, assembled in `O(m·|S|²)`.
pub fn restricted_ybar(e: &Ensemble, support: &[usize], band: Band) -> Result<SymMatrix> {
    if support.is_empty() {
        return Err(Error::invalid("support must be nonempty"));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= e.n()) {
        return Err(Error::invalid(format!("support index {j} out of range 0..{}", e.n())));
    }
    Ok(block_unchecked(e, support, band))
}

fn block_unchecked(e: &Ensemble, support: &[usize], band: Band) -> SymMatrix {
    let k = support.len();
    let weights = truncated_weights(e, e.nu(), band);
    let mut acc = vec![0.0; k * k];
    let mut sub = vec![0.0; k];
    for (i, &wi) in weights.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        let row = e.row(i);
        for (p, &j) in support.iter().enumerate() {
            sub[p] = row[j];
        }
        for p in 0..k {
            let c = wi * sub[p];
            let a = &mut acc[p * k..(p + 1) * k];
            for q in p..k {
                a[q] += c * sub[q];
            }
        }
    }
    SymMatrix::from_upper(k, |p, q| acc[p * k + q]).expect("finite by construction")
}

/// Indices of the `k` largest `|values|`, ties going to the smaller index,
/// returned in ranking order.
fn ranked_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    let cmp = |&a: &usize, &b: &usize| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b));
    let k = k.min(values.len());
    if k < idx.len() && k > 0 {
        idx.select_nth_unstable_by(k - 1, cmp);
    }
    idx.truncate(k);
    idx.sort_unstable_by(cmp);
    idx
}

fn top_k_sorted(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx = ranked_indices(values, k);
    idx.sort_unstable();
    idx
}

/// Anchors for restarts: indices of `diag` in decreasing order, ties to the
/// smaller index.
pub fn diagonal_ranking(diag: &[f64], count: usize) -> Vec<usize> {
    ranked_indices(diag, count)
}

/// Keeps the `k` largest-magnitude entries of `w` (ties to the smaller index)
/// and zeroes the rest.
pub fn truncate(w: &[f64], k: usize) -> Vec<f64> {
    if k >= w.len() {
        return w.to_vec();
    }
    let mut out = vec![0.0; w.len()];
    for j in ranked_indices(w, k) {
        out[j] = w[j];
    }
    out
}

fn check_sparsity(s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::invalid(format!("need 1 ≤ s ≤ n, got s={s}, n={n}")));
    }
    Ok(())
}

/// Top-`s` entries of the diagonal of `Y`.
pub fn support_diag(e: &Ensemble, s: usize) -> Result<Vec<usize>> {
    check_sparsity(s, e.n())?;
    Ok(top_k_sorted(&y_diag(e), s))
}

/// `j0 = argmax_j Y_jj`, then the top-`s` entries of `|Y e_{j0}|`.
pub fn support_j0(e: &Ensemble, s: usize) -> Result<(Vec<usize>, usize)> {
    check_sparsity(s, e.n())?;
    let j0 = argmax(&e.diag());
    Ok((top_k_sorted(&e.column(j0), s), j0))
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for j in 1..v.len() {
        if v[j] > v[best] {
            best = j;
        }
    }
    best
}

impl Surrogate for Ensemble {
    fn dim(&self) -> usize {
        self.n()
    }

    fn scale(&self) -> f64 {
        self.nu()
    }

    fn diag(&self) -> Vec<f64> {
        y_diag(self)
    }

    fn column(&self, j: usize) -> Vec<f64> {
        column_unchecked(self, j)
    }

    fn truncated_matvec(&self, w: &[f64], band: Band) -> Vec<f64> {
        matvec_unchecked(self, w, band)
    }

    fn truncated_block(&self, support: &[usize], band: Band) -> SymMatrix {
        block_unchecked(self, support, band)
    }
}

/// Expected operators for Gaussian sensing of a known `x`:
/// `E Y = ‖x‖² I + 2xxᵀ` and `E Ȳ₀ = (β − α)xxᵀ + α‖x‖² I`, with the band
/// applied to `y/‖x‖` and `α, β` the truncated Gaussian moments.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSurrogate {
    x: Vec<f64>,
    norm_sq: f64,
}

impl PopulationSurrogate {
    pub fn new(x: Vec<f64>) -> Self {
        let norm_sq = linalg::dot(&x, &x);
        Self { x, norm_sq }
    }

    fn moments(band: Band) -> TruncationMoments {
        TruncationMoments::new(band.l, band.u).expect("band validated by caller")
    }
}

impl Surrogate for PopulationSurrogate {
    fn dim(&self) -> usize {
        self.x.len()
    }

    fn scale(&self) -> f64 {
        self.norm_sq.sqrt()
    }

    fn diag(&self) -> Vec<f64> {
        self.x.iter().map(|v| self.norm_sq + 2.0 * v * v).collect()
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut out: Vec<f64> = self.x.iter().map(|v| 2.0 * self.x[j] * v).collect();
        out[j] += self.norm_sq;
        out
    }

    fn truncated_matvec(&self, w: &[f64], band: Band) -> Vec<f64> {
        let m = Self::moments(band);
        let proj = linalg::dot(&self.x, w);
        self.x
            .iter()
            .zip(w)
            .map(|(xj, wj)| (m.beta - m.alpha) * xj * proj + m.alpha * self.norm_sq * wj)
            .collect()
    }

    fn truncated_block(&self, support: &[usize], band: Band) -> SymMatrix {
        let m = Self::moments(band);
        SymMatrix::from_upper(support.len(), |p, q| {
            let (i, j) = (support[p], support[q]);
            let rank_one = (m.beta - m.alpha) * self.x[i] * self.x[j];
            if p == q {
                rank_one + m.alpha * self.norm_sq
            } else {
                rank_one
            }
        })
        .expect("finite by construction")
    }
}

fn zero_estimate(n: usize, j0: Option<usize>) -> InitEstimate {
    InitEstimate {
        xhat: vec![0.0; n],
        support: Vec::new(),
        j0,
        degenerate: true,
        iterations_run: 0,
    }
}

/// Unit top eigenvector of `[Ȳ]_S` embedded in ℝⁿ.
fn block_eigenvector<S: Surrogate + ?Sized>(
    op: &S,
    support: &[usize],
    cfg: &InitConfig,
) -> Result<(Vec<f64>, bool)> {
    let block = op.truncated_block(support, cfg.band()?);
    let eig = linalg::top_eigenvector(&block, cfg.eig_tol, cfg.eig_max_iter)?;
    let mut w = vec![0.0; op.dim()];
    for (&j, v) in support.iter().zip(&eig.vector) {
        w[j] = *v;
    }
    Ok((w, eig.degenerate))
}

fn finish(op_scale: f64, unit: Vec<f64>, j0: Option<usize>, degenerate: bool, iterations_run: usize) -> InitEstimate {
    let support = unit
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, _)| j)
        .collect();
    InitEstimate {
        xhat: unit.iter().map(|v| op_scale * v).collect(),
        support,
        j0,
        degenerate,
        iterations_run,
    }
}

fn spectral_on_support<S: Surrogate + ?Sized>(
    op: &S,
    support: &[usize],
    j0: Option<usize>,
    cfg: &InitConfig,
) -> Result<InitEstimate> {
    let (unit, degenerate) = block_eigenvector(op, support, cfg)?;
    Ok(finish(op.scale(), unit, j0, degenerate, 0))
}

fn prepare<S: Surrogate + ?Sized>(op: &S, s: usize, cfg: &InitConfig) -> Result<bool> {
    check_sparsity(s, op.dim())?;
    cfg.validate()?;
    Ok(op.scale() > 0.0)
}

/// Baseline: support from the top-`s` diagonal entries of `Y`, values from the
/// top eigenvector of `[Ȳ]_Ŝ`, scaled by `ν`.
pub fn spectral_init<S: Surrogate + ?Sized>(op: &S, s: usize, cfg: &InitConfig) -> Result<InitEstimate> {
    if !prepare(op, s, cfg)? {
        return Ok(zero_estimate(op.dim(), None));
    }
    let support = top_k_sorted(&op.diag(), s);
    spectral_on_support(op, &support, None, cfg)
}

/// Support from the top-`s` entries of `|Y e_{j0}|` with `j0 = argmax Y_jj`,
/// values from the top eigenvector of `[Ȳ]_Ŝ`, scaled by `ν`.
pub fn modified_spectral_init<S: Surrogate + ?Sized>(op: &S, s: usize, cfg: &InitConfig) -> Result<InitEstimate> {
    if !prepare(op, s, cfg)? {
        return Ok(zero_estimate(op.dim(), None));
    }
    let j0 = argmax(&op.diag());
    modified_spectral_unchecked(op, s, j0, cfg)
}

/// Modified spectral initialization with an explicit anchor column.
pub fn modified_spectral_from_anchor<S: Surrogate + ?Sized>(
    op: &S,
    s: usize,
    j0: usize,
    cfg: &InitConfig,
) -> Result<InitEstimate> {
    if j0 >= op.dim() {
        return Err(Error::invalid(format!("anchor {j0} out of range 0..{}", op.dim())));
    }
    if !prepare(op, s, cfg)? {
        return Ok(zero_estimate(op.dim(), Some(j0)));
    }
    modified_spectral_unchecked(op, s, j0, cfg)
}

fn modified_spectral_unchecked<S: Surrogate + ?Sized>(
    op: &S,
    s: usize,
    j0: usize,
    cfg: &InitConfig,
) -> Result<InitEstimate> {
    let support = top_k_sorted(&op.column(j0), s);
    spectral_on_support(op, &support, Some(j0), cfg)
}

/// Truncated power method seeded by the modified spectral estimate.
///
/// Iterates `w_t = T_{s'}(Ȳ w⁰_{t−1})`, `w⁰_t = w_t / ‖w_t‖` for up to `t_max`
/// steps (or until consecutive iterates agree to `early_stop_tol`), then
/// returns `ν · T_s(w⁰)/‖T_s(w⁰)‖`.
pub fn tp_init<S: Surrogate + ?Sized>(op: &S, s: usize, cfg: &InitConfig) -> Result<InitEstimate> {
    if !prepare(op, s, cfg)? {
        return Ok(zero_estimate(op.dim(), None));
    }
    let j0 = argmax(&op.diag());
    tp_unchecked(op, s, j0, cfg)
}

/// Truncated power method with an explicit anchor column for the seed.
pub fn tp_init_from_anchor<S: Surrogate + ?Sized>(op: &S, s: usize, j0: usize, cfg: &InitConfig) -> Result<InitEstimate> {
    if j0 >= op.dim() {
        return Err(Error::invalid(format!("anchor {j0} out of range 0..{}", op.dim())));
    }
    if !prepare(op, s, cfg)? {
        return Ok(zero_estimate(op.dim(), Some(j0)));
    }
    tp_unchecked(op, s, j0, cfg)
}

fn tp_unchecked<S: Surrogate + ?Sized>(op: &S, s: usize, j0: usize, cfg: &InitConfig) -> Result<InitEstimate> {
    let n = op.dim();
    let s_prime = cfg.resolved_s_prime(s, n);
    if s_prime < s || s_prime > n {
        return Err(Error::Config(format!("need s ≤ s' ≤ n, got s={s}, s'={s_prime}, n={n}")));
    }
    let band = cfg.band()?;
    let seed = modified_spectral_unchecked(op, s, j0, cfg)?;
    if seed.degenerate {
        return Ok(seed);
    }
    let nrm = norm(&seed.xhat);
    let mut w0: Vec<f64> = seed.xhat.iter().map(|v| v / nrm).collect();

    let mut iterations = 0;
    for t in 1..=cfg.t_max {
        let mut w = truncate(&op.truncated_matvec(&w0, band), s_prime);
        let nrm = norm(&w);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Ok(InitEstimate {
                degenerate: true,
                iterations_run: t - 1,
                ..seed
            });
        }
        w.iter_mut().for_each(|v| *v /= nrm);
        let step = dist(&w, &w0)?;
        w0 = w;
        iterations = t;
        if cfg.early_stop_tol > 0.0 && step <= cfg.early_stop_tol {
            break;
        }
    }

    let mut unit = truncate(&w0, s);
    let nrm = norm(&unit);
    unit.iter_mut().for_each(|v| *v /= nrm);
    Ok(finish(op.scale(), unit, Some(j0), false, iterations))
}
