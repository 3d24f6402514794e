//! Signals, Gaussian measurements and the error metrics used throughout.

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, MatRef};

/// Deterministic random stream addressed by a 64-bit key and a stream id.
///
/// Backed by ChaCha8, a counter-based generator: the 256-bit key is the
/// little-endian `key` followed by 24 zero bytes, the 64-bit stream id selects
/// an independent keystream and the block counter starts at zero. Two streams
/// with different `(key, stream)` never overlap, so every trial can own its
/// streams regardless of scheduling.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(key: u64, stream: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&key.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream);
        Self(rng)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// An `s`-sparse vector in ℝⁿ stored by support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSignal {
    /// `support` must be strictly increasing and every value finite and nonzero.
    pub fn new(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::invalid(format!(
                "support has {} indices but {} values were given",
                support.len(),
                values.len()
            )));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("support must be strictly increasing"));
        }
        if support.last().is_some_and(|&j| j >= n) {
            return Err(Error::invalid(format!("support index out of range 0..{n}")));
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::invalid("signal values must be finite and nonzero"));
        }
        Ok(Self { n, support, values })
    }

    /// Keeps the nonzero entries of `x`. The zero vector gives an empty support.
    pub fn from_dense(x: &[f64]) -> Result<Self> {
        let (support, values) = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .unzip();
        Self::new(x.len(), support, values)
    }

    /// Uniform random `s`-subset of `0..n` with i.i.d. standard normal values.
    pub fn sample(n: usize, s: usize, rng: &mut impl Rng) -> Result<Self> {
        if s == 0 || s > n {
            return Err(Error::invalid(format!("need 1 ≤ s ≤ n, got s={s}, n={n}")));
        }
        let mut support = index::sample(rng, n, s).into_vec();
        support.sort_unstable();
        let values = (0..s)
            .map(|_| loop {
                let v: f64 = rng.sample(StandardNormal);
                if v != 0.0 {
                    break v;
                }
            })
            .collect();
        Ok(Self { n, support, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            x[j] = v;
        }
        x
    }

    pub fn norm(&self) -> f64 {
        norm(&self.values)
    }

    pub fn norm_inf(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// `‖x‖₂² / ‖x‖∞²`, the effective number of significant entries; `None` for
    /// the zero signal.
    pub fn stable_sparsity(&self) -> Option<f64> {
        let inf = self.norm_inf();
        (inf > 0.0).then(|| dot(&self.values, &self.values) / (inf * inf))
    }
}

/// Sensing matrix `A` (row `i` is `a_i`) together with magnitudes `y`.
///
/// Immutable once built; the norm estimate `ν = sqrt(mean(y²))` is cached.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    n: usize,
    m: usize,
    a: Vec<f64>,
    y: Vec<f64>,
    nu: f64,
}

impl Ensemble {
    pub fn new(n: usize, a: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let m = y.len();
        if n == 0 || m == 0 {
            return Err(Error::invalid("ensemble needs n ≥ 1 and m ≥ 1"));
        }
        if a.len() != m * n {
            return Err(Error::invalid(format!(
                "sensing matrix has {} entries, expected {m}×{n}",
                a.len()
            )));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sensing matrix has non-finite entries"));
        }
        if y.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("observations must be finite and nonnegative"));
        }
        let nu = norm_estimate(&y)?;
        Ok(Self { n, m, a, y, nu })
    }

    /// Takes `y = |A x|` for a dense `x`.
    pub fn from_signal(a: Vec<f64>, x: &[f64]) -> Result<Self> {
        let n = x.len();
        if n == 0 || a.len() % n != 0 {
            return Err(Error::invalid("sensing matrix shape does not match signal length"));
        }
        let nz: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let y = a
            .chunks_exact(n)
            .map(|row| nz.iter().map(|&(j, v)| row[j] * v).sum::<f64>().abs())
            .collect();
        Self::new(n, a, y)
    }

    /// Draws `m` i.i.d. standard Gaussian sensing vectors (row by row) and
    /// records `y_i = |⟨a_i, x⟩|`.
    pub fn measure(x: &SparseSignal, m: usize, rng: &mut impl Rng) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("need at least one measurement"));
        }
        let a: Vec<f64> = (0..m * x.n()).map(|_| rng.sample(StandardNormal)).collect();
        Self::from_signal(a, &x.to_dense())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn matrix(&self) -> MatRef<'_> {
        MatRef::new(&self.a, self.m, self.n).expect("shape checked at construction")
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.n..(i + 1) * self.n]
    }

    /// `A x`, skipping zero entries of `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nz: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        self.a
            .chunks_exact(self.n)
            .map(|row| nz.iter().map(|&(j, v)| row[j] * v).sum())
            .collect()
    }

    /// `Aᵀ r`.
    pub fn apply_transpose(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, &ri) in self.a.chunks_exact(self.n).zip(r) {
            if ri == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += ri * a;
            }
        }
        out
    }
}

/// `ν = sqrt(mean(y²))`, the estimate of `‖x‖₂` from magnitudes alone.
pub fn norm_estimate(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::invalid("norm estimate needs at least one observation"));
    }
    Ok((dot(y, y) / y.len() as f64).sqrt())
}

/// `min(‖u − v‖₂, ‖u + v‖₂)`: distance modulo global sign.
pub fn dist(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    Ok(minus.min(plus).sqrt())
}

/// Sign-invariant relative error `dist(x̂, x) / ‖x‖₂`.
pub fn relative_error(xhat: &[f64], x: &[f64]) -> Result<f64> {
    let nx = norm(x);
    if !(nx > 0.0) {
        return Err(Error::invalid("relative error against a zero ground truth"));
    }
    Ok(dist(xhat, x)? / nx)
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn std_normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(b) − Φ(a)` for `0 ≤ a ≤ b`, via `erfc` to keep precision in the tail.
fn std_normal_mass(a: f64, b: f64) -> f64 {
    0.5 * (libm::erfc(a / std::f64::consts::SQRT_2) - libm::erfc(b / std::f64::consts::SQRT_2))
}

/// `tᵖ φ(t)`, taken as zero at `t = ∞`.
fn moment_term(t: f64, p: i32) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        t.powi(p) * std_normal_pdf(t)
    }
}

/// `E[g^k 𝟙{a1 ≤ |g| ≤ a2}]` for `g ~ N(0, 1)` and `k ∈ {2, 4}`, in closed form.
///
/// Integrating by parts on each half line:
/// `γ₂ = 2[ΔΦ − (a2 φ(a2) − a1 φ(a1))]`,
/// `γ₄ = 2[3ΔΦ − (a2³φ(a2) − a1³φ(a1)) − 3(a2 φ(a2) − a1 φ(a1))]`.
/// `a2` may be `+∞`.
pub fn truncated_gaussian_moment(k: u32, a1: f64, a2: f64) -> Result<f64> {
    if !(a1 >= 0.0 && a1 < a2) || a1.is_infinite() || a2.is_nan() {
        return Err(Error::invalid(format!("need 0 ≤ a1 < a2, got a1={a1}, a2={a2}")));
    }
    let mass = std_normal_mass(a1, a2);
    let first = moment_term(a2, 1) - moment_term(a1, 1);
    match k {
        2 => Ok(2.0 * (mass - first)),
        4 => {
            let third = moment_term(a2, 3) - moment_term(a1, 3);
            Ok(2.0 * (3.0 * mass - third - 3.0 * first))
        }
        _ => Err(Error::invalid(format!("moment order must be 2 or 4, got {k}"))),
    }
}

/// Second and fourth truncated moments for the band `[l, u]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationMoments {
    pub l: f64,
    pub u: f64,
    /// `E g² 𝟙{l ≤ |g| ≤ u}`
    pub alpha: f64,
    /// `E g⁴ 𝟙{l ≤ |g| ≤ u}`
    pub beta: f64,
}

impl TruncationMoments {
    pub fn new(l: f64, u: f64) -> Result<Self> {
        Ok(Self {
            l,
            u,
            alpha: truncated_gaussian_moment(2, l, u)?,
            beta: truncated_gaussian_moment(4, l, u)?,
        })
    }
}
