//! Small dense kernels: the top eigenpair of a symmetric matrix and least
//! squares restricted to a column subset.
//!
//! Both are only ever applied to `s × s`-sized problems, so they are written
//! directly over row-major slices without a matrix library.

use crate::error::{Error, Result};

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_EIG_MAX_ITER: usize = 1000;

/// Components below this fraction of the largest magnitude are treated as zero
/// when fixing the eigenvector sign.
const SIGN_EPS: f64 = 1e-12;

/// Cholesky pivots below `PIVOT_EPS * max(diag)` mark the Gram matrix as
/// numerically rank deficient.
const PIVOT_EPS: f64 = 1e-13;
const RIDGE_SCALE: f64 = 1e-12;

/// Row-major view of an `rows × cols` matrix.
#[derive(Debug, Clone, Copy)]
pub struct MatRef<'a> {
    data: &'a [f64],
    rows: usize,
    cols: usize,
}

impl<'a> MatRef<'a> {
    pub fn new(data: &'a [f64], rows: usize, cols: usize) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "matrix data has {} entries, expected {rows}×{cols}",
                data.len()
            )));
        }
        Ok(Self { data, rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }
}

/// Dense symmetric matrix stored in full row-major form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    entries: Vec<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries, replacing each
    /// off-diagonal pair by its average.
    pub fn new(order: usize, mut entries: Vec<f64>) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("matrix order must be positive"));
        }
        if entries.len() != order * order {
            return Err(Error::invalid(format!(
                "expected {} entries for order {order}, got {}",
                order * order,
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("matrix has non-finite entries"));
        }
        for i in 0..order {
            for j in i + 1..order {
                let avg = 0.5 * (entries[i * order + j] + entries[j * order + i]);
                entries[i * order + j] = avg;
                entries[j * order + i] = avg;
            }
        }
        Ok(Self { order, entries })
    }

    /// Builds the matrix from a function evaluated on the upper triangle
    /// (`i <= j`) and mirrored.
    pub fn from_upper(order: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("matrix order must be positive"));
        }
        let mut entries = vec![0.0; order * order];
        for i in 0..order {
            for j in i..order {
                let v = f(i, j);
                if !v.is_finite() {
                    return Err(Error::invalid("matrix has non-finite entries"));
                }
                entries[i * order + j] = v;
                entries[j * order + i] = v;
            }
        }
        Ok(Self { order, entries })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.order + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.order);
        self.entries
            .chunks_exact(self.order)
            .map(|row| dot(row, v))
            .collect()
    }

    fn max_abs_row_sum(&self) -> f64 {
        self.entries
            .chunks_exact(self.order)
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// Unit eigenvector with its first nonzero component nonnegative.
    pub vector: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// `false` when `max_iter` ran out before the residual test passed.
    pub converged: bool,
    /// Set for the zero matrix, where `(e₁, 0)` is returned.
    pub degenerate: bool,
}

/// Largest (algebraic) eigenvalue of `m` and a unit eigenvector, by power
/// iteration.
///
/// The iteration starts from the basis vector with the largest diagonal entry.
/// When the dominant-magnitude eigenvalue turns out negative, or the plain
/// iteration fails to settle (e.g. a `±λ` pair), it is rerun on a shifted
/// matrix whose spectrum is nonnegative.
pub fn top_eigenvector(m: &SymMatrix, tol: f64, max_iter: usize) -> Result<EigenPair> {
    if !(tol > 0.0) {
        return Err(Error::invalid("eigen tolerance must be positive"));
    }
    if max_iter == 0 {
        return Err(Error::invalid("max_iter must be positive"));
    }
    if m.entries.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = m.order;
    if m.entries.iter().all(|&v| v == 0.0) {
        let mut vector = vec![0.0; n];
        vector[0] = 1.0;
        return Ok(EigenPair {
            vector,
            value: 0.0,
            iterations: 0,
            converged: true,
            degenerate: true,
        });
    }

    let plain = power_iteration(m, 0.0, tol, max_iter);
    let mut pair = if plain.converged && plain.value >= 0.0 {
        plain
    } else {
        let shift = if plain.converged {
            -plain.value
        } else {
            m.max_abs_row_sum()
        };
        let mut shifted = power_iteration(m, shift, tol, max_iter);
        shifted.iterations += plain.iterations;
        shifted
    };
    fix_sign(&mut pair.vector);
    Ok(pair)
}

fn start_vector(m: &SymMatrix) -> Vec<f64> {
    let n = m.order;
    let mut best = 0;
    for j in 1..n {
        if m.get(j, j) > m.get(best, best) {
            best = j;
        }
    }
    let mut v = vec![0.0; n];
    v[best] = 1.0;
    v
}

/// Iterates `v ← normalize((M + shift·I) v)`; convergence is judged on the
/// unshifted residual `‖Mv − λv‖∞ ≤ tol·max(1, |λ|)` with `λ = vᵀMv`.
fn power_iteration(m: &SymMatrix, shift: f64, tol: f64, max_iter: usize) -> EigenPair {
    let n = m.order;
    let mut v = start_vector(m);
    let mut retried = false;
    let mut value = 0.0;
    for it in 1..=max_iter {
        let mv = m.matvec(&v);
        value = dot(&v, &mv);
        let residual = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - value * b).abs())
            .fold(0.0, f64::max);
        if residual <= tol * value.abs().max(1.0) {
            return EigenPair {
                vector: v,
                value,
                iterations: it,
                converged: true,
                degenerate: false,
            };
        }
        let mut next: Vec<f64> = mv.iter().zip(&v).map(|(a, b)| a + shift * b).collect();
        let nrm = norm(&next);
        if nrm == 0.0 || !nrm.is_finite() {
            if retried {
                break;
            }
            // start vector annihilated: perturb once towards the all-ones direction
            retried = true;
            let bump = 1.0 / (n as f64).sqrt();
            next = v.iter().map(|x| x + bump).collect();
            let nrm = norm(&next);
            next.iter_mut().for_each(|x| *x /= nrm);
            v = next;
            continue;
        }
        next.iter_mut().for_each(|x| *x /= nrm);
        v = next;
    }
    EigenPair {
        vector: v,
        value,
        iterations: max_iter,
        converged: false,
        degenerate: false,
    }
}

fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > SIGN_EPS * scale) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    /// Length-`n` solution, zero off the support.
    pub x: Vec<f64>,
    /// Set when the restricted Gram matrix needed a ridge term.
    pub ridge_applied: bool,
}

/// Solves `min ‖A x − b‖₂` subject to `supp(x) ⊆ support` through the normal
/// equations of the column-restricted system.
pub fn restricted_least_squares(a: MatRef<'_>, support: &[usize], b: &[f64]) -> Result<LeastSquares> {
    let (m, n) = (a.rows(), a.cols());
    if b.len() != m {
        return Err(Error::invalid(format!(
            "right-hand side has length {}, expected {m}",
            b.len()
        )));
    }
    if support.len() > m {
        return Err(Error::invalid(format!(
            "support size {} exceeds number of rows {m}",
            support.len()
        )));
    }
    let mut seen = vec![false; n];
    for &j in support {
        if j >= n {
            return Err(Error::invalid(format!("support index {j} out of range 0..{n}")));
        }
        if std::mem::replace(&mut seen[j], true) {
            return Err(Error::invalid(format!("duplicate support index {j}")));
        }
    }

    let k = support.len();
    let mut x = vec![0.0; n];
    if k == 0 {
        return Ok(LeastSquares {
            x,
            ridge_applied: false,
        });
    }

    // Gram = A_Sᵀ A_S (upper triangle), rhs = A_Sᵀ b
    let mut gram = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    let mut sub = vec![0.0; k];
    for i in 0..m {
        let row = a.row(i);
        for (p, &j) in support.iter().enumerate() {
            sub[p] = row[j];
        }
        let bi = b[i];
        for p in 0..k {
            let sp = sub[p];
            if sp == 0.0 {
                continue;
            }
            rhs[p] += sp * bi;
            let g = &mut gram[p * k..(p + 1) * k];
            for q in p..k {
                g[q] += sp * sub[q];
            }
        }
    }
    for p in 0..k {
        for q in 0..p {
            gram[p * k + q] = gram[q * k + p];
        }
    }

    let (coef, ridge_applied) = match cholesky_solve(&gram, k, &rhs) {
        Some(c) => (c, false),
        None => {
            let trace: f64 = (0..k).map(|p| gram[p * k + p]).sum();
            let ridge = RIDGE_SCALE * trace / k as f64;
            let mut ridged = gram.clone();
            for p in 0..k {
                ridged[p * k + p] += ridge;
            }
            (
                cholesky_solve(&ridged, k, &rhs).unwrap_or_else(|| vec![0.0; k]),
                true,
            )
        }
    };
    for (p, &j) in support.iter().enumerate() {
        x[j] = coef[p];
    }
    Ok(LeastSquares { x, ridge_applied })
}

/// Solves `G c = r` for symmetric positive definite `G`; `None` if a pivot is
/// not safely positive.
fn cholesky_solve(g: &[f64], k: usize, r: &[f64]) -> Option<Vec<f64>> {
    let max_diag = (0..k).map(|p| g[p * k + p]).fold(0.0, f64::max);
    if !(max_diag > 0.0) {
        return None;
    }
    let floor = PIVOT_EPS * max_diag;
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut sum = g[i * k + j];
            for p in 0..j {
                sum -= l[i * k + p] * l[j * k + p];
            }
            if i == j {
                if !(sum > floor) {
                    return None;
                }
                l[i * k + i] = sum.sqrt();
            } else {
                l[i * k + j] = sum / l[j * k + j];
            }
        }
    }
    let mut z = r.to_vec();
    for i in 0..k {
        for p in 0..i {
            z[i] -= l[i * k + p] * z[p];
        }
        z[i] /= l[i * k + i];
    }
    for i in (0..k).rev() {
        for p in i + 1..k {
            z[i] -= l[p * k + i] * z[p];
        }
        z[i] /= l[i * k + i];
    }
    Some(z)
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = norm(&v);
        v.iter_mut().for_each(|x| *x /= nrm);
        v
    }

    fn rayleigh(m: &SymMatrix, v: &[f64]) -> f64 {
        dot(v, &m.matvec(v))
    }

    /// Brute-force maximizer of the Rayleigh quotient: best of many random
    /// unit vectors, then stochastic hill climbing with a shrinking radius.
    fn rayleigh_oracle(m: &SymMatrix, samples: usize, seed: u64) -> (Vec<f64>, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = m.order();
        let mut best = random_unit(&mut rng, n);
        let mut best_q = rayleigh(m, &best);
        for _ in 0..samples {
            let v = random_unit(&mut rng, n);
            let q = rayleigh(m, &v);
            if q > best_q {
                best = v;
                best_q = q;
            }
        }
        let mut radius = 0.1;
        while radius > 1e-9 {
            let mut improved = false;
            for _ in 0..200 {
                let step = random_unit(&mut rng, n);
                let mut cand: Vec<f64> = best.iter().zip(&step).map(|(a, b)| a + radius * b).collect();
                let nrm = norm(&cand);
                cand.iter_mut().for_each(|x| *x /= nrm);
                let q = rayleigh(m, &cand);
                if q > best_q {
                    best = cand;
                    best_q = q;
                    improved = true;
                }
            }
            if !improved {
                radius *= 0.5;
            }
        }
        (best, best_q)
    }

    fn angle(u: &[f64], v: &[f64]) -> f64 {
        (dot(u, v).abs() / (norm(u) * norm(v))).min(1.0).acos()
    }

    fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let entries: Vec<f64> = (0..n * n).map(|_| rng.sample(StandardNormal)).collect();
        SymMatrix::new(n, entries).unwrap()
    }

    #[test]
    fn diagonal_matrix() {
        let m = SymMatrix::new(2, vec![5.0, 0.0, 0.0, 1.0]).unwrap();
        let e = top_eigenvector(&m, 1e-10, 1000).unwrap();
        assert_eq!(e.vector, vec![1.0, 0.0]);
        assert_eq!(e.value, 5.0);
        assert!(e.converged && !e.degenerate);
    }

    #[test]
    fn two_by_two_closed_form() {
        let m = SymMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let e = top_eigenvector(&m, 1e-10, 1000).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((e.vector[0] - h).abs() < 1e-9 && (e.vector[1] - h).abs() < 1e-9);
        assert!((e.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn random_5x5_matches_rayleigh_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..3 {
            let m = random_sym(&mut rng, 5);
            let e = top_eigenvector(&m, 1e-10, 100_000).unwrap();
            assert!(e.converged);
            let (v, q) = rayleigh_oracle(&m, 1_000_000, 100 + trial);
            assert!(angle(&e.vector, &v) < 1e-3, "angle {}", angle(&e.vector, &v));
            assert!(e.value >= q - 1e-10);
            assert!((norm(&e.vector) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_dominant_eigenvalue_still_returns_top() {
        // eigenvalues −5 and 1
        let m = SymMatrix::new(2, vec![-5.0, 0.0, 0.0, 1.0]).unwrap();
        let e = top_eigenvector(&m, 1e-10, 1000).unwrap();
        assert!((e.value - 1.0).abs() < 1e-9);
        assert!((e.vector[1].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn plus_minus_pair_resolved_by_shift() {
        let m = SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let e = top_eigenvector(&m, 1e-10, 1000).unwrap();
        assert!(e.converged);
        assert!((e.value - 1.0).abs() < 1e-9);
        assert!(e.vector[0] > 0.0 && (e.vector[0] - e.vector[1]).abs() < 1e-9);
    }

    #[test]
    fn zero_matrix_is_degenerate() {
        let m = SymMatrix::new(3, vec![0.0; 9]).unwrap();
        let e = top_eigenvector(&m, 1e-10, 10).unwrap();
        assert!(e.degenerate);
        assert_eq!(e.vector, vec![1.0, 0.0, 0.0]);
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn rejects_non_finite_and_bad_tol() {
        assert!(SymMatrix::new(1, vec![f64::NAN]).is_err());
        let m = SymMatrix::new(1, vec![1.0]).unwrap();
        assert!(top_eigenvector(&m, 0.0, 10).is_err());
    }

    #[test]
    fn constructor_symmetrizes_by_averaging() {
        let m = SymMatrix::new(2, vec![1.0, 2.0, 4.0, 1.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn power_iteration_is_deterministic_and_near_rayleigh_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let m = random_sym(&mut rng, 4);
            let a = top_eigenvector(&m, 1e-10, 100_000).unwrap();
            let b = top_eigenvector(&m, 1e-10, 100_000).unwrap();
            assert_eq!(a, b);
            let (_, q) = rayleigh_oracle(&m, 20_000, 9);
            assert!(rayleigh(&m, &a.vector) >= q - 1e-10);
        }
    }

    #[test]
    fn identity_system() {
        let a = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let ls = restricted_least_squares(MatRef::new(&a, 3, 3).unwrap(), &[0, 1, 2], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(ls.x, vec![1.0, 2.0, 3.0]);
        assert!(!ls.ridge_applied);
    }

    #[test]
    fn mean_of_two_equations() {
        let a = [1.0, 1.0];
        let ls = restricted_least_squares(MatRef::new(&a, 2, 1).unwrap(), &[0], &[1.0, 3.0]).unwrap();
        assert!((ls.x[0] - 2.0).abs() < 1e-15);
    }

    /// Gaussian elimination with partial pivoting on the normal equations.
    fn elimination_oracle(a: &[f64], m: usize, n: usize, support: &[usize], b: &[f64]) -> Vec<f64> {
        let k = support.len();
        let mut aug = vec![vec![0.0; k + 1]; k];
        for p in 0..k {
            for q in 0..k {
                aug[p][q] = (0..m).map(|i| a[i * n + support[p]] * a[i * n + support[q]]).sum();
            }
            aug[p][k] = (0..m).map(|i| a[i * n + support[p]] * b[i]).sum();
        }
        for col in 0..k {
            let piv = (col..k)
                .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
                .unwrap();
            aug.swap(col, piv);
            for r in 0..k {
                if r != col {
                    let f = aug[r][col] / aug[col][col];
                    for c in col..=k {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
        let mut x = vec![0.0; n];
        for p in 0..k {
            x[support[p]] = aug[p][k] / aug[p][p];
        }
        x
    }

    #[test]
    fn random_system_matches_elimination_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (m, n) = (20, 8);
        for _ in 0..10 {
            let a: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
            let b: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let support = [1, 4, 6];
            let ls = restricted_least_squares(MatRef::new(&a, m, n).unwrap(), &support, &b).unwrap();
            let oracle = elimination_oracle(&a, m, n, &support, &b);
            for (x, o) in ls.x.iter().zip(&oracle) {
                assert!((x - o).abs() < 1e-10, "{x} vs {o}");
            }
            // residual orthogonal to the restricted columns
            let r: Vec<f64> = (0..m).map(|i| b[i] - dot(&a[i * n..(i + 1) * n], &ls.x)).collect();
            for &j in &support {
                let c: Vec<f64> = (0..m).map(|i| a[i * n + j]).collect();
                assert!(dot(&c, &r).abs() <= 1e-8 * norm(&c) * norm(&b));
            }
        }
    }

    #[test]
    fn refit_on_fitted_values_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (m, n) = (30, 10);
        let a: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let view = MatRef::new(&a, m, n).unwrap();
        let support = [0, 3, 7, 9];
        let first = restricted_least_squares(view, &support, &b).unwrap();
        let fitted: Vec<f64> = (0..m).map(|i| dot(view.row(i), &first.x)).collect();
        let second = restricted_least_squares(view, &support, &fitted).unwrap();
        for (u, v) in first.x.iter().zip(&second.x) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_deficient_gram_gets_ridge() {
        // two identical columns
        let a = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let ls = restricted_least_squares(MatRef::new(&a, 3, 2).unwrap(), &[0, 1], &[1.0, 2.0, 3.0]).unwrap();
        assert!(ls.ridge_applied);
        assert!((ls.x[0] + ls.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_supports() {
        let a = [1.0, 0.0, 0.0, 1.0];
        let v = MatRef::new(&a, 2, 2).unwrap();
        assert!(restricted_least_squares(v, &[0, 0], &[1.0, 1.0]).is_err());
        assert!(restricted_least_squares(v, &[2], &[1.0, 1.0]).is_err());
        assert!(restricted_least_squares(v, &[0], &[1.0]).is_err());
    }
}
