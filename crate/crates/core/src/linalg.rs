//! Dense linear algebra helpers and the rank-M truncated SVD.
//!
//! Throughout the crate `X` is the `N × D` design matrix. The truncated SVD
//! keeps the top `M` right singular vectors `U` (`D × M`), singular values
//! `lambda` and left singular vectors `V` (`N × M`), so that
//! `X U = V diag(lambda)`. The orthogonal complement of `U` is never formed;
//! projections onto it are applied as `v - U (Uᵀ v)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen, SVD};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance used when iterating for top singular values.
const RITZ_TOL: f64 = 1e-14;

pub fn ensure_finite_matrix(x: &Matrix, what: &'static str) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_finite_vector(v: &Vector, what: &'static str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// How the rank-M factorization is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SvdMethod {
    /// Gaussian range finder with subspace (power) iterations.
    Randomized {
        oversample: usize,
        power_iters: usize,
        seed: u64,
    },
    /// Full SVD followed by truncation.
    Deterministic,
}

impl Default for SvdMethod {
    fn default() -> Self {
        SvdMethod::Randomized {
            oversample: 10,
            power_iters: 2,
            seed: 0,
        }
    }
}

impl SvdMethod {
    pub fn randomized(seed: u64) -> Self {
        SvdMethod::Randomized {
            oversample: 10,
            power_iters: 2,
            seed,
        }
    }
}

/// Rank-M factorization of the design matrix plus a summary of what was
/// truncated away.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `D × M`, orthonormal columns (right singular vectors of `X`).
    pub u: Matrix,
    /// Non-increasing singular values.
    pub lambda: Vector,
    /// `N × M`, orthonormal columns (left singular vectors of `X`).
    pub v: Matrix,
    /// Largest singular value of `X - X U Uᵀ`.
    pub residual_spectral_norm: f64,
    /// Smallest singular value of `X` restricted to the complement of `U`;
    /// zero whenever `X` has a nontrivial null space or it was not computed.
    pub residual_min_singular: f64,
}

impl TruncatedSvd {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn n_obs(&self) -> usize {
        self.v.nrows()
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    /// Projects `beta` onto the complement of span(U): `beta - U Uᵀ beta`.
    pub fn complement_projection(&self, beta: &Vector) -> Vector {
        beta - &self.u * (self.u.transpose() * beta)
    }

    /// `Y - V Vᵀ Y`.
    pub fn response_residual(&self, y: &Vector) -> Vector {
        y - &self.v * (self.v.transpose() * y)
    }

    /// Keeps only the leading `m` factors. Residual summaries are not
    /// recomputed, so callers that need them should refit.
    pub fn leading(&self, m: usize) -> TruncatedSvd {
        let m = m.min(self.rank());
        TruncatedSvd {
            u: self.u.columns(0, m).into_owned(),
            lambda: self.lambda.rows(0, m).into_owned(),
            v: self.v.columns(0, m).into_owned(),
            residual_spectral_norm: self.residual_spectral_norm,
            residual_min_singular: self.residual_min_singular,
        }
    }
}

/// Top-`m` truncated SVD of `x`.
pub fn truncated_svd(x: &Matrix, m: usize, method: SvdMethod) -> Result<TruncatedSvd> {
    let (n, d) = x.shape();
    if m == 0 || m > n.min(d) {
        return Err(Error::InvalidArgument(format!(
            "rank M={m} must satisfy 1 <= M <= min(N, D) = {}",
            n.min(d)
        )));
    }
    ensure_finite_matrix(x, "design matrix")?;

    let mut svd = match method {
        SvdMethod::Deterministic => deterministic_svd(x, m)?,
        SvdMethod::Randomized {
            oversample,
            power_iters,
            seed,
        } => randomized_svd(x, m, oversample, power_iters, seed)?,
    };
    fix_signs(&mut svd.u, &mut svd.v);
    Ok(svd)
}

fn deterministic_svd(x: &Matrix, m: usize) -> Result<TruncatedSvd> {
    let (n, d) = x.shape();
    let (u_left, sigma, v_right) = sorted_full_svd(x)?;
    let k = n.min(d);
    let tol = rank_tolerance(n, d, sigma[0]);
    let residual_spectral_norm = if m < k { snap(sigma[m], tol) } else { 0.0 };
    let residual_min_singular = if n >= d && m < d {
        snap(sigma[d - 1], tol)
    } else {
        0.0
    };
    Ok(TruncatedSvd {
        u: v_right.columns(0, m).into_owned(),
        lambda: sigma.rows(0, m).into_owned(),
        v: u_left.columns(0, m).into_owned(),
        residual_spectral_norm,
        residual_min_singular,
    })
}

fn randomized_svd(
    x: &Matrix,
    m: usize,
    oversample: usize,
    power_iters: usize,
    seed: u64,
) -> Result<TruncatedSvd> {
    let (n, d) = x.shape();
    let width = (m + oversample).min(n.min(d));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega = gaussian_matrix(d, width, &mut rng);

    let mut q = orthonormalize(&(x * &omega));
    for _ in 0..power_iters {
        let z = orthonormalize(&x.tr_mul(&q));
        q = orthonormalize(&(x * &z));
    }

    // B = Qᵀ X is width × D; its SVD gives the approximate factors.
    let b = q.tr_mul(x);
    let (_, _, vb) = sorted_full_svd(&b)?;
    let basis = vb.columns(0, m).into_owned();

    // Rayleigh–Ritz on span(U): rotate U so that XU = V diag(λ) holds exactly
    // rather than only up to the range-finder error.
    let (v, lambda, rot) = sorted_full_svd(&(x * &basis))?;
    let u = basis * rot;

    let tol = rank_tolerance(n, d, lambda[0]);
    let residual_spectral_norm = if m == n.min(d) {
        0.0
    } else {
        let top = residual_top_singular_values(x, &u, 1, seed ^ 0x5eed, tol)?;
        snap(top.first().copied().unwrap_or(0.0), tol)
    };

    Ok(TruncatedSvd {
        u,
        lambda,
        v,
        residual_spectral_norm,
        residual_min_singular: 0.0,
    })
}

/// Full SVD with singular values sorted in non-increasing order.
/// Returns `(left, sigma, right)` with `x = left * diag(sigma) * rightᵀ`.
pub fn sorted_full_svd(x: &Matrix) -> Result<(Matrix, Vector, Matrix)> {
    let (n, d) = x.shape();
    let k = n.min(d);
    if k == 0 {
        return Ok((Matrix::zeros(n, 0), Vector::zeros(0), Matrix::zeros(d, 0)));
    }
    let svd = SVD::try_new(x.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::InvalidArgument("SVD failed to converge".into()))?;
    let left = svd.u.expect("left vectors requested");
    let right_t = svd.v_t.expect("right vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut sl = Matrix::zeros(n, k);
    let mut sr = Matrix::zeros(d, k);
    let mut sigma = Vector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        sigma[dst] = svd.singular_values[src].max(0.0);
        sl.set_column(dst, &left.column(src));
        sr.set_column(dst, &right_t.row(src).transpose());
    }
    Ok((sl, sigma, sr))
}

/// Flips each column of `u` so that its largest-magnitude entry is positive,
/// flipping the paired column of `v` to keep `X U = V diag(lambda)`.
fn fix_signs(u: &mut Matrix, v: &mut Matrix) {
    for j in 0..u.ncols() {
        let col = u.column(j);
        let pivot = col
            .iter()
            .copied()
            .fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if pivot < 0.0 {
            u.column_mut(j).neg_mut();
            v.column_mut(j).neg_mut();
        }
    }
}

pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Orthonormal basis (thin Q factor) of the column space of `a`.
pub fn orthonormalize(a: &Matrix) -> Matrix {
    let (r, c) = a.shape();
    if c == 0 || r == 0 {
        return Matrix::zeros(r, c.min(r));
    }
    a.clone().qr().q()
}

/// Top-`k` singular values of `X (I - U Uᵀ)`, non-increasing.
pub fn residual_spectrum(x: &Matrix, svd: &TruncatedSvd, k: usize) -> Result<Vector> {
    let (n, d) = x.shape();
    let avail = n.min(d) - svd.rank().min(n.min(d));
    if k > avail {
        return Err(Error::InvalidArgument(format!(
            "k={k} exceeds min(N, D) - M = {avail}"
        )));
    }
    if k == 0 {
        return Ok(Vector::zeros(0));
    }
    let vals = residual_top_singular_values(x, &svd.u, k, 0x7e51d, 0.0)?;
    Ok(Vector::from_vec(vals))
}

/// Singular values below this are indistinguishable from rounding error.
fn rank_tolerance(n: usize, d: usize, sigma1: f64) -> f64 {
    n.max(d) as f64 * f64::EPSILON * sigma1
}

fn snap(v: f64, tol: f64) -> f64 {
    if v <= tol {
        0.0
    } else {
        v
    }
}

fn residual_top_singular_values(x: &Matrix, u: &Matrix, k: usize, seed: u64, floor: f64) -> Result<Vec<f64>> {
    let (n, d) = x.shape();
    let xu = x * u;
    let apply = |b: &Matrix| -> Matrix { x * b - &xu * u.tr_mul(b) };
    let apply_t = |c: &Matrix| -> Matrix { x.tr_mul(c) - u * xu.tr_mul(c) };
    let block = (k + 8).min(n.min(d));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = gaussian_matrix(d, block, &mut rng);
    init -= u * u.tr_mul(&init);
    top_singular_values(apply, apply_t, init, k, 2000, floor)
}

/// Largest singular value of `x`.
pub fn spectral_norm(x: &Matrix) -> Result<f64> {
    ensure_finite_matrix(x, "matrix")?;
    let (n, d) = x.shape();
    if n == 0 || d == 0 {
        return Ok(0.0);
    }
    let block = 8.min(n.min(d));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e17a);
    let init = gaussian_matrix(d, block, &mut rng);
    let vals = top_singular_values(|b| x * b, |c| x.tr_mul(c), init, 1, 5000, 0.0)?;
    Ok(vals[0])
}

/// Block subspace iteration with Rayleigh–Ritz extraction for the top `k`
/// singular values of an implicit operator `A` (`apply` = `A·`,
/// `apply_t` = `Aᵀ·`). `init` is `cols × block` with `block >= k`.
/// Stops early once the leading value is at or below `floor`.
fn top_singular_values<F, G>(
    apply: F,
    apply_t: G,
    init: Matrix,
    k: usize,
    max_iter: usize,
    floor: f64,
) -> Result<Vec<f64>>
where
    F: Fn(&Matrix) -> Matrix,
    G: Fn(&Matrix) -> Matrix,
{
    let mut basis = orthonormalize(&init);
    let mut prev: Vec<f64> = vec![f64::NAN; k];
    let mut ritz = vec![0.0; k];
    for _ in 0..max_iter.max(1) {
        let q = orthonormalize(&apply(&basis));
        // Bᵀ = Aᵀ Q, whose singular values are the Ritz values.
        let bt = apply_t(&q);
        let (_, s, _) = sorted_full_svd(&bt)?;
        for (i, r) in ritz.iter_mut().enumerate() {
            *r = s.get(i).copied().unwrap_or(0.0);
        }
        let scale = ritz[0].max(f64::MIN_POSITIVE);
        let converged = ritz
            .iter()
            .zip(&prev)
            .all(|(a, b)| (a - b).abs() <= RITZ_TOL * scale);
        if converged || ritz[0] <= floor || ritz[0] == 0.0 {
            break;
        }
        prev.copy_from_slice(&ritz);
        basis = orthonormalize(&bt);
    }
    if ritz.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("singular value iteration"));
    }
    Ok(ritz)
}

/// Cholesky factorization retrying with a diagonal jitter of
/// `1e-10 * scale`, growing ×10 for at most three retries.
pub fn cholesky_jittered(a: &Matrix, what: &str) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok(c);
    }
    let n = a.nrows();
    let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max).max(1.0);
    let mut jitter = 1e-10 * scale;
    for _ in 0..3 {
        let mut shifted = a.clone();
        for i in 0..n {
            shifted[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(shifted) {
            return Ok(c);
        }
        jitter *= 10.0;
    }
    Err(Error::NotPositiveDefinite(what.to_string()))
}

/// Symmetrizes in place: `(A + Aᵀ) / 2`.
pub fn symmetrize(a: &mut Matrix) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = m;
            a[(j, i)] = m;
        }
    }
}

pub fn min_eigenvalue(a: &Matrix) -> f64 {
    let mut s = a.clone();
    symmetrize(&mut s);
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_abs_eigenvalue(a: &Matrix) -> f64 {
    let mut s = a.clone();
    symmetrize(&mut s);
    SymmetricEigen::new(s)
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Symmetric PSD square root with eigenvalues clamped at `floor`.
pub fn sym_sqrt(a: &Matrix, floor: f64) -> Matrix {
    let mut s = a.clone();
    symmetrize(&mut s);
    let eig = SymmetricEigen::new(s);
    let roots = eig.eigenvalues.map(|v| v.max(floor).sqrt());
    &eig.eigenvectors * Matrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Sine of the largest principal angle between the column spaces of two
/// matrices with orthonormal columns.
pub fn subspace_distance(a: &Matrix, b: &Matrix) -> Result<f64> {
    let resid = b - a * a.tr_mul(b);
    let (_, s, _) = sorted_full_svd(&resid)?;
    Ok(s.iter().copied().fold(0.0, f64::max))
}

pub fn max_abs(a: &Matrix) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}
