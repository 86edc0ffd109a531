//! Laplace approximations for GLM posteriors.
//!
//! [`lr_laplace_fit`] forms the Laplace approximation of the LR-GLM posterior,
//! in which the likelihood sees `X U Uᵀ β` instead of `X β`. Because the
//! likelihood depends on `β` only through `γ = Uᵀβ`, the mode is found by an
//! `M`-dimensional optimization and the covariance is the prior corrected on
//! span(U), stored in factored form. Nothing `D × D` is allocated.
//!
//! [`exact_laplace_dense`] and [`diagonal_laplace`] are the full-rank
//! baselines; they share the optimizer and family derivatives.

use std::time::{Duration, Instant};

use crate::conjugate::DENSE_ORACLE_LIMIT;
use crate::error::{Error, Result};
use crate::factored::FactoredCovariance;
use crate::linalg::{
    cholesky_jittered, ensure_finite_matrix, ensure_finite_vector, symmetrize, truncated_svd, Matrix,
    SvdMethod, TruncatedSvd, Vector,
};
use crate::models::{sigmoid, Family, GaussianPrior};
use crate::optim::{minimize, Objective, DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Stationarity level the mode must reach before the fit is accepted.
const STATIONARITY_LIMIT: f64 = 1e-6;
const NEWTON_STEPS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        LaplaceOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub svd: Duration,
    pub map: Duration,
    pub cov: Duration,
}

/// Gaussian approximation `N(μ̂, Σ̂)` with `Σ̂ = B − (B U) W (B U)ᵀ`, where `B`
/// is the prior covariance (or the inverse negative prior Hessian for
/// non-Gaussian priors).
#[derive(Debug, Clone)]
pub struct ImplicitPosterior {
    pub mean: Vector,
    pub gamma_star: Vector,
    pub u: Matrix,
    pub cov: FactoredCovariance,
    pub family: Family,
    /// Infinity norm of the objective gradient at the mode.
    pub map_grad_norm: f64,
    pub map_iterations: usize,
    pub timings: PhaseTimings,
}

impl ImplicitPosterior {
    pub fn query_cov(&self, i: usize, j: usize) -> f64 {
        self.cov.entry(i, j)
    }

    pub fn query_var(&self, i: usize) -> f64 {
        self.cov.variance(i)
    }

    pub fn core(&self) -> &Matrix {
        self.cov.core()
    }

    /// `Σᵢ Var(βᵢ)` without densifying.
    pub fn trace(&self) -> f64 {
        self.cov.trace()
    }

    pub fn to_dense(&self) -> LaplaceDense {
        LaplaceDense {
            mean: self.mean.clone(),
            covariance: self.cov.to_dense(),
        }
    }
}

/// Explicit Laplace approximation with dense covariance.
#[derive(Debug, Clone)]
pub struct LaplaceDense {
    pub mean: Vector,
    pub covariance: Matrix,
}

/// Means and per-coordinate variances of a factorized Laplace approximation.
#[derive(Debug, Clone)]
pub struct DiagonalLaplace {
    pub mean: Vector,
    pub variances: Vector,
}

fn check_inputs(x: &Matrix, y: &Vector, family: &Family, dim: usize) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but Y has length {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "X has {} columns but the prior has dimension {dim}",
            x.ncols()
        )));
    }
    family.validate()?;
    ensure_finite_matrix(x, "design matrix")?;
    ensure_finite_vector(y, "responses")?;
    family.check_responses(y)
}

/// Negative projected log posterior in `γ = Uᵀ(β − μ_β)`:
/// `−Σ φ(yₙ, (XU)ₙ γ + oₙ) + ½ γᵀ (UᵀΣ_βU)⁻¹ γ`, with offset `o = XUUᵀμ_β`.
pub struct ProjectedObjective<'a> {
    xu: &'a Matrix,
    y: &'a Vector,
    family: Family,
    offset: Option<Vector>,
    s_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> ProjectedObjective<'a> {
    pub fn new(
        xu: &'a Matrix,
        y: &'a Vector,
        family: Family,
        projected_prior_cov: &Matrix,
        offset: Option<Vector>,
    ) -> Result<Self> {
        let s_chol = cholesky_jittered(projected_prior_cov, "projected prior covariance UᵀΣ_βU")?;
        Ok(ProjectedObjective {
            xu,
            y,
            family,
            offset,
            s_chol,
        })
    }

    fn predictor(&self, gamma: &Vector) -> Vector {
        let mut a = self.xu * gamma;
        if let Some(o) = &self.offset {
            a += o;
        }
        a
    }

    /// `(XU)ᵀ diag(−φ″) (XU)` at `γ`.
    pub fn likelihood_curvature(&self, gamma: &Vector) -> Matrix {
        let a = self.predictor(gamma);
        let w = self.family.derivative_vec(self.y, &a, 2).map(|v| -v);
        weighted_gram(self.xu, &w)
    }

    fn prior_precision(&self) -> Matrix {
        self.s_chol.inverse()
    }
}

impl Objective for ProjectedObjective<'_> {
    fn dim(&self) -> usize {
        self.xu.ncols()
    }

    fn eval(&self, gamma: &Vector) -> Result<(f64, Vector)> {
        let a = self.predictor(gamma);
        let loglik = self.family.log_likelihood(self.y, &a);
        let d1 = self.family.derivative_vec(self.y, &a, 1);
        let s_inv_gamma = self.s_chol.solve(gamma);
        let value = -loglik + 0.5 * gamma.dot(&s_inv_gamma);
        let grad = s_inv_gamma - self.xu.tr_mul(&d1);
        Ok((value, grad))
    }
}

/// `Aᵀ diag(w) A`.
pub(crate) fn weighted_gram(a: &Matrix, w: &Vector) -> Matrix {
    let scaled = Matrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * w[i]);
    let mut g = a.tr_mul(&scaled);
    symmetrize(&mut g);
    g
}

/// Newton refinement for objectives with a cheap Hessian solve. Stops when
/// the gradient is below `tol` or a step fails to decrease the objective.
fn newton_polish<O, S>(obj: &O, mut x: Vector, tol: f64, solve: S) -> Result<(Vector, f64)>
where
    O: Objective + ?Sized,
    S: Fn(&Vector, &Vector) -> Result<Vector>,
{
    let (mut f, mut g) = obj.eval(&x)?;
    for _ in 0..NEWTON_STEPS {
        if g.amax() <= tol {
            break;
        }
        let step = solve(&x, &g)?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &x - &step * t;
            let (ft, gt) = obj.eval(&trial)?;
            // near the mode f changes by less than its rounding error, so a
            // step that keeps f level and shrinks the gradient is accepted too
            let level = ft <= f + 1e-12 * f.abs().max(1.0);
            if ft.is_finite() && (ft < f || (level && gt.amax() < g.amax())) {
                x = trial;
                f = ft;
                g = gt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok((x, g.amax()))
}

/// LR-Laplace approximation computing the truncated SVD first.
pub fn lr_laplace_fit(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    m: usize,
    svd_method: SvdMethod,
    opts: LaplaceOptions,
) -> Result<ImplicitPosterior> {
    let start = Instant::now();
    let svd = truncated_svd(x, m, svd_method)?;
    let svd_time = start.elapsed();
    let mut fit = lr_laplace_fit_svd(x, &svd, y, family, prior, opts)?;
    fit.timings.svd = svd_time;
    Ok(fit)
}

/// LR-Laplace approximation from a precomputed truncated SVD of `x`.
pub fn lr_laplace_fit_svd(
    x: &Matrix,
    svd: &TruncatedSvd,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    opts: LaplaceOptions,
) -> Result<ImplicitPosterior> {
    check_inputs(x, y, &family, prior.dim())?;
    if svd.dim() != x.ncols() {
        return Err(Error::DimensionMismatch("SVD does not match X".into()));
    }
    let map_start = Instant::now();
    let u = &svd.u;
    let xu = x * u;
    let prior_u = prior.apply(u);
    let s = u.tr_mul(&prior_u);
    let mu_b = prior.mean();
    let offset = (!prior.has_zero_mean()).then(|| &xu * u.tr_mul(&mu_b));
    let objective = ProjectedObjective::new(&xu, y, family, &s, offset)?;

    let init = Vector::zeros(u.ncols());
    let lbfgs = minimize(&objective, &init, opts.tol, opts.max_iter)?;
    let s_inv = objective.prior_precision();
    let (gamma, grad_norm) = newton_polish(&objective, lbfgs.argmin, opts.tol, |g, grad| {
        let h = objective.likelihood_curvature(g) + &s_inv;
        Ok(cholesky_jittered(&h, "projected negative Hessian")?.solve(grad))
    })?;
    if grad_norm.is_nan() || grad_norm > opts.tol.max(STATIONARITY_LIMIT) {
        return Err(Error::NotConverged {
            iterations: lbfgs.iterations,
            grad_norm,
        });
    }

    // μ̂ = Uγ* + (I − UUᵀ) Σ_βU (UᵀΣ_βU)⁻¹ γ*, which collapses to Σ_βU S⁻¹γ*.
    let mean = if prior.isotropic_variance().is_some() {
        u * &gamma + &mu_b
    } else {
        &prior_u * objective.s_chol.solve(&gamma) + &mu_b
    };
    let map_time = map_start.elapsed();

    let cov_start = Instant::now();
    let curvature = objective.likelihood_curvature(&gamma);
    let cov = FactoredCovariance::from_parts(
        prior.clone(),
        prior_u,
        crate::factored::woodbury_core(&s, &curvature)?,
    );
    let cov_time = cov_start.elapsed();

    Ok(ImplicitPosterior {
        mean,
        gamma_star: gamma,
        u: u.clone(),
        cov,
        family,
        map_grad_norm: grad_norm,
        map_iterations: lbfgs.iterations,
        timings: PhaseTimings {
            svd: Duration::ZERO,
            map: map_time,
            cov: cov_time,
        },
    })
}

/// A twice-differentiable log prior whose negative Hessian is cheap to
/// factor: either Gaussian or a product of univariate densities.
pub trait LogPrior {
    fn dim(&self) -> usize;
    /// Log density (up to a constant) and its gradient.
    fn log_density(&self, beta: &Vector) -> Result<(f64, Vector)>;
    /// Mode of the prior, used as the optimizer's starting point.
    fn mode(&self) -> Vector;
    /// `B = (−∇² log p(β))⁻¹` as a structured Gaussian covariance; fails
    /// where the prior is not locally log-concave.
    fn inverse_neg_hessian(&self, beta: &Vector) -> Result<GaussianPrior>;
    fn as_gaussian(&self) -> Option<&GaussianPrior> {
        None
    }
}

impl LogPrior for GaussianPrior {
    fn dim(&self) -> usize {
        GaussianPrior::dim(self)
    }

    fn log_density(&self, beta: &Vector) -> Result<(f64, Vector)> {
        self.log_prior(beta)
    }

    fn mode(&self) -> Vector {
        self.mean()
    }

    fn inverse_neg_hessian(&self, _beta: &Vector) -> Result<GaussianPrior> {
        Ok(self.centered())
    }

    fn as_gaussian(&self) -> Option<&GaussianPrior> {
        Some(self)
    }
}

/// Independent Student-t coordinates with `nu` degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentTPrior {
    pub nu: f64,
    pub location: Vector,
    pub scale: Vector,
}

impl StudentTPrior {
    pub fn new(nu: f64, location: Vector, scale: Vector) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::InvalidArgument(format!("nu must be > 0, got {nu}")));
        }
        if location.len() != scale.len() {
            return Err(Error::DimensionMismatch(
                "location and scale lengths differ".into(),
            ));
        }
        if scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidArgument("scales must be > 0".into()));
        }
        Ok(StudentTPrior { nu, location, scale })
    }

    pub fn standard(dim: usize, nu: f64) -> Result<Self> {
        Self::new(nu, Vector::zeros(dim), Vector::from_element(dim, 1.0))
    }

    /// `−∂² log p / ∂βᵢ²`, negative outside `|z| < √ν`.
    pub fn neg_hessian_diag(&self, beta: &Vector) -> Vector {
        Vector::from_fn(beta.len(), |i, _| {
            let z = (beta[i] - self.location[i]) / self.scale[i];
            let q = self.nu + z * z;
            (self.nu + 1.0) * (self.nu - z * z) / (q * q) / (self.scale[i] * self.scale[i])
        })
    }
}

impl LogPrior for StudentTPrior {
    fn dim(&self) -> usize {
        self.location.len()
    }

    fn log_density(&self, beta: &Vector) -> Result<(f64, Vector)> {
        if beta.len() != self.dim() {
            return Err(Error::DimensionMismatch("β has the wrong length".into()));
        }
        let mut value = 0.0;
        let grad = Vector::from_fn(beta.len(), |i, _| {
            let z = (beta[i] - self.location[i]) / self.scale[i];
            value -= 0.5 * (self.nu + 1.0) * (z * z / self.nu).ln_1p();
            -(self.nu + 1.0) * z / (self.nu + z * z) / self.scale[i]
        });
        Ok((value, grad))
    }

    fn mode(&self) -> Vector {
        self.location.clone()
    }

    fn inverse_neg_hessian(&self, beta: &Vector) -> Result<GaussianPrior> {
        let h = self.neg_hessian_diag(beta);
        if h.iter().any(|&v| v.is_nan() || v <= 0.0) {
            return Err(Error::NotPositiveDefinite(
                "prior Hessian is indefinite at the mode".into(),
            ));
        }
        GaussianPrior::diagonal(h.map(|v| 1.0 / v))
    }
}

/// Negative LR-GLM log posterior over the full `β ∈ ℝᴰ`; the likelihood is
/// evaluated as `(XU)(Uᵀβ)` so each call costs O(NM + DM).
struct FullLowRankObjective<'a, P: LogPrior + ?Sized> {
    xu: &'a Matrix,
    u: &'a Matrix,
    y: &'a Vector,
    family: Family,
    prior: &'a P,
}

impl<P: LogPrior + ?Sized> Objective for FullLowRankObjective<'_, P> {
    fn dim(&self) -> usize {
        self.u.nrows()
    }

    fn eval(&self, beta: &Vector) -> Result<(f64, Vector)> {
        let a = self.xu * self.u.tr_mul(beta);
        let loglik = self.family.log_likelihood(self.y, &a);
        let d1 = self.family.derivative_vec(self.y, &a, 1);
        let (lp, lp_grad) = self.prior.log_density(beta)?;
        let grad = -(self.u * self.xu.tr_mul(&d1)) - lp_grad;
        Ok((-(loglik + lp), grad))
    }
}

/// LR-Laplace approximation for a general twice-differentiable prior. The
/// mode is found over the full `ℝᴰ`; the covariance is
/// `B − B U (UᵀBU + H⁻¹)⁻¹ UᵀB` with `B = (−∇² log p(μ̂))⁻¹` and `H` the
/// projected likelihood curvature.
pub fn lr_laplace_fit_general<P: LogPrior + ?Sized>(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &P,
    m: usize,
    svd_method: SvdMethod,
    opts: LaplaceOptions,
) -> Result<ImplicitPosterior> {
    check_inputs(x, y, &family, prior.dim())?;
    let start = Instant::now();
    let svd = truncated_svd(x, m, svd_method)?;
    let svd_time = start.elapsed();

    let map_start = Instant::now();
    let u = &svd.u;
    let xu = x * u;
    let objective = FullLowRankObjective {
        xu: &xu,
        u,
        y,
        family,
        prior,
    };
    let lbfgs = minimize(&objective, &prior.mode(), opts.tol, opts.max_iter)?;
    let curvature_at = |beta: &Vector| {
        let a = &xu * u.tr_mul(beta);
        let w = family.derivative_vec(y, &a, 2).map(|v| -v);
        weighted_gram(&xu, &w)
    };
    let (mean, grad_norm) = newton_polish(&objective, lbfgs.argmin.clone(), opts.tol, |beta, grad| {
        let base = prior.inverse_neg_hessian(beta)?;
        FactoredCovariance::from_curvature(&base, u, &curvature_at(beta))?.matvec(grad)
    })
    .or_else(|e| match e {
        // outside the locally log-concave region Newton is unavailable;
        // the L-BFGS iterate stands
        Error::NotPositiveDefinite(_) => Ok((lbfgs.argmin.clone(), lbfgs.grad_norm)),
        other => Err(other),
    })?;
    if grad_norm.is_nan() || grad_norm > opts.tol.max(STATIONARITY_LIMIT) {
        return Err(Error::NotConverged {
            iterations: lbfgs.iterations,
            grad_norm,
        });
    }
    let map_time = map_start.elapsed();

    let cov_start = Instant::now();
    let base = prior.inverse_neg_hessian(&mean)?;
    let cov = FactoredCovariance::from_curvature(&base, u, &curvature_at(&mean))?;
    let cov_time = cov_start.elapsed();

    Ok(ImplicitPosterior {
        gamma_star: u.tr_mul(&mean),
        mean,
        u: u.clone(),
        cov,
        family,
        map_grad_norm: grad_norm,
        map_iterations: lbfgs.iterations,
        timings: PhaseTimings {
            svd: svd_time,
            map: map_time,
            cov: cov_time,
        },
    })
}

/// How the full-dimensional Laplace covariance is inverted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplaceRoute {
    /// Woodbury when `N < D`, dense otherwise.
    Auto,
    /// Factor the `D × D` precision directly.
    Dense,
    /// Invert through an `N × N` system.
    Woodbury,
}

struct FullObjective<'a> {
    x: &'a Matrix,
    y: &'a Vector,
    family: Family,
    prior: &'a GaussianPrior,
}

impl Objective for FullObjective<'_> {
    fn dim(&self) -> usize {
        self.x.ncols()
    }

    fn eval(&self, beta: &Vector) -> Result<(f64, Vector)> {
        let a = self.x * beta;
        let loglik = self.family.log_likelihood(self.y, &a);
        let d1 = self.family.derivative_vec(self.y, &a, 1);
        let (lp, lp_grad) = self.prior.log_prior(beta)?;
        Ok((-(loglik + lp), -(self.x.tr_mul(&d1)) - lp_grad))
    }
}

/// `(Σ_β⁻¹ + Xᵀ diag(w) X)⁻¹` applied to `rhs` (or returned densely when
/// `rhs` is `None`), using the chosen route.
fn full_precision_solve(
    x: &Matrix,
    w: &Vector,
    prior: &GaussianPrior,
    route: LaplaceRoute,
    rhs: Option<&Vector>,
) -> Result<Matrix> {
    let (n, d) = x.shape();
    let woodbury = match route {
        LaplaceRoute::Auto => n < d,
        LaplaceRoute::Dense => false,
        LaplaceRoute::Woodbury => true,
    };
    if woodbury {
        // Σ_β − Σ_βXᵀ D½ (I + D½ X Σ_β Xᵀ D½)⁻¹ D½ X Σ_β,  D = diag(w)
        let sqrt_w = w.map(|v| v.max(0.0).sqrt());
        let xs = Matrix::from_fn(n, d, |i, j| x[(i, j)] * sqrt_w[i]);
        let prior_xst = prior.apply(&xs.transpose());
        let mut inner = Matrix::identity(n, n) + &xs * &prior_xst;
        symmetrize(&mut inner);
        let chol = cholesky_jittered(&inner, "Woodbury Laplace system")?;
        match rhs {
            Some(r) => {
                let r = Matrix::from_column_slice(d, 1, r.as_slice());
                let pr = prior.apply(&r);
                Ok(&pr - &prior_xst * chol.solve(&(&xs * &pr)))
            }
            None => {
                let mut cov = prior.dense_covariance() - &prior_xst * chol.solve(&prior_xst.transpose());
                symmetrize(&mut cov);
                Ok(cov)
            }
        }
    } else {
        let mut precision = prior.dense_precision() + weighted_gram(x, w);
        symmetrize(&mut precision);
        let chol = cholesky_jittered(&precision, "Laplace precision")?;
        match rhs {
            Some(r) => Ok(chol.solve(&Matrix::from_column_slice(d, 1, r.as_slice()))),
            None => {
                let mut cov = chol.inverse();
                symmetrize(&mut cov);
                Ok(cov)
            }
        }
    }
}

fn full_map(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    route: LaplaceRoute,
    opts: LaplaceOptions,
) -> Result<(Vector, Vector)> {
    let objective = FullObjective { x, y, family, prior };
    let lbfgs = minimize(&objective, &prior.mean(), opts.tol, opts.max_iter)?;
    let curvature_weights = |beta: &Vector| family.derivative_vec(y, &(x * beta), 2).map(|v| -v);
    let (mean, grad_norm) = newton_polish(&objective, lbfgs.argmin, opts.tol, |beta, grad| {
        let step = full_precision_solve(x, &curvature_weights(beta), prior, route, Some(grad))?;
        Ok(step.column(0).into_owned())
    })?;
    if grad_norm.is_nan() || grad_norm > opts.tol.max(STATIONARITY_LIMIT) {
        return Err(Error::NotConverged {
            iterations: lbfgs.iterations,
            grad_norm,
        });
    }
    let w = curvature_weights(&mean);
    Ok((mean, w))
}

fn route_allowed(n: usize, d: usize, route: LaplaceRoute) -> Result<LaplaceRoute> {
    let resolved = match route {
        LaplaceRoute::Auto if n < d => LaplaceRoute::Woodbury,
        LaplaceRoute::Auto => LaplaceRoute::Dense,
        r => r,
    };
    let (dim, ok) = match resolved {
        LaplaceRoute::Woodbury => (n, n <= DENSE_ORACLE_LIMIT),
        _ => (d, d <= DENSE_ORACLE_LIMIT),
    };
    if ok {
        Ok(resolved)
    } else {
        Err(Error::OracleLimit {
            dim,
            limit: DENSE_ORACLE_LIMIT,
        })
    }
}

/// Full-rank Laplace approximation, choosing the inversion route by shape.
pub fn exact_laplace_dense(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    opts: LaplaceOptions,
) -> Result<LaplaceDense> {
    exact_laplace_with_route(x, y, family, prior, LaplaceRoute::Auto, opts)
}

pub fn exact_laplace_with_route(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    route: LaplaceRoute,
    opts: LaplaceOptions,
) -> Result<LaplaceDense> {
    check_inputs(x, y, &family, prior.dim())?;
    let route = route_allowed(x.nrows(), x.ncols(), route)?;
    let (mean, w) = full_map(x, y, family, prior, route, opts)?;
    let covariance = full_precision_solve(x, &w, prior, route, None)?;
    Ok(LaplaceDense { mean, covariance })
}

/// Factorized Laplace baseline: variances are reciprocals of the diagonal of
/// the negative log-posterior Hessian at the mode.
pub fn diagonal_laplace(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    opts: LaplaceOptions,
) -> Result<DiagonalLaplace> {
    check_inputs(x, y, &family, prior.dim())?;
    let route = route_allowed(x.nrows(), x.ncols(), LaplaceRoute::Auto)?;
    let (mean, w) = full_map(x, y, family, prior, route, opts)?;
    let prec = prior.precision_diagonal();
    let variances = Vector::from_fn(x.ncols(), |j, _| {
        let lik: f64 = (0..x.nrows()).map(|i| w[i] * x[(i, j)] * x[(i, j)]).sum();
        1.0 / (prec[j] + lik)
    });
    Ok(DiagonalLaplace { mean, variances })
}

/// `sigmoid(m / √(1 + π v / 8))`.
pub fn probit_probability(mean: f64, variance: f64) -> f64 {
    sigmoid(mean / (1.0 + std::f64::consts::PI * variance / 8.0).sqrt())
}

/// Posterior predictive probability of `y = +1` for a logistic fit.
pub fn predict_proba(p: &ImplicitPosterior, x_new: &Vector) -> Result<f64> {
    if p.family != Family::Logistic {
        return Err(Error::Unsupported(format!(
            "predictive probabilities need the logistic family, got {}",
            p.family.name()
        )));
    }
    if x_new.len() != p.mean.len() {
        return Err(Error::DimensionMismatch(format!(
            "x_new has length {}, expected {}",
            x_new.len(),
            p.mean.len()
        )));
    }
    let m = x_new.dot(&p.mean);
    let v = p.cov.quad_form(x_new)?.max(0.0);
    Ok(probit_probability(m, v))
}
