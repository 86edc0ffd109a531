//! Conjugate Gaussian linear regression: the exact posterior (dense and
//! Woodbury routes), its low-rank approximation, and the error diagnostics
//! that compare the two.
//!
//! The model is `Y | X, β ~ N(Xβ, τ⁻¹ I)` with prior `β ~ N(μ_β, Σ_β)`.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::factored::FactoredCovariance;
use crate::linalg::{
    cholesky_jittered, ensure_finite_matrix, ensure_finite_vector, min_eigenvalue, symmetrize, Matrix,
    TruncatedSvd, Vector,
};
use crate::models::GaussianPrior;

/// Largest dimension for which dense `D × D` oracles are formed.
pub const DENSE_ORACLE_LIMIT: usize = 2000;

/// Gaussian with explicit mean and dense covariance.
#[derive(Debug, Clone)]
pub struct GaussianPosterior {
    pub mean: Vector,
    pub covariance: Matrix,
}

/// LR-GLM posterior for conjugate regression, covariance kept factored.
#[derive(Debug, Clone)]
pub struct LowRankPosterior {
    pub svd: TruncatedSvd,
    pub tau: f64,
    pub mean: Vector,
    pub cov: FactoredCovariance,
}

impl LowRankPosterior {
    pub fn prior(&self) -> &GaussianPrior {
        self.cov.prior()
    }

    /// `Σ̃_N[i, j]` in O(M²).
    pub fn query(&self, i: usize, j: usize) -> f64 {
        self.cov.entry(i, j)
    }

    pub fn to_dense(&self) -> GaussianPosterior {
        GaussianPosterior {
            mean: self.mean.clone(),
            covariance: self.cov.to_dense(),
        }
    }
}

pub fn posterior_query(p: &LowRankPosterior, i: usize, j: usize) -> Result<f64> {
    let d = p.mean.len();
    if i >= d || j >= d {
        return Err(Error::InvalidArgument(format!(
            "index ({i}, {j}) out of range for D={d}"
        )));
    }
    Ok(p.query(i, j))
}

fn check_problem(x: &Matrix, y: &Vector, prior: &GaussianPrior, tau: f64) -> Result<()> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows but Y has length {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.ncols() != prior.dim() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} columns but the prior has dimension {}",
            x.ncols(),
            prior.dim()
        )));
    }
    ensure_finite_matrix(x, "design matrix")?;
    ensure_finite_vector(y, "responses")
}

fn check_oracle(d: usize) -> Result<()> {
    if d > DENSE_ORACLE_LIMIT {
        Err(Error::OracleLimit {
            dim: d,
            limit: DENSE_ORACLE_LIMIT,
        })
    } else {
        Ok(())
    }
}

/// Exact posterior by forming and factorizing the `D × D` precision.
pub fn exact_posterior_dense(
    x: &Matrix,
    y: &Vector,
    prior: &GaussianPrior,
    tau: f64,
) -> Result<GaussianPosterior> {
    check_problem(x, y, prior, tau)?;
    check_oracle(x.ncols())?;
    let mut precision = prior.dense_precision() + x.tr_mul(x) * tau;
    symmetrize(&mut precision);
    let chol = cholesky_jittered(&precision, "posterior precision")?;
    let rhs = prior.matvec(&prior.mean(), true)? + x.tr_mul(y) * tau;
    let mean = chol.solve(&rhs);
    let mut covariance = chol.inverse();
    symmetrize(&mut covariance);
    Ok(GaussianPosterior { mean, covariance })
}

/// Exact posterior via the Woodbury identity; the inner solve is `N × N`.
pub fn exact_posterior_woodbury(
    x: &Matrix,
    y: &Vector,
    prior: &GaussianPrior,
    tau: f64,
) -> Result<GaussianPosterior> {
    check_problem(x, y, prior, tau)?;
    check_oracle(x.ncols())?;
    let n = x.nrows();
    // Σ_β Xᵀ, D × N
    let prior_xt = prior.apply(&x.transpose());
    let mut inner = Matrix::identity(n, n) / tau + x * &prior_xt;
    symmetrize(&mut inner);
    let chol = cholesky_jittered(&inner, "Woodbury inner system")?;

    let mut covariance = prior.dense_covariance() - &prior_xt * chol.solve(&prior_xt.transpose());
    symmetrize(&mut covariance);

    // μ_N = Σ_N (Σ_β⁻¹ μ_β + τ Xᵀ Y)
    let mu_b = prior.mean();
    let shifted = &mu_b - &prior_xt * chol.solve(&(x * &mu_b));
    let mean = shifted + &covariance * (x.tr_mul(y) * tau);
    Ok(GaussianPosterior { mean, covariance })
}

/// LR-GLM posterior `N(μ̃_N, Σ̃_N)` from a truncated SVD of `X`.
///
/// Isotropic zero-mean priors use the closed component-wise form; other
/// priors go through the `M × M` Woodbury core.
pub fn lr_posterior(
    svd: &TruncatedSvd,
    y: &Vector,
    prior: &GaussianPrior,
    tau: f64,
) -> Result<LowRankPosterior> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
    }
    if svd.n_obs() != y.len() || svd.dim() != prior.dim() {
        return Err(Error::DimensionMismatch(format!(
            "SVD is {}x{}, Y has length {}, prior dimension {}",
            svd.n_obs(),
            svd.dim(),
            y.len(),
            prior.dim()
        )));
    }
    ensure_finite_vector(y, "responses")?;
    let lambda = &svd.lambda;
    // diag(λ) Vᵀ Y = Uᵀ Xᵀ Y
    let c = svd.v.tr_mul(y).component_mul(lambda);

    if let (Some(s2), true) = (prior.isotropic_variance(), prior.has_zero_mean()) {
        let inv_s2 = 1.0 / s2;
        let mean_coef = lambda.map(|l| tau * l / (inv_s2 + tau * l * l));
        let mean = &svd.u * mean_coef.component_mul(&svd.v.tr_mul(y));
        let core_diag = lambda.map(|l| tau * l * l / (1.0 + tau * s2 * l * l));
        let cov =
            FactoredCovariance::from_parts(prior.clone(), &svd.u * s2, Matrix::from_diagonal(&core_diag));
        return Ok(LowRankPosterior {
            svd: svd.clone(),
            tau,
            mean,
            cov,
        });
    }

    let curvature = Matrix::from_diagonal(&lambda.map(|l| tau * l * l));
    let cov = FactoredCovariance::from_curvature(prior, &svd.u, &curvature)?;
    // μ̃ = μ_β + Σ_βU [τ (c − W S c) − W Uᵀ μ_β], S = UᵀΣ_βU
    let s = svd.u.tr_mul(cov.prior_u());
    let w = cov.core();
    let mut coef = (&c - w * (&s * &c)) * tau;
    let mu_b = prior.mean();
    if !prior.has_zero_mean() {
        coef -= w * svd.u.tr_mul(&mu_b);
    }
    let mean = mu_b + cov.prior_u() * coef;
    Ok(LowRankPosterior {
        svd: svd.clone(),
        tau,
        mean,
        cov,
    })
}

/// Upper bound on `‖μ̃_N − μ_N‖₂` for zero-mean priors:
/// `λ̄₁ (λ̄₁ ‖Ūᵀμ̃‖ + ‖V̄ᵀY‖) / (‖τΣ_β‖⁻¹ + λ̄²_{D−M})`.
///
/// `‖V̄ᵀY‖` is replaced by `‖Y − VVᵀY‖`, which dominates it.
pub fn mean_error_bound(
    svd: &TruncatedSvd,
    y: &Vector,
    prior: &GaussianPrior,
    tau: f64,
    mu_tilde: &Vector,
) -> Result<f64> {
    if !prior.has_zero_mean() {
        return Err(Error::Unsupported(
            "mean error bound requires a zero-mean prior".into(),
        ));
    }
    let rb = svd.residual_spectral_norm;
    if rb == 0.0 {
        return Ok(0.0);
    }
    let mu_perp = svd.complement_projection(mu_tilde).norm();
    let y_perp = svd.response_residual(y).norm();
    let denom = 1.0 / (tau * prior.spectral_norm()) + svd.residual_min_singular.powi(2);
    Ok(rb * (rb * mu_perp + y_perp) / denom)
}

/// `‖Σ_N⁻¹ − Σ̃_N⁻¹‖₂ = τ λ̄₁²`.
pub fn precision_error(svd: &TruncatedSvd, tau: f64) -> f64 {
    tau * svd.residual_spectral_norm * svd.residual_spectral_norm
}

/// Direct evaluation of `‖τ (XᵀX − UUᵀXᵀXUUᵀ)‖₂` on a dense instance.
pub fn precision_error_dense(x: &Matrix, svd: &TruncatedSvd, tau: f64) -> Result<f64> {
    check_oracle(x.ncols())?;
    let gram = x.tr_mul(x);
    let proj = &svd.u * svd.u.transpose();
    let mut diff = (&gram - &proj * &gram * &proj) * tau;
    symmetrize(&mut diff);
    Ok(SymmetricEigen::new(diff)
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max))
}

/// Large-sample limit of the approximate mean:
/// `Σ_β U* (U*ᵀ Σ_β U*)⁻¹ U*ᵀ β*`, the minimum `Σ_β⁻¹`-norm vector that
/// agrees with `β*` on span(U*).
pub fn limit_mean(u_star: &Matrix, prior: &GaussianPrior, beta_star: &Vector) -> Result<Vector> {
    if u_star.nrows() != beta_star.len() || prior.dim() != beta_star.len() {
        return Err(Error::DimensionMismatch("U*, prior and β* must share D".into()));
    }
    let prior_u = prior.apply(u_star);
    let s = u_star.tr_mul(&prior_u);
    let chol = cholesky_jittered(&s, "U*ᵀ Σ_β U*")?;
    Ok(prior_u * chol.solve(&u_star.tr_mul(beta_star)))
}

/// Information lost by the approximation for an isotropic prior:
/// `(½ Σ log(1 + τσ²λ̄ᵢ²), (τσ²/2) Σ λ̄ᵢ²)` over the residual singular values.
pub fn entropy_loss(residuals: &Vector, prior: &GaussianPrior, tau: f64) -> Result<(f64, f64)> {
    let s2 = prior
        .isotropic_variance()
        .ok_or_else(|| Error::Unsupported("entropy loss is only available for isotropic priors".into()))?;
    let k = tau * s2;
    let exact = 0.5 * residuals.iter().map(|l| (k * l * l).ln_1p()).sum::<f64>();
    let bound = 0.5 * k * residuals.iter().map(|l| l * l).sum::<f64>();
    Ok((exact, bound))
}

/// Smallest eigenvalue of `Σ̃_N − Σ_N`; non-negative in theory.
pub fn conservativeness_check(lr: &LowRankPosterior, exact: &GaussianPosterior) -> Result<f64> {
    let d = lr.mean.len();
    check_oracle(d)?;
    if exact.covariance.nrows() != d {
        return Err(Error::DimensionMismatch("posteriors differ in dimension".into()));
    }
    Ok(min_eigenvalue(&(lr.cov.to_dense() - &exact.covariance)))
}
