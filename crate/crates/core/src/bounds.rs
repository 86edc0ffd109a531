//! Computable error bounds for LR-Laplace and exact Gaussian `W₂`.
//!
//! All bounds use `α = ‖Σ_β‖₂⁻¹` as the strong log-concavity constant of the
//! posterior, valid for a Gaussian prior and a log-concave likelihood.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::conjugate::DENSE_ORACLE_LIMIT;
use crate::error::{Error, Result};
use crate::linalg::{max_abs_eigenvalue, min_eigenvalue, sym_sqrt, symmetrize, Matrix, TruncatedSvd, Vector};
use crate::lr_laplace::{ImplicitPosterior, LaplaceDense};
use crate::models::{Family, GaussianPrior};

/// Inputs and result of the MAP and `W₂` bounds for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambda1: f64,
    pub lambda_bar1: f64,
    pub alpha: f64,
    /// `(‖φ′(Y, Xμ̂)‖₂ + λ₁‖Ūᵀμ̂‖₂ ‖φ″(Y, A)‖_∞) / α`.
    pub c: f64,
    /// `λ̄₁ c`, the bound on `‖μ̂ − μ̄‖₂`.
    pub map_bound: f64,
    /// `‖φ′(Y, Xμ̂)‖₂`.
    pub phi1_norm: f64,
    /// Sup of `|φ″|` over the intervals between `xₙᵀUUᵀμ̂` and `xₙᵀμ̂`.
    pub phi2_interval_sup: f64,
    pub phi2_sup: f64,
    pub phi3_sup: f64,
    pub r: f64,
    /// `tr(Σ̂)` of the LR-Laplace covariance.
    pub trace_lr_cov: f64,
    /// `‖Σ̄‖₂`, or `‖Σ_β‖₂` when `prior_relaxed`.
    pub sigma_bar_norm: f64,
    pub prior_relaxed: bool,
    pub w2_bound: f64,
    /// Exact Gaussian `W₂` between the two approximations, when the dense
    /// fit was available.
    pub w2_actual: Option<f64>,
}

struct MapTerms {
    alpha: f64,
    c: f64,
    phi1_norm: f64,
    phi2_interval_sup: f64,
}

fn map_terms(
    x: &Matrix,
    svd: &TruncatedSvd,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    mu_hat: &Vector,
) -> Result<MapTerms> {
    if !family.is_log_concave() {
        return Err(Error::Unsupported(format!(
            "{} is not log-concave",
            family.name()
        )));
    }
    if x.nrows() != y.len() || x.ncols() != mu_hat.len() || svd.dim() != x.ncols() || prior.dim() != x.ncols()
    {
        return Err(Error::DimensionMismatch(
            "X, Y, SVD, prior and μ̂ shapes disagree".into(),
        ));
    }
    family.validate()?;
    family.check_responses(y)?;
    let alpha = 1.0 / prior.spectral_norm();
    let full = x * mu_hat;
    let projected = (x * &svd.u) * svd.u.tr_mul(mu_hat);
    let phi1_norm = family.derivative_vec(y, &full, 1).norm();
    let max_abs_y = y.amax();
    let phi2_interval_sup = (0..y.len())
        .map(|n| {
            let (lo, hi) = if full[n] <= projected[n] {
                (full[n], projected[n])
            } else {
                (projected[n], full[n])
            };
            family.d2_sup_on_interval(lo, hi, max_abs_y)
        })
        .fold(0.0, f64::max);
    let complement_norm = svd.complement_projection(mu_hat).norm();
    let c = (phi1_norm + svd.lambda1() * complement_norm * phi2_interval_sup) / alpha;
    Ok(MapTerms {
        alpha,
        c,
        phi1_norm,
        phi2_interval_sup,
    })
}

/// Upper bound on the distance between the LR-GLM MAP `μ̂` and the exact
/// MAP: `λ̄₁ (‖φ′(Y, Xμ̂)‖₂ + λ₁ ‖Ūᵀμ̂‖₂ ‖φ″(Y, A)‖_∞) / α`.
///
/// The unknown intermediate points `A` are handled by taking the sup of
/// `|φ″|` over each interval `[xₙᵀUUᵀμ̂, xₙᵀμ̂]`.
pub fn map_error_bound(
    x: &Matrix,
    svd: &TruncatedSvd,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    mu_hat: &Vector,
) -> Result<f64> {
    let lb = svd.residual_spectral_norm;
    if lb == 0.0 {
        return Ok(0.0);
    }
    Ok(lb * map_terms(x, svd, y, family, prior, mu_hat)?.c)
}

/// Bound on `W₂` between the LR-Laplace and Laplace approximations.
///
/// With `dense_fit` the norm `‖Σ̄‖₂` is taken from the dense covariance and
/// the exact `W₂` is reported alongside; without it `‖Σ_β‖₂` is used in its
/// place and the report is flagged `prior_relaxed`.
pub fn w2_bound(
    x: &Matrix,
    svd: &TruncatedSvd,
    y: &Vector,
    family: Family,
    prior: &GaussianPrior,
    lr_fit: &ImplicitPosterior,
    dense_fit: Option<&LaplaceDense>,
) -> Result<BoundReport> {
    let terms = map_terms(x, svd, y, family, prior, &lr_fit.mean)?;
    let sup = family.sup_bounds(y.amax());
    let l1 = svd.lambda1();
    let lb = svd.residual_spectral_norm;
    let r = svd.u.tr_mul(&lr_fit.mean).amax() * sup.d3 + l1 * terms.c * sup.d3;
    let trace_lr_cov = lr_fit.trace().max(0.0);

    let (sigma_bar_norm, prior_relaxed, w2_actual) = match dense_fit {
        Some(dense) => {
            if dense.covariance.nrows() > DENSE_ORACLE_LIMIT {
                return Err(Error::OracleLimit {
                    dim: dense.covariance.nrows(),
                    limit: DENSE_ORACLE_LIMIT,
                });
            }
            let lr_dense = lr_fit.to_dense();
            let actual = w2_gaussians(
                &lr_dense.mean,
                &lr_dense.covariance,
                &dense.mean,
                &dense.covariance,
            )?;
            (max_abs_eigenvalue(&dense.covariance), false, Some(actual))
        }
        None => (prior.spectral_norm(), true, None),
    };

    let w2 = if lb == 0.0 {
        0.0
    } else {
        let first = terms.c * (prior.inverse_spectral_norm() + (l1 + lb).powi(2) * sup.d2);
        let second = (l1 * l1 * r + (lb + 2.0 * l1) * sup.d2) * trace_lr_cov.sqrt();
        std::f64::consts::SQRT_2 * lb * sigma_bar_norm * (first + second)
    };

    Ok(BoundReport {
        lambda1: l1,
        lambda_bar1: lb,
        alpha: terms.alpha,
        c: terms.c,
        map_bound: lb * terms.c,
        phi1_norm: terms.phi1_norm,
        phi2_interval_sup: terms.phi2_interval_sup,
        phi2_sup: sup.d2,
        phi3_sup: sup.d3,
        r,
        trace_lr_cov,
        sigma_bar_norm,
        prior_relaxed,
        w2_bound: w2,
        w2_actual,
    })
}

fn check_spd(cov: &Matrix, what: &str) -> Result<()> {
    if !cov.is_square() {
        return Err(Error::DimensionMismatch(format!("{what} is not square")));
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("covariance"));
    }
    let scale = max_abs_eigenvalue(cov).max(1.0);
    if min_eigenvalue(cov) < -1e-10 * scale {
        return Err(Error::NotPositiveDefinite(format!(
            "{what} has a negative eigenvalue"
        )));
    }
    Ok(())
}

/// Exact `W₂` between `N(m1, c1)` and `N(m2, c2)`:
/// `√(‖m1 − m2‖² + tr(c1 + c2 − 2 (c2½ c1 c2½)½))`.
pub fn w2_gaussians(m1: &Vector, c1: &Matrix, m2: &Vector, c2: &Matrix) -> Result<f64> {
    let d = m1.len();
    if m2.len() != d || c1.shape() != (d, d) || c2.shape() != (d, d) {
        return Err(Error::DimensionMismatch("Gaussian dimensions disagree".into()));
    }
    check_spd(c1, "first covariance")?;
    check_spd(c2, "second covariance")?;
    let root2 = sym_sqrt(c2, 1e-12);
    let mut cross = &root2 * c1 * &root2;
    symmetrize(&mut cross);
    let cross_root_trace: f64 = SymmetricEigen::new(cross)
        .eigenvalues
        .iter()
        .map(|v| v.max(1e-12).sqrt())
        .sum();
    let bures = c1.trace() + c2.trace() - 2.0 * cross_root_trace;
    Ok(((m1 - m2).norm_squared() + bures.max(0.0)).sqrt())
}

/// Per-coordinate `|E₁ − E₂|` and `|sd₁ − sd₂|`.
pub fn functional_gaps(m1: &Vector, c1: &Matrix, m2: &Vector, c2: &Matrix) -> Result<(Vector, Vector)> {
    let d = m1.len();
    if m2.len() != d || c1.shape() != (d, d) || c2.shape() != (d, d) {
        return Err(Error::DimensionMismatch("Gaussian dimensions disagree".into()));
    }
    let mean_gap = (m1 - m2).abs();
    let sd_gap = Vector::from_fn(d, |i, _| {
        (c1[(i, i)].max(0.0).sqrt() - c2[(i, i)].max(0.0).sqrt()).abs()
    });
    Ok((mean_gap, sd_gap))
}
