//! Gaussian covariances of the form `Σ = Σ_β − (Σ_β U) W (Σ_β U)ᵀ`.
//!
//! Both the conjugate low-rank posterior and the LR-Laplace approximation
//! produce covariances of this shape: the prior covariance corrected on an
//! `M`-dimensional subspace. Only `Σ_β U` (`D × M`) and the `M × M` core `W`
//! are stored, so single entries cost O(M²) and nothing `D × D` is formed.

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, symmetrize, Matrix, Vector};
use crate::models::GaussianPrior;

#[derive(Debug, Clone)]
pub struct FactoredCovariance {
    prior: GaussianPrior,
    prior_u: Matrix,
    core: Matrix,
}

impl FactoredCovariance {
    /// Covariance whose precision is `Σ_β⁻¹ + U H Uᵀ` for a PSD curvature
    /// `H` (`M × M`). The core is `W = (UᵀΣ_βU + H⁻¹)⁻¹`, evaluated as
    /// `L⁻ᵀ (I + G)⁻¹ G L⁻¹` with `UᵀΣ_βU = L Lᵀ` and `G = Lᵀ H L`, which
    /// stays well defined when `H` is singular.
    pub fn from_curvature(prior: &GaussianPrior, u: &Matrix, curvature: &Matrix) -> Result<Self> {
        let prior_u = prior.apply(u);
        let core = woodbury_core(&u.tr_mul(&prior_u), curvature)?;
        Ok(FactoredCovariance {
            prior: prior.clone(),
            prior_u,
            core,
        })
    }

    /// Builds directly from `Σ_β U` and a symmetric core.
    pub fn from_parts(prior: GaussianPrior, prior_u: Matrix, core: Matrix) -> Self {
        FactoredCovariance { prior, prior_u, core }
    }

    pub fn dim(&self) -> usize {
        self.prior_u.nrows()
    }

    pub fn prior(&self) -> &GaussianPrior {
        &self.prior
    }

    pub fn core(&self) -> &Matrix {
        &self.core
    }

    /// `Σ_β U`.
    pub fn prior_u(&self) -> &Matrix {
        &self.prior_u
    }

    /// `Σ[i, j]` in O(M²).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        // evaluate in a fixed index order so the result is exactly symmetric
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let ri = self.prior_u.row(i);
        let rj = self.prior_u.row(j);
        let m = self.core.nrows();
        let mut corr = 0.0;
        for a in 0..m {
            let mut acc = 0.0;
            for b in 0..m {
                acc += self.core[(a, b)] * rj[b];
            }
            corr += ri[a] * acc;
        }
        self.prior.entry(i, j) - corr
    }

    pub fn variance(&self, i: usize) -> f64 {
        self.entry(i, i)
    }

    /// `Σ v` in O(DM).
    pub fn matvec(&self, v: &Vector) -> Result<Vector> {
        let proj = self.prior_u.tr_mul(v);
        Ok(self.prior.matvec(v, false)? - &self.prior_u * (&self.core * proj))
    }

    /// `xᵀ Σ x` in O(DM).
    pub fn quad_form(&self, x: &Vector) -> Result<f64> {
        let proj = self.prior_u.tr_mul(x);
        let prior_term = x.dot(&self.prior.matvec(x, false)?);
        Ok(prior_term - proj.dot(&(&self.core * &proj)))
    }

    /// `tr(Σ)` as a sum of O(M²) diagonal queries.
    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.variance(i)).sum()
    }

    /// Dense `D × D` matrix; only for small problems and oracles.
    pub fn to_dense(&self) -> Matrix {
        let mut s = self.prior.dense_covariance() - &self.prior_u * &self.core * self.prior_u.transpose();
        symmetrize(&mut s);
        s
    }
}

/// `(S + H⁻¹)⁻¹` for SPD `S` and PSD `H`, without inverting `H`.
pub(crate) fn woodbury_core(s: &Matrix, h: &Matrix) -> Result<Matrix> {
    let m = s.nrows();
    if h.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!(
            "curvature is {:?}, expected {m}x{m}",
            h.shape()
        )));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("curvature matrix"));
    }
    let chol_s = cholesky_jittered(s, "projected prior covariance UᵀΣ_βU")?;
    let l = chol_s.l();
    let l_inv = l
        .solve_lower_triangular(&Matrix::identity(m, m))
        .ok_or_else(|| Error::NotPositiveDefinite("projected prior covariance".into()))?;
    let mut g = l.transpose() * h * &l;
    symmetrize(&mut g);
    let a = Matrix::identity(m, m) + &g;
    let chol_a = cholesky_jittered(&a, "I + LᵀHL (curvature must be PSD)")?;
    let mut t = chol_a.solve(&g);
    symmetrize(&mut t);
    let mut w = l_inv.transpose() * t * l_inv;
    symmetrize(&mut w);
    Ok(w)
}
