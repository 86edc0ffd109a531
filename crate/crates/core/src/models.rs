//! GLM likelihood families and structured Gaussian priors.
//!
//! A family is described by its mapping function `phi(y, a)`, the per-datum
//! log-likelihood as a function of the linear predictor `a`, together with
//! its first three derivatives in `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky_jittered, Matrix, Vector};

/// `sup |s(a)(1 - s(a))(1 - 2 s(a))|` for the logistic sigmoid `s`.
pub const LOGISTIC_D3_SUP: f64 = 0.096_225_044_864_937_63; // 1 / (6 √3)

// Sup-norms of the y-scaled parts of the softplus-Poisson derivatives,
// obtained by a dense grid search over a ∈ [-40, 40] and rounded up.
const SOFTPLUS_D2_Y_SUP: f64 = 0.16710;
const SOFTPLUS_D3_Y_SUP: f64 = 0.06092;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Family {
    /// `phi(y, a) = -tau (a - y)^2 / 2`.
    Gaussian { tau: f64 },
    /// `phi(y, a) = -log(1 + exp(-y a))` with `y ∈ {-1, +1}`.
    Logistic,
    /// Poisson with rate `log(1 + exp(a))`; `phi` omits the `log y!` constant.
    PoissonSoftplus,
}

/// Known sup-norms of `|phi'|`, `|phi''|`, `|phi'''|` over `a`, for the
/// responses at hand. `None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupBounds {
    pub d1: Option<f64>,
    pub d2: f64,
    pub d3: f64,
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(t))` without overflow.
#[inline]
pub fn softplus(t: f64) -> f64 {
    if t > 30.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `sigmoid(a) / softplus(a)`, stable as `a -> -inf`.
#[inline]
fn sigmoid_over_softplus(a: f64) -> f64 {
    if a < -30.0 {
        let x = a.exp();
        (1.0 - x) * (1.0 + 0.5 * x)
    } else {
        sigmoid(a) / softplus(a)
    }
}

/// `log softplus(a)`, stable as `a -> -inf`.
#[inline]
fn ln_softplus(a: f64) -> f64 {
    if a < -30.0 {
        a - 0.5 * a.exp()
    } else {
        softplus(a).ln()
    }
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Logistic => "logistic",
            Family::PoissonSoftplus => "poisson",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Family::Gaussian { tau } = self {
            if !(tau.is_finite() && *tau > 0.0) {
                return Err(Error::InvalidArgument(format!("tau must be > 0, got {tau}")));
            }
        }
        Ok(())
    }

    pub fn check_response(&self, y: f64) -> Result<()> {
        let ok = match self {
            Family::Gaussian { .. } => y.is_finite(),
            Family::Logistic => y == 1.0 || y == -1.0,
            Family::PoissonSoftplus => y.is_finite() && y >= 0.0 && y.fract() == 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidResponse {
                family: self.name(),
                detail: format!("value {y} is outside the response domain"),
            })
        }
    }

    pub fn check_responses(&self, y: &Vector) -> Result<()> {
        y.iter().try_for_each(|&v| self.check_response(v))
    }

    /// The `order`-th derivative of `phi(y, .)` at `a`, `order <= 3`.
    /// Inputs are assumed to be in the response domain.
    pub fn derivative(&self, y: f64, a: f64, order: u8) -> f64 {
        match *self {
            Family::Gaussian { tau } => match order {
                0 => -0.5 * tau * (a - y) * (a - y),
                1 => tau * (y - a),
                2 => -tau,
                _ => 0.0,
            },
            Family::Logistic => match order {
                0 => {
                    let z = y * a;
                    if z > 0.0 {
                        -(-z).exp().ln_1p()
                    } else {
                        z - z.exp().ln_1p()
                    }
                }
                1 => y * sigmoid(-y * a),
                2 => -sigmoid(a) * sigmoid(-a),
                _ => {
                    let s = sigmoid(a);
                    -s * (1.0 - s) * (1.0 - 2.0 * s)
                }
            },
            Family::PoissonSoftplus => {
                let sg = sigmoid(a);
                let r = sigmoid_over_softplus(a);
                let s2 = sg * (1.0 - sg);
                match order {
                    0 => y * ln_softplus(a) - softplus(a),
                    1 => y * r - sg,
                    2 => y * (r * (1.0 - sg) - r * r) - s2,
                    _ => {
                        let s3 = s2 * (1.0 - 2.0 * sg);
                        let s2_over_s = r * (1.0 - sg);
                        let s3_over_s = s2_over_s * (1.0 - 2.0 * sg);
                        y * (s3_over_s - 3.0 * r * s2_over_s + 2.0 * r * r * r) - s3
                    }
                }
            }
        }
    }

    pub fn phi(&self, y: f64, a: f64) -> f64 {
        self.derivative(y, a, 0)
    }

    /// Vectorized derivative of the given order, validating responses.
    pub fn phi_vec(&self, y: &Vector, a: &Vector, order: u8) -> Result<Vector> {
        if y.len() != a.len() {
            return Err(Error::DimensionMismatch(format!(
                "responses have length {} but predictors {}",
                y.len(),
                a.len()
            )));
        }
        if order > 3 {
            return Err(Error::InvalidArgument(format!("derivative order {order} > 3")));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("linear predictor"));
        }
        self.check_responses(y)?;
        Ok(y.zip_map(a, |yi, ai| self.derivative(yi, ai, order)))
    }

    /// Sum of `phi(y_n, a_n)`; responses are assumed valid.
    pub fn log_likelihood(&self, y: &Vector, a: &Vector) -> f64 {
        y.iter()
            .zip(a.iter())
            .map(|(&yi, &ai)| self.derivative(yi, ai, 0))
            .sum()
    }

    /// Derivative vector without response validation (hot paths).
    pub(crate) fn derivative_vec(&self, y: &Vector, a: &Vector, order: u8) -> Vector {
        y.zip_map(a, |yi, ai| self.derivative(yi, ai, order))
    }

    /// Sup-norms of the derivatives over all `a` for responses bounded by
    /// `max_abs_y`.
    pub fn sup_bounds(&self, max_abs_y: f64) -> SupBounds {
        match *self {
            Family::Gaussian { tau } => SupBounds {
                d1: None,
                d2: tau,
                d3: 0.0,
            },
            Family::Logistic => SupBounds {
                d1: Some(1.0),
                d2: 0.25,
                d3: LOGISTIC_D3_SUP,
            },
            Family::PoissonSoftplus => SupBounds {
                d1: Some(max_abs_y.max(1.0)),
                d2: SOFTPLUS_D2_Y_SUP * max_abs_y + 0.25,
                d3: SOFTPLUS_D3_Y_SUP * max_abs_y + LOGISTIC_D3_SUP,
            },
        }
    }

    /// Sup of `|phi''|` over the interval `[lo, hi]` of linear predictor values.
    /// Tighter than the global sup for the logistic family, where `|phi''|`
    /// decreases away from zero; other families fall back to the global sup.
    pub fn d2_sup_on_interval(&self, lo: f64, hi: f64, max_abs_y: f64) -> f64 {
        match self {
            Family::Logistic => {
                let nearest = if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else if lo > 0.0 {
                    lo
                } else {
                    hi
                };
                self.derivative(1.0, nearest, 2).abs()
            }
            _ => self.sup_bounds(max_abs_y).d2,
        }
    }

    /// Whether `phi(y, .)` is concave for every response.
    pub fn is_log_concave(&self) -> bool {
        true
    }
}

/// Covariance structure of a Gaussian prior.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorCovariance {
    Isotropic(f64),
    Diagonal(Vector),
    /// `diag(d) + L Lᵀ` with `L` of shape `D × k`.
    DiagonalPlusLowRank {
        diag: Vector,
        factor: Matrix,
    },
}

/// Gaussian prior `N(mean, Σ_β)` with structured covariance supporting O(D)
/// (or O(Dk)) products with `Σ_β` and `Σ_β⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    dim: usize,
    mean: Option<Vector>,
    cov: PriorCovariance,
    // (I + Lᵀ diag(d)⁻¹ L)⁻¹ for the Woodbury inverse.
    capacitance_inv: Option<Matrix>,
}

impl GaussianPrior {
    pub fn isotropic(dim: usize, variance: f64) -> Result<Self> {
        if !(variance.is_finite() && variance > 0.0) {
            return Err(Error::NotPositiveDefinite(format!(
                "prior variance must be > 0, got {variance}"
            )));
        }
        Ok(GaussianPrior {
            dim,
            mean: None,
            cov: PriorCovariance::Isotropic(variance),
            capacitance_inv: None,
        })
    }

    pub fn diagonal(diag: Vector) -> Result<Self> {
        check_positive_diag(&diag)?;
        Ok(GaussianPrior {
            dim: diag.len(),
            mean: None,
            cov: PriorCovariance::Diagonal(diag),
            capacitance_inv: None,
        })
    }

    pub fn diagonal_plus_low_rank(diag: Vector, factor: Matrix) -> Result<Self> {
        check_positive_diag(&diag)?;
        if factor.nrows() != diag.len() {
            return Err(Error::DimensionMismatch(format!(
                "low-rank factor has {} rows, diagonal has {}",
                factor.nrows(),
                diag.len()
            )));
        }
        let k = factor.ncols();
        let scaled = Matrix::from_fn(factor.nrows(), k, |i, j| factor[(i, j)] / diag[i]);
        let cap = Matrix::identity(k, k) + factor.tr_mul(&scaled);
        let cap_inv = cholesky_jittered(&cap, "prior capacitance matrix")?.inverse();
        Ok(GaussianPrior {
            dim: diag.len(),
            mean: None,
            cov: PriorCovariance::DiagonalPlusLowRank { diag, factor },
            capacitance_inv: Some(cap_inv),
        })
    }

    pub fn with_mean(mut self, mean: Vector) -> Result<Self> {
        if mean.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "prior mean has length {}, expected {}",
                mean.len(),
                self.dim
            )));
        }
        self.mean = if mean.iter().all(|&v| v == 0.0) {
            None
        } else {
            Some(mean)
        };
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn covariance(&self) -> &PriorCovariance {
        &self.cov
    }

    pub fn mean(&self) -> Vector {
        self.mean.clone().unwrap_or_else(|| Vector::zeros(self.dim))
    }

    pub fn has_zero_mean(&self) -> bool {
        self.mean.is_none()
    }

    pub fn isotropic_variance(&self) -> Option<f64> {
        match self.cov {
            PriorCovariance::Isotropic(v) => Some(v),
            _ => None,
        }
    }

    /// Isotropic or diagonal covariance.
    pub fn is_diagonal(&self) -> bool {
        !matches!(self.cov, PriorCovariance::DiagonalPlusLowRank { .. })
    }

    /// The same covariance with zero mean.
    pub fn centered(&self) -> GaussianPrior {
        GaussianPrior {
            mean: None,
            ..self.clone()
        }
    }

    /// `Σ_β v` (or `Σ_β⁻¹ v` when `inverse`).
    pub fn matvec(&self, v: &Vector, inverse: bool) -> Result<Vector> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector has length {}, prior dimension is {}",
                v.len(),
                self.dim
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("prior matvec input"));
        }
        let m = Matrix::from_column_slice(v.len(), 1, v.as_slice());
        let out = if inverse {
            self.apply_inv(&m)
        } else {
            self.apply(&m)
        };
        Ok(out.column(0).into_owned())
    }

    /// `Σ_β B` for a `D × k` block.
    pub fn apply(&self, b: &Matrix) -> Matrix {
        match &self.cov {
            PriorCovariance::Isotropic(s) => b * *s,
            PriorCovariance::Diagonal(d) => scale_rows(b, d, false),
            PriorCovariance::DiagonalPlusLowRank { diag, factor } => {
                scale_rows(b, diag, false) + factor * factor.tr_mul(b)
            }
        }
    }

    /// `Σ_β⁻¹ B` for a `D × k` block.
    pub fn apply_inv(&self, b: &Matrix) -> Matrix {
        match &self.cov {
            PriorCovariance::Isotropic(s) => b / *s,
            PriorCovariance::Diagonal(d) => scale_rows(b, d, true),
            PriorCovariance::DiagonalPlusLowRank { diag, factor } => {
                let cap_inv = self.capacitance_inv.as_ref().expect("built with capacitance");
                let db = scale_rows(b, diag, true);
                let inner = cap_inv * factor.tr_mul(&db);
                db - scale_rows(&(factor * inner), diag, true)
            }
        }
    }

    /// `Σ_β[i, j]` in O(1) or O(k).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        match &self.cov {
            PriorCovariance::Isotropic(s) => {
                if i == j {
                    *s
                } else {
                    0.0
                }
            }
            PriorCovariance::Diagonal(d) => {
                if i == j {
                    d[i]
                } else {
                    0.0
                }
            }
            PriorCovariance::DiagonalPlusLowRank { diag, factor } => {
                let low = factor.row(i).dot(&factor.row(j));
                if i == j {
                    diag[i] + low
                } else {
                    low
                }
            }
        }
    }

    /// Diagonal of `Σ_β⁻¹`.
    pub fn precision_diagonal(&self) -> Vector {
        match &self.cov {
            PriorCovariance::Isotropic(s) => Vector::from_element(self.dim, 1.0 / s),
            PriorCovariance::Diagonal(d) => d.map(|v| 1.0 / v),
            PriorCovariance::DiagonalPlusLowRank { diag, factor } => {
                let cap_inv = self.capacitance_inv.as_ref().expect("built with capacitance");
                Vector::from_fn(self.dim, |i, _| {
                    let r = factor.row(i).transpose() / diag[i];
                    1.0 / diag[i] - r.dot(&(cap_inv * &r))
                })
            }
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// `‖Σ_β‖₂`.
    pub fn spectral_norm(&self) -> f64 {
        match &self.cov {
            PriorCovariance::Isotropic(s) => *s,
            PriorCovariance::Diagonal(d) => d.max(),
            PriorCovariance::DiagonalPlusLowRank { .. } => sym_power_iteration(self.dim, |v| self.apply(v)),
        }
    }

    /// `‖Σ_β⁻¹‖₂`.
    pub fn inverse_spectral_norm(&self) -> f64 {
        match &self.cov {
            PriorCovariance::Isotropic(s) => 1.0 / s,
            PriorCovariance::Diagonal(d) => 1.0 / d.min(),
            PriorCovariance::DiagonalPlusLowRank { .. } => {
                sym_power_iteration(self.dim, |v| self.apply_inv(v))
            }
        }
    }

    /// Dense `Σ_β`; only for small oracle problems.
    pub fn dense_covariance(&self) -> Matrix {
        self.apply(&Matrix::identity(self.dim, self.dim))
    }

    pub fn dense_precision(&self) -> Matrix {
        self.apply_inv(&Matrix::identity(self.dim, self.dim))
    }

    /// `-½ (β - μ)ᵀ Σ_β⁻¹ (β - μ)` and its gradient.
    pub fn log_prior(&self, beta: &Vector) -> Result<(f64, Vector)> {
        let centered = match &self.mean {
            Some(m) => beta - m,
            None => beta.clone(),
        };
        let grad = -self.matvec(&centered, true)?;
        let value = 0.5 * centered.dot(&grad);
        Ok((value, grad))
    }
}

fn check_positive_diag(d: &Vector) -> Result<()> {
    if d.iter().all(|&v| v.is_finite() && v > 0.0) {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite(
            "prior covariance diagonal entries must be > 0".into(),
        ))
    }
}

fn scale_rows(b: &Matrix, d: &Vector, inverse: bool) -> Matrix {
    Matrix::from_fn(b.nrows(), b.ncols(), |i, j| {
        if inverse {
            b[(i, j)] / d[i]
        } else {
            b[(i, j)] * d[i]
        }
    })
}

/// Largest eigenvalue of a symmetric PSD operator given by block products.
fn sym_power_iteration<F: Fn(&Matrix) -> Matrix>(dim: usize, op: F) -> f64 {
    let mut v = Matrix::from_fn(dim, 1, |i, _| 1.0 + 0.01 * (i as f64).sin());
    v /= v.norm();
    let mut est = 0.0;
    for _ in 0..10_000 {
        let w = op(&v);
        let next = v.dot(&w);
        let nrm = w.norm();
        if nrm == 0.0 {
            return 0.0;
        }
        v = w / nrm;
        if (next - est).abs() <= 1e-15 * next.abs() {
            est = next;
            break;
        }
        est = next;
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Five-point central difference of the `order-1` derivative.
    fn fd(family: &Family, y: f64, a: f64, order: u8) -> f64 {
        let h = 1e-3 * (1.0 + a.abs());
        let f = |t: f64| family.derivative(y, t, order - 1);
        (-f(a + 2.0 * h) + 8.0 * f(a + h) - 8.0 * f(a - h) + f(a - 2.0 * h)) / (12.0 * h)
    }

    fn draw_y(family: &Family, rng: &mut ChaCha8Rng) -> f64 {
        match family {
            Family::Gaussian { .. } => rng.random_range(-5.0..5.0),
            Family::Logistic => {
                if rng.random_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            }
            Family::PoissonSoftplus => rng.random_range(0..20) as f64,
        }
    }

    #[test]
    fn derivative_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for family in [
            Family::Gaussian { tau: 2.0 },
            Family::Logistic,
            Family::PoissonSoftplus,
        ] {
            for _ in 0..100 {
                let y = draw_y(&family, &mut rng);
                let a: f64 = rng.random_range(-10.0..10.0);
                for order in 1..=3u8 {
                    let analytic = family.derivative(y, a, order);
                    let numeric = fd(&family, y, a, order);
                    let rel = (analytic - numeric).abs() / analytic.abs().max(1e-3);
                    assert!(
                        rel <= 1e-5,
                        "{family:?} y={y} a={a} order={order}: {analytic} vs {numeric}"
                    );
                }
            }
        }
    }

    #[test]
    fn logistic_values() {
        let f = Family::Logistic;
        assert_abs_diff_eq!(f.phi(1.0, 0.0), -std::f64::consts::LN_2, epsilon = 1e-15);
        assert_abs_diff_eq!(f.derivative(1.0, 0.0, 2), -0.25, epsilon = 1e-15);
        assert_eq!(f.derivative(-1.0, 0.0, 3), 0.0);
        assert_eq!(f.derivative(1.0, 0.0, 3), 0.0);
        // stable far from zero
        assert!(f.phi(1.0, -800.0).is_finite());
        assert_abs_diff_eq!(f.phi(1.0, 800.0), 0.0, epsilon = 1e-300);
    }

    #[test]
    fn logistic_jerk_bound_is_tight() {
        let f = Family::Logistic;
        let max = (0..=200_000)
            .map(|i| -20.0 + 40.0 * i as f64 / 200_000.0)
            .map(|a| f.derivative(1.0, a, 3).abs())
            .fold(0.0, f64::max);
        assert!(max <= LOGISTIC_D3_SUP + 1e-9);
        assert!(max >= 0.95 * LOGISTIC_D3_SUP);
        assert_abs_diff_eq!(LOGISTIC_D3_SUP, 1.0 / (6.0 * 3f64.sqrt()), epsilon = 1e-16);
    }

    #[test]
    fn gaussian_values() {
        let f = Family::Gaussian { tau: 2.0 };
        assert_abs_diff_eq!(f.derivative(3.0, 1.0, 1), 4.0, epsilon = 1e-15);
        for a in [-3.0, 0.0, 7.5] {
            assert_eq!(f.derivative(0.3, a, 2), -2.0);
        }
    }

    #[test]
    fn poisson_sup_bounds_hold() {
        let f = Family::PoissonSoftplus;
        for y in [0.0, 1.0, 4.0, 25.0] {
            let b = f.sup_bounds(y);
            for i in 0..=8000 {
                let a = -40.0 + 80.0 * i as f64 / 8000.0;
                assert!(f.derivative(y, a, 1).abs() <= b.d1.unwrap() + 1e-12);
                let d2 = f.derivative(y, a, 2);
                assert!(d2 <= 1e-15 && d2.abs() <= b.d2);
                assert!(f.derivative(y, a, 3).abs() <= b.d3);
            }
        }
    }

    #[test]
    fn response_domain_checked() {
        let y = Vector::from_vec(vec![0.0, 1.0]);
        let a = Vector::zeros(2);
        assert!(matches!(
            Family::Logistic.phi_vec(&y, &a, 0),
            Err(Error::InvalidResponse { .. })
        ));
        let y = Vector::from_vec(vec![1.5]);
        assert!(Family::PoissonSoftplus.phi_vec(&y, &Vector::zeros(1), 1).is_err());
        assert!(Family::Logistic
            .phi_vec(&Vector::from_vec(vec![1.0]), &Vector::zeros(2), 0)
            .is_err());
    }

    #[test]
    fn logistic_interval_sup() {
        let f = Family::Logistic;
        assert_eq!(f.d2_sup_on_interval(-1.0, 2.0, 1.0), 0.25);
        assert!(f.d2_sup_on_interval(1.0, 2.0, 1.0) < 0.25);
        assert_abs_diff_eq!(
            f.d2_sup_on_interval(-3.0, -1.0, 1.0),
            f.derivative(1.0, -1.0, 2).abs(),
            epsilon = 1e-16
        );
    }

    #[test]
    fn prior_matvec_examples() {
        let p = GaussianPrior::isotropic(2, 4.0).unwrap();
        let v = Vector::from_vec(vec![1.0, 2.0]);
        assert_eq!(p.matvec(&v, false).unwrap().as_slice(), &[4.0, 8.0]);

        let p = GaussianPrior::diagonal(Vector::from_vec(vec![1.0, 2.0, 5.0])).unwrap();
        let out = p.matvec(&Vector::from_element(3, 1.0), true).unwrap();
        assert_abs_diff_eq!(out, Vector::from_vec(vec![1.0, 0.5, 0.2]), epsilon = 1e-15);

        let p = GaussianPrior::diagonal_plus_low_rank(
            Vector::from_element(2, 1.0),
            Matrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let out = p.matvec(&Vector::from_vec(vec![1.0, 0.0]), true).unwrap();
        assert_abs_diff_eq!(
            out,
            Vector::from_vec(vec![2.0 / 3.0, -1.0 / 3.0]),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(p.spectral_norm(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.inverse_spectral_norm(), 1.0, epsilon = 1e-12);
        assert_eq!(p.entry(0, 1), 1.0);
    }

    #[test]
    fn singular_prior_rejected() {
        assert!(matches!(
            GaussianPrior::diagonal(Vector::from_vec(vec![1.0, 0.0])),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(GaussianPrior::isotropic(3, -1.0).is_err());
    }

    #[test]
    fn log_prior_examples() {
        let p = GaussianPrior::isotropic(2, 1.0).unwrap();
        let (v, g) = p.log_prior(&Vector::zeros(2)).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(g.norm(), 0.0);
        let (v, g) = p.log_prior(&Vector::from_vec(vec![3.0, 4.0])).unwrap();
        assert_abs_diff_eq!(v, -12.5, epsilon = 1e-14);
        assert_abs_diff_eq!(g, Vector::from_vec(vec![-3.0, -4.0]), epsilon = 1e-14);

        let p = GaussianPrior::diagonal(Vector::from_vec(vec![2.0, 8.0])).unwrap();
        let (v, g) = p.log_prior(&Vector::from_vec(vec![2.0, 4.0])).unwrap();
        assert_abs_diff_eq!(v, -2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(g, Vector::from_vec(vec![-1.0, -0.5]), epsilon = 1e-14);
    }

    #[test]
    fn woodbury_inverse_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let diag = Vector::from_fn(6, |_, _| rng.random_range(0.5..2.0));
        let factor = Matrix::from_fn(6, 2, |_, _| rng.random_range(-1.0..1.0));
        let p = GaussianPrior::diagonal_plus_low_rank(diag, factor).unwrap();
        let dense_inv = p.dense_covariance().try_inverse().unwrap();
        assert!(crate::linalg::max_abs(&(&dense_inv - p.dense_precision())) < 1e-12);
        assert!((dense_inv.diagonal() - p.precision_diagonal()).amax() < 1e-12);
    }
}
