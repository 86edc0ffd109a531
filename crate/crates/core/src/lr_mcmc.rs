//! Metropolis–Hastings sampling from the LR-GLM posterior.
//!
//! The log posterior is evaluated through `(XU)(Uᵀβ)`, so after the one-off
//! `XU` product an iteration costs O(NM + DM) regardless of how `X` was
//! stored.

use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{
    ensure_finite_matrix, ensure_finite_vector, truncated_svd, Matrix, SvdMethod, TruncatedSvd, Vector,
};
use crate::lr_laplace::LogPrior;
use crate::models::{Family, GaussianPrior, PriorCovariance};

/// Acceptance rate targeted while adapting the random-walk step.
pub const TARGET_ACCEPTANCE: f64 = 0.234;
const MIN_SUMMARY_LEN: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Proposal {
    /// `β' = β + s ξ`, `ξ ~ N(0, I)`. With `adapt`, `s` is tuned during
    /// burn-in toward [`TARGET_ACCEPTANCE`] and frozen afterwards.
    RandomWalk { step_scale: f64, adapt: bool },
    /// Preconditioned Crank–Nicolson,
    /// `β' = μ_β + √(1 − ρ²)(β − μ_β) + ρ ξ`, `ξ ~ N(0, Σ_β)`.
    /// Requires a Gaussian prior.
    Pcn { rho: f64 },
}

impl Proposal {
    /// Adaptive random walk starting from `2.38 / √D`.
    pub fn default_for(dim: usize) -> Self {
        Proposal::RandomWalk {
            step_scale: 2.38 / (dim.max(1) as f64).sqrt(),
            adapt: true,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Proposal::RandomWalk { step_scale, .. } if !(step_scale > 0.0 && step_scale.is_finite()) => Err(
                Error::InvalidArgument(format!("step_scale must be > 0, got {step_scale}")),
            ),
            Proposal::Pcn { rho } if !(rho > 0.0 && rho < 1.0) => Err(Error::InvalidArgument(format!(
                "rho must lie in (0, 1), got {rho}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McmcConfig {
    pub proposal: Proposal,
    /// Total iterations, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th post-burn-in state.
    pub thin: usize,
    pub seed: u64,
    /// Starting point; the prior mode when `None`.
    pub init: Option<Vector>,
}

impl McmcConfig {
    pub fn new(proposal: Proposal, iterations: usize, burn_in: usize, seed: u64) -> Self {
        McmcConfig {
            proposal,
            iterations,
            burn_in,
            thin: 1,
            seed,
            init: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Chain {
    /// One row per retained state.
    pub samples: Matrix,
    pub log_posts: Vector,
    /// Accepted moves over post-burn-in iterations.
    pub acceptance_rate: f64,
    pub accepted: usize,
    pub post_burn_in: usize,
    /// Step scale in effect after burn-in (random walk only).
    pub step_scale: Option<f64>,
    pub seed: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.samples.ncols()
    }

    /// Writes one row per retained sample: `beta_0, …, beta_{D-1}, log_post`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("beta_{j}")).collect();
        header.push("log_post".into());
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row: Vec<String> = self.samples.row(t).iter().map(|v| format!("{v:.17e}")).collect();
            row.push(format!("{:.17e}", self.log_posts[t]));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Per-coordinate posterior summaries from a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSummary {
    pub mean: Vector,
    pub variance: Vector,
    /// Batch-means effective sample size, in `(0, T]`.
    pub ess: Vector,
}

impl ChainSummary {
    /// Monte-Carlo standard error of each coordinate mean.
    pub fn mcse(&self) -> Vector {
        self.variance.zip_map(&self.ess, |v, e| (v / e).sqrt())
    }
}

/// Unnormalized LR-GLM log posterior `Σ φ(yₙ, (XU)ₙ Uᵀβ) + log p(β)` and
/// its gradient.
pub fn lr_log_posterior<P: LogPrior + ?Sized>(
    beta: &Vector,
    xu: &Matrix,
    u: &Matrix,
    y: &Vector,
    family: Family,
    prior: &P,
) -> Result<(f64, Vector)> {
    let (value, d1, lp, lp_grad) = log_posterior_parts(beta, xu, u, y, family, prior)?;
    Ok((value + lp, u * xu.tr_mul(&d1) + lp_grad))
}

fn log_posterior_parts<P: LogPrior + ?Sized>(
    beta: &Vector,
    xu: &Matrix,
    u: &Matrix,
    y: &Vector,
    family: Family,
    prior: &P,
) -> Result<(f64, Vector, f64, Vector)> {
    if beta.len() != u.nrows() || xu.ncols() != u.ncols() || xu.nrows() != y.len() {
        return Err(Error::DimensionMismatch("β, XU, U and Y shapes disagree".into()));
    }
    let a = xu * u.tr_mul(beta);
    let loglik = family.log_likelihood(y, &a);
    let d1 = family.derivative_vec(y, &a, 1);
    let (lp, lp_grad) = prior.log_density(beta)?;
    Ok((loglik, d1, lp, lp_grad))
}

fn log_likelihood(beta: &Vector, xu: &Matrix, u: &Matrix, y: &Vector, family: Family) -> f64 {
    family.log_likelihood(y, &(xu * u.tr_mul(beta)))
}

/// Draws `ξ ~ N(0, Σ_β)`.
fn sample_prior_centered(prior: &GaussianPrior, rng: &mut ChaCha8Rng) -> Vector {
    let d = prior.dim();
    let z = Vector::from_fn(d, |_, _| rng.sample(StandardNormal));
    match prior.covariance() {
        PriorCovariance::Isotropic(s) => z * s.sqrt(),
        PriorCovariance::Diagonal(diag) => z.zip_map(diag, |zi, di| zi * di.sqrt()),
        PriorCovariance::DiagonalPlusLowRank { diag, factor } => {
            let w = Vector::from_fn(factor.ncols(), |_, _| rng.sample(StandardNormal));
            z.zip_map(diag, |zi, di| zi * di.sqrt()) + factor * w
        }
    }
}

/// Runs Metropolis–Hastings on the rank-`m` LR-GLM posterior.
pub fn run_mh<P: LogPrior + ?Sized>(
    x: &Matrix,
    y: &Vector,
    family: Family,
    prior: &P,
    m: usize,
    svd_method: SvdMethod,
    config: &McmcConfig,
) -> Result<Chain> {
    ensure_finite_matrix(x, "design matrix")?;
    let svd = truncated_svd(x, m, svd_method)?;
    run_mh_svd(x, &svd, y, family, prior, config)
}

/// [`run_mh`] with a precomputed truncated SVD of `x`.
pub fn run_mh_svd<P: LogPrior + ?Sized>(
    x: &Matrix,
    svd: &TruncatedSvd,
    y: &Vector,
    family: Family,
    prior: &P,
    config: &McmcConfig,
) -> Result<Chain> {
    if x.nrows() != y.len() || x.ncols() != prior.dim() || svd.dim() != x.ncols() {
        return Err(Error::DimensionMismatch(
            "X, Y, SVD and prior shapes disagree".into(),
        ));
    }
    let xu = x * &svd.u;
    run_mh_projected(&xu, &svd.u, y, family, prior, config)
}

/// Sampler core, given `XU` and `U` only.
pub fn run_mh_projected<P: LogPrior + ?Sized>(
    xu: &Matrix,
    u: &Matrix,
    y: &Vector,
    family: Family,
    prior: &P,
    config: &McmcConfig,
) -> Result<Chain> {
    family.validate()?;
    ensure_finite_vector(y, "responses")?;
    family.check_responses(y)?;
    config.proposal.validate()?;
    if config.iterations <= config.burn_in {
        return Err(Error::InvalidArgument(format!(
            "iterations ({}) must exceed burn_in ({})",
            config.iterations, config.burn_in
        )));
    }
    if config.thin == 0 {
        return Err(Error::InvalidArgument("thin must be >= 1".into()));
    }
    let d = u.nrows();
    let gaussian = match config.proposal {
        Proposal::Pcn { .. } => Some(
            prior
                .as_gaussian()
                .ok_or_else(|| Error::Unsupported("the pCN kernel requires a Gaussian prior".into()))?,
        ),
        Proposal::RandomWalk { .. } => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut beta = match &config.init {
        Some(b) if b.len() != d => {
            return Err(Error::DimensionMismatch(format!(
                "init has length {}, expected {d}",
                b.len()
            )))
        }
        Some(b) => b.clone(),
        None => prior.mode(),
    };
    let (mut loglik, _, mut logprior, _) = log_posterior_parts(&beta, xu, u, y, family, prior)?;
    if !(loglik + logprior).is_finite() {
        return Err(Error::NonFinite("log posterior at the initial state"));
    }

    let post = config.iterations - config.burn_in;
    let kept = post.div_ceil(config.thin);
    let mut samples = Matrix::zeros(kept, d);
    let mut log_posts = Vector::zeros(kept);
    let mut accepted = 0;
    let mut log_step = match config.proposal {
        Proposal::RandomWalk { step_scale, .. } => step_scale.ln(),
        Proposal::Pcn { .. } => 0.0,
    };
    let mut row = 0;

    for t in 0..config.iterations {
        let (proposal, log_ratio) = match (config.proposal, gaussian) {
            (Proposal::Pcn { rho }, Some(g)) => {
                let mu = g.mean();
                let xi = sample_prior_centered(g, &mut rng);
                let prop = &mu + (&beta - &mu) * (1.0 - rho * rho).sqrt() + xi * rho;
                let ll = log_likelihood(&prop, xu, u, y, family);
                // the kernel is prior-reversible: only the likelihood enters
                (Some((prop, ll, None)), ll - loglik)
            }
            _ => {
                let step = log_step.exp();
                let prop = Vector::from_fn(d, |i, _| beta[i] + step * rng.sample::<f64, _>(StandardNormal));
                let ll = log_likelihood(&prop, xu, u, y, family);
                let lp = prior.log_density(&prop)?.0;
                (Some((prop, ll, Some(lp))), ll + lp - loglik - logprior)
            }
        };
        let accept = log_ratio.is_finite() && rng.random::<f64>().ln() < log_ratio;
        if accept {
            let (prop, ll, lp) = proposal.expect("proposal drawn");
            logprior = match lp {
                Some(v) => v,
                None => prior.log_density(&prop)?.0,
            };
            beta = prop;
            loglik = ll;
        }

        if t < config.burn_in {
            if let Proposal::RandomWalk { adapt: true, .. } = config.proposal {
                let gain = 1.0 / ((t + 1) as f64).powf(0.6);
                let hit = if accept { 1.0 } else { 0.0 };
                log_step += gain * (hit - TARGET_ACCEPTANCE);
            }
            continue;
        }
        if accept {
            accepted += 1;
        }
        let i = t - config.burn_in;
        if i.is_multiple_of(config.thin) {
            samples.row_mut(row).tr_copy_from(&beta);
            log_posts[row] = loglik + logprior;
            row += 1;
        }
    }

    Ok(Chain {
        samples,
        log_posts,
        acceptance_rate: accepted as f64 / post as f64,
        accepted,
        post_burn_in: post,
        step_scale: matches!(config.proposal, Proposal::RandomWalk { .. }).then(|| log_step.exp()),
        seed: config.seed,
    })
}

/// Means, variances and batch-means effective sample sizes using `⌊√T⌋`
/// batches of equal length (any remainder is dropped from the ESS estimate).
pub fn chain_summary(chain: &Chain) -> Result<ChainSummary> {
    summarize(&chain.samples)
}

/// [`chain_summary`] for a raw `T × D` sample matrix.
pub fn summarize(samples: &Matrix) -> Result<ChainSummary> {
    let t = samples.nrows();
    if t < MIN_SUMMARY_LEN {
        return Err(Error::InvalidArgument(format!(
            "chain has {t} samples; at least {MIN_SUMMARY_LEN} are needed"
        )));
    }
    let d = samples.ncols();
    let batches = (t as f64).sqrt().floor() as usize;
    let size = t / batches;
    let mut mean = Vector::zeros(d);
    let mut variance = Vector::zeros(d);
    let mut ess = Vector::zeros(d);
    for j in 0..d {
        let col = samples.column(j);
        let m = col.mean();
        let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (t - 1) as f64;
        mean[j] = m;
        variance[j] = var;
        let used = batches * size;
        let grand = col.rows(0, used).mean();
        let bm_var = (0..batches)
            .map(|b| {
                let bm = col.rows(b * size, size).mean();
                (bm - grand) * (bm - grand)
            })
            .sum::<f64>()
            * size as f64
            / (batches - 1) as f64;
        ess[j] = if var > 0.0 && bm_var > 0.0 {
            (t as f64 * var / bm_var).min(t as f64)
        } else {
            t as f64
        };
    }
    Ok(ChainSummary { mean, variance, ess })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjugate::lr_posterior;
    use crate::linalg::gaussian_matrix;
    use crate::lr_laplace::StudentTPrior;
    use crate::optim::{check_gradient, FnObjective};
    use approx::assert_abs_diff_eq;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn zero_beta_gives_likelihood_at_zero() {
        let mut r = rng(1);
        let x = gaussian_matrix(6, 4, &mut r);
        let svd = truncated_svd(&x, 2, SvdMethod::Deterministic).unwrap();
        let xu = &x * &svd.u;
        let y = Vector::from_vec(vec![1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        let prior = GaussianPrior::isotropic(4, 1.0).unwrap();
        let (v, _) = lr_log_posterior(&Vector::zeros(4), &xu, &svd.u, &y, Family::Logistic, &prior).unwrap();
        assert_abs_diff_eq!(v, 6.0 * -(2.0f64.ln()), epsilon = 1e-14);
    }

    #[test]
    fn gaussian_target_differences_match_conjugate() {
        let mut r = rng(2);
        let x = gaussian_matrix(15, 6, &mut r);
        let y = gaussian_matrix(15, 1, &mut r).column(0).into_owned();
        let svd = truncated_svd(&x, 3, SvdMethod::Deterministic).unwrap();
        let prior = GaussianPrior::isotropic(6, 2.0).unwrap();
        let tau = 0.7;
        let post = lr_posterior(&svd, &y, &prior, tau).unwrap().to_dense();
        let prec = post.covariance.clone().try_inverse().unwrap();
        let quad = |b: &Vector| {
            let e = b - &post.mean;
            -0.5 * e.dot(&(&prec * &e))
        };
        let xu = &x * &svd.u;
        let fam = Family::Gaussian { tau };
        let b1 = gaussian_matrix(6, 1, &mut r).column(0).into_owned();
        let b2 = gaussian_matrix(6, 1, &mut r).column(0).into_owned();
        let l1 = lr_log_posterior(&b1, &xu, &svd.u, &y, fam, &prior).unwrap().0;
        let l2 = lr_log_posterior(&b2, &xu, &svd.u, &y, fam, &prior).unwrap().0;
        assert!(((l1 - l2) - (quad(&b1) - quad(&b2))).abs() < 1e-10);
    }

    #[test]
    fn matches_dense_modified_design() {
        let mut r = rng(3);
        let x = gaussian_matrix(10, 5, &mut r);
        let svd = truncated_svd(&x, 2, SvdMethod::Deterministic).unwrap();
        let xp = &x * &svd.u * svd.u.transpose();
        let y = Vector::from_fn(10, |i, _| if i % 3 == 0 { 1.0 } else { -1.0 });
        let prior = GaussianPrior::isotropic(5, 1.5).unwrap();
        let beta = gaussian_matrix(5, 1, &mut r).column(0).into_owned();
        let (v, _) = lr_log_posterior(&beta, &(&x * &svd.u), &svd.u, &y, Family::Logistic, &prior).unwrap();
        let dense = Family::Logistic.log_likelihood(&y, &(&xp * &beta)) + prior.log_prior(&beta).unwrap().0;
        assert!((v - dense).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut r = rng(4);
        let x = gaussian_matrix(12, 6, &mut r);
        let svd = truncated_svd(&x, 3, SvdMethod::Deterministic).unwrap();
        let xu = &x * &svd.u;
        let y = Vector::from_fn(12, |i, _| (i % 4) as f64);
        let prior = StudentTPrior::standard(6, 4.0).unwrap();
        let obj = FnObjective::new(6, |b: &Vector| {
            let (v, g) = lr_log_posterior(b, &xu, &svd.u, &y, Family::PoissonSoftplus, &prior).unwrap();
            (-v, -g)
        });
        for _ in 0..5 {
            let b = gaussian_matrix(6, 1, &mut r).column(0).into_owned() * 0.5;
            assert!(check_gradient(&obj, &b).unwrap() <= 1e-5);
        }
    }

    #[test]
    fn iid_pseudo_chain_has_full_ess() {
        let samples = gaussian_matrix(10_000, 2, &mut rng(5));
        let s = summarize(&samples).unwrap();
        for j in 0..2 {
            let ratio = s.ess[j] / 10_000.0;
            assert!((0.5..=1.5).contains(&ratio), "ratio {ratio}");
        }
    }

    #[test]
    fn ar1_chain_ess_matches_theory() {
        let rho: f64 = 0.9;
        let t = 100_000;
        let mut r = rng(6);
        let mut v = 0.0;
        let samples = Matrix::from_fn(t, 1, |_, _| {
            v = rho * v + (1.0 - rho * rho).sqrt() * r.sample::<f64, _>(StandardNormal);
            v
        });
        let ratio = summarize(&samples).unwrap().ess[0] / t as f64;
        let theory = (1.0 - rho) / (1.0 + rho);
        assert!(ratio > theory / 2.0 && ratio < theory * 2.0, "ratio {ratio}");
    }

    #[test]
    fn constant_chain_has_zero_variance() {
        let s = summarize(&Matrix::from_element(200, 3, 1.25)).unwrap();
        assert_eq!(s.variance, Vector::zeros(3));
        assert_eq!(s.mean, Vector::from_element(3, 1.25));
        assert!(s.ess.iter().all(|&e| e > 0.0 && e <= 200.0));
    }

    #[test]
    fn short_chain_rejected() {
        assert!(summarize(&Matrix::zeros(99, 1)).is_err());
    }

    fn one_dim_target() -> (Matrix, Vector, GaussianPrior, Family) {
        // prior N(0, 1), one observation y = 2 at x = 1 with τ = 4: posterior N(8/5, 1/5)
        (
            Matrix::from_element(1, 1, 1.0),
            Vector::from_element(1, 2.0),
            GaussianPrior::isotropic(1, 1.0).unwrap(),
            Family::Gaussian { tau: 4.0 },
        )
    }

    #[test]
    fn ks_distance_on_one_dim_target() {
        let (x, y, prior, fam) = one_dim_target();
        let post_var = 1.0 / (1.0 + 4.0);
        let post_mean = post_var * 4.0 * 2.0;
        let cfg = McmcConfig::new(Proposal::default_for(1), 110_000, 10_000, 7);
        let chain = run_mh(&x, &y, fam, &prior, 1, SvdMethod::Deterministic, &cfg).unwrap();
        let mut draws: Vec<f64> = chain.samples.column(0).iter().copied().collect();
        draws.sort_by(f64::total_cmp);
        let n = draws.len() as f64;
        let target = Normal::new(post_mean, post_var.sqrt()).unwrap();
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = target.cdf(v);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(ks <= 0.02, "KS distance {ks}");
        assert!((chain.acceptance_rate - TARGET_ACCEPTANCE).abs() < 0.1);
    }

    #[test]
    fn vanishing_steps_are_always_accepted() {
        let (x, y, prior, fam) = one_dim_target();
        let cfg = McmcConfig::new(
            Proposal::RandomWalk {
                step_scale: 1e-6,
                adapt: false,
            },
            2000,
            0,
            8,
        );
        let chain = run_mh(&x, &y, fam, &prior, 1, SvdMethod::Deterministic, &cfg).unwrap();
        assert!(chain.acceptance_rate >= 0.99);
        assert_eq!(chain.acceptance_rate, chain.accepted as f64 / 2000.0);
    }

    #[test]
    fn symmetric_logistic_mean_is_zero() {
        // each covariate row appears with both labels, so the posterior is even in β
        let x = Matrix::from_row_slice(4, 2, &[1.0, 0.5, 1.0, 0.5, -0.5, 1.0, -0.5, 1.0]);
        let y = Vector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        let prior = GaussianPrior::isotropic(2, 1.0).unwrap();
        let cfg = McmcConfig::new(Proposal::default_for(2), 60_000, 5_000, 9);
        let chain = run_mh(
            &x,
            &y,
            Family::Logistic,
            &prior,
            2,
            SvdMethod::Deterministic,
            &cfg,
        )
        .unwrap();
        let s = chain_summary(&chain).unwrap();
        let se = s.mcse();
        for j in 0..2 {
            assert!(
                s.mean[j].abs() < 4.0 * se[j],
                "coord {j}: {} vs {}",
                s.mean[j],
                se[j]
            );
        }
    }

    #[test]
    fn pcn_samples_prior_without_data() {
        let x = Matrix::zeros(2, 3);
        let y = Vector::zeros(2);
        let prior = GaussianPrior::diagonal(Vector::from_vec(vec![1.0, 4.0, 0.25]))
            .unwrap()
            .with_mean(Vector::from_vec(vec![1.0, 0.0, -1.0]))
            .unwrap();
        let cfg = McmcConfig::new(Proposal::Pcn { rho: 0.5 }, 40_000, 1_000, 10);
        let chain = run_mh(
            &x,
            &y,
            Family::Gaussian { tau: 1.0 },
            &prior,
            1,
            SvdMethod::Deterministic,
            &cfg,
        )
        .unwrap();
        assert_eq!(chain.acceptance_rate, 1.0);
        let s = chain_summary(&chain).unwrap();
        for (j, (&m, &v)) in [1.0, 0.0, -1.0].iter().zip([1.0, 4.0, 0.25].iter()).enumerate() {
            assert!((s.mean[j] - m).abs() < 4.0 * s.mcse()[j]);
            assert!((s.variance[j] / v - 1.0).abs() < 0.1);
        }
    }

    #[test]
    fn pcn_needs_gaussian_prior() {
        let x = Matrix::identity(2, 2);
        let y = Vector::zeros(2);
        let prior = StudentTPrior::standard(2, 3.0).unwrap();
        let cfg = McmcConfig::new(Proposal::Pcn { rho: 0.5 }, 10, 0, 0);
        assert!(matches!(
            run_mh(
                &x,
                &y,
                Family::Gaussian { tau: 1.0 },
                &prior,
                1,
                SvdMethod::Deterministic,
                &cfg
            ),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn seeded_runs_repeat_and_thin() {
        let (x, y, prior, fam) = one_dim_target();
        let mut cfg = McmcConfig::new(Proposal::default_for(1), 1_000, 100, 11);
        cfg.thin = 4;
        let a = run_mh(&x, &y, fam, &prior, 1, SvdMethod::Deterministic, &cfg).unwrap();
        let b = run_mh(&x, &y, fam, &prior, 1, SvdMethod::Deterministic, &cfg).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.len(), 225);
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 226);
        assert!(text.starts_with("beta_0,log_post\n"));
    }

    #[test]
    fn burn_in_must_leave_iterations() {
        let (x, y, prior, fam) = one_dim_target();
        let cfg = McmcConfig::new(Proposal::default_for(1), 100, 100, 0);
        assert!(run_mh(&x, &y, fam, &prior, 1, SvdMethod::Deterministic, &cfg).is_err());
    }
}
