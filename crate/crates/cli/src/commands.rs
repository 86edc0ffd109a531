use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use lrglm::bounds::{w2_bound, BoundReport};
use lrglm::conjugate::{exact_posterior_dense, exact_posterior_woodbury, lr_posterior, DENSE_ORACLE_LIMIT};
use lrglm::data::{load_csv, load_table, save_csv, save_matrix_bin, synth_dataset, Dataset};
use lrglm::linalg::{truncated_svd, SvdMethod, TruncatedSvd, Vector};
use lrglm::lr_laplace::{
    exact_laplace_dense, lr_laplace_fit_svd, predict_proba, probit_probability, LaplaceDense, LaplaceOptions,
};
use lrglm::lr_mcmc::{chain_summary, run_mh_svd, McmcConfig, Proposal};
use lrglm::models::{sigmoid, Family, GaussianPrior};
use lrglm::{Error, Result};
use serde::Serialize;

use crate::output::{emit_json, fmt_f64, sink};
use crate::{
    BenchmarkArgs, BoundsArgs, FamilyArg, FitArgs, KernelArg, MethodArg, ModelArgs, PredictArgs, SampleArgs,
    SimulateArgs, SvdArg,
};

fn family(arg: FamilyArg, tau: f64) -> Family {
    match arg {
        FamilyArg::Gaussian => Family::Gaussian { tau },
        FamilyArg::Logistic => Family::Logistic,
        FamilyArg::Poisson => Family::PoissonSoftplus,
    }
}

struct Problem {
    data: Dataset,
    family: Family,
    prior: GaussianPrior,
    svd_method: SvdMethod,
    opts: LaplaceOptions,
}

impl Problem {
    fn load(args: &ModelArgs) -> Result<Self> {
        let family = family(args.family, args.tau);
        family.validate()?;
        if args.rank == 0 {
            return Err(Error::InvalidArgument("--rank must be >= 1".into()));
        }
        if args.tol.is_nan() || args.tol <= 0.0 || args.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "--tol and --max-iter must be positive".into(),
            ));
        }
        let data = load_csv(&args.input, &args.response_col, family)?;
        let prior = match &args.prior_diag {
            Some(path) => GaussianPrior::diagonal(read_column(path)?)?,
            None => GaussianPrior::isotropic(data.dim(), args.prior_var)?,
        };
        if prior.dim() != data.dim() {
            return Err(Error::DimensionMismatch(format!(
                "prior has {} variances but the data has {} covariates",
                prior.dim(),
                data.dim()
            )));
        }
        let svd_method = match args.svd {
            SvdArg::Exact => SvdMethod::Deterministic,
            SvdArg::Randomized => SvdMethod::Randomized {
                oversample: args.oversample,
                power_iters: args.power_iters,
                seed: args.seed,
            },
        };
        Ok(Problem {
            data,
            family,
            prior,
            svd_method,
            opts: LaplaceOptions {
                tol: args.tol,
                max_iter: args.max_iter,
            },
        })
    }

    fn svd(&self, rank: usize) -> Result<(TruncatedSvd, Duration)> {
        let start = Instant::now();
        let svd = truncated_svd(&self.data.x, rank, self.svd_method)?;
        Ok((svd, start.elapsed()))
    }

    /// Full-rank reference: conjugate for gaussian, Laplace otherwise.
    fn dense(&self) -> Result<LaplaceDense> {
        let (x, y) = (&self.data.x, &self.data.y);
        match self.family {
            Family::Gaussian { tau } => {
                let post = if x.nrows() < x.ncols() {
                    exact_posterior_woodbury(x, y, &self.prior, tau)?
                } else {
                    exact_posterior_dense(x, y, &self.prior, tau)?
                };
                Ok(LaplaceDense {
                    mean: post.mean,
                    covariance: post.covariance,
                })
            }
            _ => exact_laplace_dense(x, y, self.family, &self.prior, self.opts),
        }
    }

    fn dense_available(&self) -> bool {
        self.data.dim() <= DENSE_ORACLE_LIMIT
    }
}

fn read_column(path: &Path) -> Result<Vector> {
    let text = std::fs::read_to_string(path)?;
    let values = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .map_err(|_| Error::Parse(format!("invalid prior variance '{l}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Vector::from_vec(values))
}

fn to_vec(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

#[derive(Serialize)]
struct Timings {
    svd: f64,
    map: f64,
    cov: f64,
}

impl Timings {
    fn new(svd: Duration, map: Duration, cov: Duration) -> Self {
        Timings {
            svd: svd.as_secs_f64(),
            map: map.as_secs_f64(),
            cov: cov.as_secs_f64(),
        }
    }
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    command: &'static str,
    n: usize,
    d: usize,
    family: &'static str,
    tau: f64,
    seed: u64,
    rotate: bool,
    out: &'a Path,
    matrix_out: Option<&'a Path>,
    true_beta: Vec<f64>,
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let fam = family(args.family, args.tau);
    let ds = synth_dataset(args.n, args.d, fam, args.seed, !args.no_rotate)?;
    save_csv(&ds, &args.out)?;
    if let Some(path) = &args.matrix_out {
        save_matrix_bin(&ds.x, path)?;
    }
    let summary = SimulateSummary {
        command: "simulate",
        n: args.n,
        d: args.d,
        family: fam.name(),
        tau: args.tau,
        seed: args.seed,
        rotate: !args.no_rotate,
        out: &args.out,
        matrix_out: args.matrix_out.as_deref(),
        true_beta: to_vec(ds.true_beta.as_ref().expect("synthetic data has β*")),
    };
    Ok(emit_json(&summary, None)?)
}

#[derive(Serialize)]
struct CovEntry {
    i: usize,
    j: usize,
    value: f64,
}

#[derive(Serialize)]
struct FitSummary<'a> {
    command: &'static str,
    method: MethodArg,
    config: &'a ModelArgs,
    n_obs: usize,
    dim: usize,
    lambda: Option<Vec<f64>>,
    lambda_bar1: Option<f64>,
    mean: Vec<f64>,
    gamma_star: Option<Vec<f64>>,
    variances: Option<Vec<f64>>,
    covariances: Vec<CovEntry>,
    map_grad_norm: Option<f64>,
    timings: Timings,
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let p = Problem::load(&args.model)?;
    let d = p.data.dim();
    if let Some(&(i, j)) = args.cov.iter().find(|&&(i, j)| i >= d || j >= d) {
        return Err(Error::InvalidArgument(format!(
            "covariance index ({i},{j}) out of range for D = {d}"
        )));
    }
    let (x, y) = (&p.data.x, &p.data.y);
    let mut summary = FitSummary {
        command: "fit",
        method: args.method,
        config: &args.model,
        n_obs: p.data.n_obs(),
        dim: d,
        lambda: None,
        lambda_bar1: None,
        mean: Vec::new(),
        gamma_star: None,
        variances: None,
        covariances: Vec::new(),
        map_grad_norm: None,
        timings: Timings::new(Duration::ZERO, Duration::ZERO, Duration::ZERO),
    };
    let query: Box<dyn Fn(usize, usize) -> f64>;

    match args.method {
        MethodArg::Exact => {
            let start = Instant::now();
            let dense = p.dense()?;
            summary.timings = Timings::new(Duration::ZERO, start.elapsed(), Duration::ZERO);
            summary.mean = to_vec(&dense.mean);
            query = Box::new(move |i, j| dense.covariance[(i, j)]);
        }
        MethodArg::Lr => {
            let (svd, svd_time) = p.svd(args.model.rank)?;
            summary.lambda = Some(to_vec(&svd.lambda));
            summary.lambda_bar1 = Some(svd.residual_spectral_norm);
            match p.family {
                Family::Gaussian { tau } => {
                    let start = Instant::now();
                    let post = lr_posterior(&svd, y, &p.prior, tau)?;
                    summary.timings = Timings::new(svd_time, Duration::ZERO, start.elapsed());
                    summary.gamma_star = Some(to_vec(&svd.u.tr_mul(&post.mean)));
                    summary.mean = to_vec(&post.mean);
                    query = Box::new(move |i, j| post.query(i, j));
                }
                _ => {
                    let fit = lr_laplace_fit_svd(x, &svd, y, p.family, &p.prior, p.opts)?;
                    summary.timings = Timings::new(svd_time, fit.timings.map, fit.timings.cov);
                    summary.gamma_star = Some(to_vec(&fit.gamma_star));
                    summary.mean = to_vec(&fit.mean);
                    summary.map_grad_norm = Some(fit.map_grad_norm);
                    query = Box::new(move |i, j| fit.query_cov(i, j));
                }
            }
        }
    }
    if args.variances {
        summary.variances = Some((0..d).map(|i| query(i, i)).collect());
    }
    summary.covariances = args
        .cov
        .iter()
        .map(|&(i, j)| CovEntry {
            i,
            j,
            value: query(i, j),
        })
        .collect();
    Ok(emit_json(&summary, args.model.out.as_deref())?)
}

#[derive(Serialize)]
struct SampleSummary<'a> {
    command: &'static str,
    config: &'a ModelArgs,
    mcmc_iters: usize,
    burn_in: usize,
    thin: usize,
    kernel: KernelArg,
    retained: usize,
    acceptance_rate: f64,
    step_scale: Option<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
    ess: Vec<f64>,
}

pub fn sample(args: &SampleArgs) -> Result<()> {
    let p = Problem::load(&args.model)?;
    let proposal = match (args.kernel, args.step_scale) {
        (KernelArg::Pcn, _) => Proposal::Pcn { rho: args.rho },
        (KernelArg::RandomWalk, Some(step_scale)) => Proposal::RandomWalk {
            step_scale,
            adapt: false,
        },
        (KernelArg::RandomWalk, None) => Proposal::default_for(p.data.dim()),
    };
    let mut config = McmcConfig::new(proposal, args.mcmc_iters, args.burn_in, args.model.seed);
    config.thin = args.thin;
    let (svd, _) = p.svd(args.model.rank)?;
    let chain = run_mh_svd(&p.data.x, &svd, &p.data.y, p.family, &p.prior, &config)?;
    if let Some(path) = &args.chain_out {
        chain.save_csv(path)?;
    }
    let stats = chain_summary(&chain)?;
    let summary = SampleSummary {
        command: "sample",
        config: &args.model,
        mcmc_iters: args.mcmc_iters,
        burn_in: args.burn_in,
        thin: args.thin,
        kernel: args.kernel,
        retained: chain.len(),
        acceptance_rate: chain.acceptance_rate,
        step_scale: chain.step_scale,
        mean: to_vec(&stats.mean),
        variance: to_vec(&stats.variance),
        ess: to_vec(&stats.ess),
    };
    Ok(emit_json(&summary, args.model.out.as_deref())?)
}

#[derive(Serialize)]
struct BoundsSummary<'a> {
    command: &'static str,
    config: &'a ModelArgs,
    report: BoundReport,
    /// `‖μ̂ − μ̄‖₂` against the full-rank fit, when it was computed.
    map_error: Option<f64>,
}

pub fn bounds(args: &BoundsArgs) -> Result<()> {
    let p = Problem::load(&args.model)?;
    let (svd, _) = p.svd(args.model.rank)?;
    let (x, y) = (&p.data.x, &p.data.y);
    let fit = lr_laplace_fit_svd(x, &svd, y, p.family, &p.prior, p.opts)?;
    let dense = if args.no_dense || !p.dense_available() {
        None
    } else {
        Some(p.dense()?)
    };
    let report = w2_bound(x, &svd, y, p.family, &p.prior, &fit, dense.as_ref())?;
    let summary = BoundsSummary {
        command: "bounds",
        config: &args.model,
        report,
        map_error: dense.as_ref().map(|d| (&fit.mean - &d.mean).norm()),
    };
    Ok(emit_json(&summary, args.model.out.as_deref())?)
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

pub fn benchmark(args: &BenchmarkArgs) -> Result<()> {
    let p = Problem::load(&args.model)?;
    if args.repeats == 0 {
        return Err(Error::InvalidArgument("--repeats must be >= 1".into()));
    }
    let mut ranks = args.ranks.clone();
    ranks.push(args.model.rank);
    ranks.sort_unstable();
    ranks.dedup();
    let oracle = if p.dense_available() {
        Some(p.dense()?)
    } else {
        None
    };
    let (x, y) = (&p.data.x, &p.data.y);

    let mut out = sink(args.model.out.as_deref())?;
    writeln!(out, "rank,svd_s,map_s,cov_s,total_s,lambda_bar1,mean_err,var_err")?;
    for &m in &ranks {
        let mut times = (Vec::new(), Vec::new(), Vec::new());
        let mut last = None;
        for _ in 0..args.repeats {
            let (svd, svd_time) = p.svd(m)?;
            let fit = lr_laplace_fit_svd(x, &svd, y, p.family, &p.prior, p.opts)?;
            times.0.push(svd_time);
            times.1.push(fit.timings.map);
            times.2.push(fit.timings.cov);
            last = Some((svd, fit));
        }
        let (svd, fit) = last.expect("at least one repeat");
        let (s, mp, c) = (median(times.0), median(times.1), median(times.2));
        let (mean_err, var_err) = match &oracle {
            Some(o) => {
                let var_err = (0..p.data.dim())
                    .map(|i| (fit.query_var(i) - o.covariance[(i, i)]).abs())
                    .fold(0.0, f64::max);
                (fmt_f64((&fit.mean - &o.mean).norm()), fmt_f64(var_err))
            }
            None => (String::new(), String::new()),
        };
        writeln!(
            out,
            "{m},{},{},{},{},{},{mean_err},{var_err}",
            fmt_f64(s.as_secs_f64()),
            fmt_f64(mp.as_secs_f64()),
            fmt_f64(c.as_secs_f64()),
            fmt_f64((s + mp + c).as_secs_f64()),
            fmt_f64(svd.residual_spectral_norm),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<()> {
    let p = Problem::load(&args.model)?;
    if p.family != Family::Logistic {
        return Err(Error::Unsupported("predict needs --family logistic".into()));
    }
    let (header, table) = load_table(&args.test)?;
    let response = header.iter().position(|h| *h == args.model.response_col);
    let covariates = match response {
        Some(col) => table.clone().remove_column(col),
        None => table.clone(),
    };
    if covariates.ncols() != p.data.dim() {
        return Err(Error::DimensionMismatch(format!(
            "test rows have {} covariates, training data has {}",
            covariates.ncols(),
            p.data.dim()
        )));
    }
    let (svd, _) = p.svd(args.model.rank)?;
    let fit = lr_laplace_fit_svd(&p.data.x, &svd, &p.data.y, p.family, &p.prior, p.opts)?;

    let mut out = sink(args.model.out.as_deref())?;
    write!(out, "row,mean,variance,probability")?;
    if response.is_some() {
        write!(out, ",y")?;
    }
    writeln!(out)?;
    for r in 0..covariates.nrows() {
        let row = covariates.row(r).transpose();
        let m = row.dot(&fit.mean);
        let (v, prob) = if args.plug_in {
            (0.0, sigmoid(m))
        } else {
            let prob = predict_proba(&fit, &row)?;
            let v = fit.cov.quad_form(&row)?.max(0.0);
            debug_assert_eq!(prob, probit_probability(m, v));
            (v, prob)
        };
        write!(out, "{r},{},{},{}", fmt_f64(m), fmt_f64(v), fmt_f64(prob))?;
        if let Some(col) = response {
            write!(out, ",{}", fmt_f64(table[(r, col)]))?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}
