//! Limited-memory BFGS with a strong-Wolfe line search, plus a
//! finite-difference gradient checker.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::linalg::Vector;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 500;
const HISTORY: usize = 10;
const C1: f64 = 1e-4;
const C2: f64 = 0.9;

/// A differentiable function to be minimized.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Value and gradient at `theta`.
    fn eval(&self, theta: &Vector) -> Result<(f64, Vector)>;
}

/// Adapts a closure into an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&Vector) -> (f64, Vector),
{
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { dim, f }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&Vector) -> (f64, Vector),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, theta: &Vector) -> Result<(f64, Vector)> {
        Ok((self.f)(theta))
    }
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub argmin: Vector,
    pub value: f64,
    /// Infinity norm of the gradient at `argmin`.
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn eval_checked<O: Objective + ?Sized>(obj: &O, theta: &Vector) -> Result<(f64, Vector)> {
    let (f, g) = obj.eval(theta)?;
    if g.len() != obj.dim() {
        return Err(Error::DimensionMismatch(format!(
            "gradient has length {}, objective dimension is {}",
            g.len(),
            obj.dim()
        )));
    }
    Ok((f, g))
}

fn is_finite_pair(f: f64, g: &Vector) -> bool {
    f.is_finite() && g.iter().all(|v| v.is_finite())
}

struct LinePoint {
    step: f64,
    value: f64,
    grad: Vector,
    slope: f64,
}

/// Minimizes `obj` from `init` until `‖∇f‖_∞ <= tol` or `max_iter` iterations.
///
/// Hitting the iteration cap is not an error: the best iterate is returned
/// with `converged = false`.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    init: &Vector,
    tol: f64,
    max_iter: usize,
) -> Result<OptimResult> {
    if init.len() != obj.dim() {
        return Err(Error::DimensionMismatch(format!(
            "initial point has length {}, objective dimension is {}",
            init.len(),
            obj.dim()
        )));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial point"));
    }
    let mut x = init.clone();
    let (mut f, mut g) = eval_checked(obj, &x)?;
    if !is_finite_pair(f, &g) {
        return Err(Error::NonFinite("objective at initial point"));
    }

    let mut history: VecDeque<(Vector, Vector, f64)> = VecDeque::with_capacity(HISTORY);
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < max_iter {
        if g.amax() <= tol {
            break;
        }
        iterations += 1;

        let mut dir = two_loop(&g, &history);
        let mut slope = dir.dot(&g);
        if slope >= 0.0 || !slope.is_finite() {
            history.clear();
            dir = -&g;
            slope = dir.dot(&g);
        }
        let first = if history.is_empty() {
            (1.0 / dir.amax()).min(1.0)
        } else {
            1.0
        };

        let point = match strong_wolfe(obj, &x, f, slope, &dir, first)? {
            Some(p) => p,
            None if !history.is_empty() => {
                // retry once along steepest descent with fresh memory
                history.clear();
                let sd = -&g;
                let sd_slope = sd.dot(&g);
                match strong_wolfe(obj, &x, f, sd_slope, &sd, (1.0 / sd.amax()).min(1.0))? {
                    Some(p) => {
                        dir = sd;
                        p
                    }
                    None => break,
                }
            }
            None => break,
        };

        let s = &dir * point.step;
        let yv = &point.grad - &g;
        let sy = s.dot(&yv);
        let df = f - point.value;
        x += &s;
        f = point.value;
        g = point.grad;
        if sy > 1e-12 * s.norm() * yv.norm() {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        if df.abs() <= 1e-16 * f.abs().max(1.0) {
            stalled += 1;
            if stalled >= 5 {
                break;
            }
        } else {
            stalled = 0;
        }
    }
    let grad_norm = g.amax();
    Ok(OptimResult {
        argmin: x,
        value: f,
        grad_norm,
        iterations,
        converged: grad_norm <= tol,
    })
}

/// L-BFGS two-loop recursion: returns `-H g`.
fn two_loop(g: &Vector, history: &VecDeque<(Vector, Vector, f64)>) -> Vector {
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q.axpy(-a, y, 1.0);
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        q *= s.dot(y) / y.dot(y);
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q.axpy(a - b, s, 1.0);
    }
    -q
}

fn probe<O: Objective + ?Sized>(obj: &O, x: &Vector, dir: &Vector, step: f64) -> Result<LinePoint> {
    let trial = x + dir * step;
    let (value, grad) = eval_checked(obj, &trial)?;
    let slope = grad.dot(dir);
    Ok(LinePoint {
        step,
        value,
        grad,
        slope,
    })
}

/// Bracketing line search satisfying the strong Wolfe conditions.
/// Non-finite trial values are treated as Armijo failures.
fn strong_wolfe<O: Objective + ?Sized>(
    obj: &O,
    x: &Vector,
    f0: f64,
    slope0: f64,
    dir: &Vector,
    first: f64,
) -> Result<Option<LinePoint>> {
    let mut prev_step = 0.0;
    let mut prev_value = f0;
    let mut prev_slope = slope0;
    let mut step = first;
    for i in 0..40 {
        let p = probe(obj, x, dir, step)?;
        if !is_finite_pair(p.value, &p.grad) {
            step = 0.5 * (prev_step + step);
            continue;
        }
        if p.value > f0 + C1 * step * slope0 || (i > 0 && p.value >= prev_value) {
            return zoom(
                obj,
                x,
                f0,
                slope0,
                dir,
                (prev_step, prev_value, prev_slope),
                (step, p.value, p.slope),
            );
        }
        if p.slope.abs() <= -C2 * slope0 {
            return Ok(Some(p));
        }
        if p.slope >= 0.0 {
            return zoom(
                obj,
                x,
                f0,
                slope0,
                dir,
                (step, p.value, p.slope),
                (prev_step, prev_value, prev_slope),
            );
        }
        prev_step = step;
        prev_value = p.value;
        prev_slope = p.slope;
        step *= 2.0;
    }
    Ok(None)
}

fn zoom<O: Objective + ?Sized>(
    obj: &O,
    x: &Vector,
    f0: f64,
    slope0: f64,
    dir: &Vector,
    lo: (f64, f64, f64),
    hi: (f64, f64, f64),
) -> Result<Option<LinePoint>> {
    let (mut lo_step, mut lo_value, mut lo_slope) = lo;
    let (mut hi_step, mut hi_value, mut hi_slope) = hi;
    let mut best: Option<LinePoint> = None;
    for _ in 0..60 {
        let step = cubic_min(lo_step, lo_value, lo_slope, hi_step, hi_value, hi_slope);
        if (hi_step - lo_step).abs() <= 1e-16 * lo_step.abs().max(1e-300) {
            break;
        }
        let p = probe(obj, x, dir, step)?;
        if !is_finite_pair(p.value, &p.grad) || p.value > f0 + C1 * step * slope0 || p.value >= lo_value {
            hi_step = step;
            hi_value = if p.value.is_finite() {
                p.value
            } else {
                f64::INFINITY
            };
            hi_slope = p.slope;
            continue;
        }
        if p.slope.abs() <= -C2 * slope0 {
            return Ok(Some(p));
        }
        if p.slope * (hi_step - lo_step) >= 0.0 {
            hi_step = lo_step;
            hi_value = lo_value;
            hi_slope = lo_slope;
        }
        lo_step = step;
        lo_value = p.value;
        lo_slope = p.slope;
        best = Some(p);
    }
    // Accept a sufficient-decrease point even if curvature was not met.
    Ok(best.filter(|p| p.value < f0))
}

/// Minimizer of the cubic interpolant on `[a, b]`, safeguarded to stay
/// inside the interval.
fn cubic_min(a: f64, fa: f64, ga: f64, b: f64, fb: f64, gb: f64) -> f64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let mid = 0.5 * (a + b);
    if !fb.is_finite() || !gb.is_finite() {
        return mid;
    }
    let d1 = ga + gb - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - ga * gb;
    if disc < 0.0 {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2.0 * d2);
    let margin = 0.1 * (hi - lo);
    if t.is_finite() && t > lo + margin && t < hi - margin {
        t
    } else {
        mid
    }
}

/// Largest relative discrepancy between the analytic gradient and central
/// differences with step `1e-6 (1 + |θᵢ|)`. The relative error of each
/// coordinate is scaled by `max(1, |analytic|, |numeric|)`.
pub fn check_gradient<O: Objective + ?Sized>(obj: &O, theta: &Vector) -> Result<f64> {
    let (_, g) = eval_checked(obj, theta)?;
    let mut worst: f64 = 0.0;
    let mut probe = theta.clone();
    for i in 0..theta.len() {
        let h = 1e-6 * (1.0 + theta[i].abs());
        probe[i] = theta[i] + h;
        let (fp, _) = obj.eval(&probe)?;
        probe[i] = theta[i] - h;
        let (fm, _) = obj.eval(&probe)?;
        probe[i] = theta[i];
        let numeric = (fp - fm) / (2.0 * h);
        let scale = 1f64.max(g[i].abs()).max(numeric.abs());
        worst = worst.max((g[i] - numeric).abs() / scale);
    }
    Ok(worst)
}
