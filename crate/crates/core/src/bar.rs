//! Broken adaptive ridge (BAR) estimation.
//!
//! BAR starts from a ridge fit and repeatedly solves ridge problems whose
//! per-coordinate penalty is `lambda / beta_prev_j^2`; the limit is sparse.
//! Two solvers are provided:
//!
//! * [`bar_ccd`] runs that nested scheme literally: an outer reweighting loop
//!   around a cyclic coordinate descent ridge solve, followed by a final
//!   cutoff that zeroes coefficients below `sparsity_cutoff`.
//! * [`cyc_bar`] iterates the coordinate-wise fixed-point map of the BAR
//!   limit directly. Each update is the closed-form thresholding rule in
//!   [`threshold_update`], so zeros are exact.
//!
//! Both use the per-coordinate score `c1` and negative Hessian diagonal `c2`
//! of the log-pseudo-likelihood; `b = c2 * beta_j + c1` is the working
//! response of the local quadratic model.

use serde::{Deserialize, Serialize};

use crate::engine::Evaluator;
use crate::error::{Error, Result};

/// Coordinates whose previous BAR iterate is below this magnitude are fixed
/// at zero (their reweighted penalty is infinite).
const FROZEN_MAGNITUDE: f64 = 1e-150;

/// Curvature below which a coordinate is treated as degenerate.
const MIN_CURVATURE: f64 = 1e-12;

/// Order in which a cyclic sweep refreshes the local quadratic model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepMode {
    /// Each coordinate sees the coordinates already updated in this sweep.
    #[default]
    GaussSeidel,
    /// Every coordinate in a sweep is computed at the previous sweep's
    /// coefficients.
    Jacobi,
}

impl std::str::FromStr for SweepMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "gauss-seidel" => Ok(SweepMode::GaussSeidel),
            "jacobi" => Ok(SweepMode::Jacobi),
            other => Err(format!("unknown sweep mode '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarConfig {
    /// Ridge penalty of the initial estimate.
    pub xi: f64,
    /// BAR penalty.
    pub lambda: f64,
    /// Outer convergence tolerance on `||beta_new - beta_old||_2`.
    pub tol: f64,
    /// Tolerance of the inner ridge solves.
    pub inner_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    /// Final cutoff used by [`bar_ccd`] only.
    pub sparsity_cutoff: f64,
    pub sweep_mode: SweepMode,
}

impl Default for BarConfig {
    fn default() -> Self {
        BarConfig {
            xi: 0.0,
            lambda: 0.0,
            tol: 1e-6,
            inner_tol: 1e-6,
            max_outer: 1000,
            max_inner: 1000,
            sparsity_cutoff: 1e-6,
            sweep_mode: SweepMode::GaussSeidel,
        }
    }
}

impl BarConfig {
    pub fn new(xi: f64, lambda: f64) -> Self {
        BarConfig {
            xi,
            lambda,
            ..Default::default()
        }
    }

    /// `xi = lambda = log(p)`.
    pub fn log_p(p: usize) -> Self {
        let v = (p as f64).ln();
        Self::new(v, v)
    }

    pub fn validate(&self) -> Result<()> {
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if !nonneg(self.xi) || !nonneg(self.lambda) {
            return Err(Error::Validation(format!(
                "xi ({}) and lambda ({}) must be finite and non-negative",
                self.xi, self.lambda
            )));
        }
        if !pos(self.tol) || !pos(self.inner_tol) || !pos(self.sparsity_cutoff) {
            return Err(Error::Validation("tolerances must be positive".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::Validation("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

/// Shared view of a sparse coefficient fit.
pub trait SparseFit {
    fn beta(&self) -> &[f64];
    fn converged(&self) -> bool;
    fn iterations(&self) -> usize;

    fn support(&self) -> Vec<usize> {
        support_of(self.beta())
    }
}

pub(crate) fn support_of(beta: &[f64]) -> Vec<usize> {
    beta.iter()
        .enumerate()
        .filter(|(_, b)| **b != 0.0)
        .map(|(j, _)| j)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarFit {
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    pub outer_iters: usize,
    /// Coordinate sweeps over all outer iterations, ridge start included.
    pub inner_iters: usize,
    pub converged: bool,
    /// `||beta^(s) - beta^(s-1)||_2` per outer iteration.
    pub objective_trace: Vec<f64>,
    pub config: BarConfig,
}

impl SparseFit for BarFit {
    fn beta(&self) -> &[f64] {
        &self.beta
    }
    fn converged(&self) -> bool {
        self.converged
    }
    fn iterations(&self) -> usize {
        self.outer_iters
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RidgeFit {
    pub beta: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn norm2(v: f64) -> f64 {
    v.sqrt()
}

/// Moves coordinate `j` to `value`, keeping the evaluator in sync.
pub(crate) fn set_coordinate<E: Evaluator + ?Sized>(
    eval: &mut E,
    beta: &mut [f64],
    j: usize,
    value: f64,
) -> f64 {
    let delta = value - beta[j];
    if delta != 0.0 {
        eval.shift_coordinate(j, delta);
        beta[j] = value;
    }
    delta
}

/// Cyclic Newton coordinate updates for `-2 l(beta) + sum_j pen_j beta_j^2`,
/// `beta_j <- (c2 beta_j + c1) / (c2 + pen_j)`. Coordinates with infinite
/// penalty stay at zero. Returns (sweeps, converged).
fn weighted_ridge<E: Evaluator + ?Sized>(
    eval: &mut E,
    beta: &mut [f64],
    penalty: &[f64],
    tol: f64,
    max_sweeps: usize,
) -> Result<(usize, bool)> {
    for sweep in 1..=max_sweeps {
        let mut ss = 0.0;
        for j in 0..beta.len() {
            if penalty[j].is_infinite() {
                let d = set_coordinate(eval, beta, j, 0.0);
                ss += d * d;
                continue;
            }
            let d = eval.coordinate(j)?;
            let denom = d.neg_hess + penalty[j];
            if !(denom > MIN_CURVATURE) {
                continue;
            }
            let next = (d.neg_hess * beta[j] + d.score) / denom;
            let step = set_coordinate(eval, beta, j, next);
            ss += step * step;
        }
        if norm2(ss) < tol {
            return Ok((sweep, true));
        }
    }
    Ok((max_sweeps, false))
}

/// Ridge estimate `argmin -2 l(beta) + xi ||beta||^2`, from `beta = 0`.
pub fn fit_ridge<E: Evaluator + ?Sized>(
    eval: &mut E,
    xi: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<RidgeFit> {
    if !(xi.is_finite() && xi >= 0.0) {
        return Err(Error::Validation(format!("xi must be non-negative, got {xi}")));
    }
    let p = eval.problem().p();
    let mut beta = vec![0.0; p];
    eval.set_beta(&beta)?;
    let penalty = vec![xi; p];
    let (sweeps, converged) = weighted_ridge(eval, &mut beta, &penalty, tol, max_sweeps)?;
    if !converged {
        log::warn!("ridge initialization did not converge in {sweeps} sweeps");
    }
    Ok(RidgeFit {
        beta,
        sweeps,
        converged,
    })
}

/// Closed-form coordinate-wise BAR fixed point: the larger-magnitude root of
/// `xtx * beta^2 - b * beta + lambda = 0`, or zero when no real root exists.
pub fn threshold_update(b: f64, xtx: f64, lambda: f64) -> f64 {
    let disc = b * b - 4.0 * lambda * xtx;
    if b.abs() < 2.0 * (lambda * xtx).sqrt() {
        return 0.0;
    }
    (b + b.signum() * disc.max(0.0).sqrt()) / (2.0 * xtx)
}

/// Original BAR: nested reweighted ridge solves by cyclic coordinate
/// descent, starting from the ridge estimate with penalty `config.xi`.
pub fn bar_ccd<E: Evaluator + ?Sized>(eval: &mut E, config: &BarConfig) -> Result<BarFit> {
    config.validate()?;
    let ridge = fit_ridge(eval, config.xi, config.inner_tol, config.max_inner)?;
    let mut fit = bar_ccd_from(eval, config, &ridge.beta)?;
    fit.inner_iters += ridge.sweeps;
    Ok(fit)
}

/// [`bar_ccd`] from a caller-supplied starting estimate.
pub fn bar_ccd_from<E: Evaluator + ?Sized>(
    eval: &mut E,
    config: &BarConfig,
    init: &[f64],
) -> Result<BarFit> {
    config.validate()?;
    let mut prev = init.to_vec();
    let mut beta = init.to_vec();
    eval.set_beta(&beta)?;
    let mut penalty = vec![0.0; beta.len()];
    let mut trace = Vec::new();
    let mut inner_total = 0;
    let mut converged = false;
    let mut outer = 0;

    while outer < config.max_outer {
        outer += 1;
        for (pen, &b) in penalty.iter_mut().zip(&prev) {
            *pen = if b.abs() < FROZEN_MAGNITUDE {
                f64::INFINITY
            } else {
                config.lambda / (b * b)
            };
        }
        let (sweeps, inner_ok) =
            weighted_ridge(eval, &mut beta, &penalty, config.inner_tol, config.max_inner)?;
        inner_total += sweeps;
        if !inner_ok {
            log::debug!("BAR outer iteration {outer}: inner solve hit {sweeps} sweeps");
        }
        let change = norm2(beta.iter().zip(&prev).map(|(a, b)| (a - b).powi(2)).sum());
        trace.push(change);
        prev.copy_from_slice(&beta);
        if change < config.tol {
            converged = true;
            break;
        }
    }

    for b in beta.iter_mut() {
        if b.abs() <= config.sparsity_cutoff {
            *b = 0.0;
        }
    }
    Ok(BarFit {
        support: support_of(&beta),
        beta,
        outer_iters: outer,
        inner_iters: inner_total,
        converged,
        objective_trace: trace,
        config: config.clone(),
    })
}

/// cycBAR: cyclic thresholding updates towards the BAR fixed point,
/// starting from the ridge estimate with penalty `config.xi`.
pub fn cyc_bar<E: Evaluator + ?Sized>(eval: &mut E, config: &BarConfig) -> Result<BarFit> {
    config.validate()?;
    let ridge = fit_ridge(eval, config.xi, config.inner_tol, config.max_inner)?;
    let mut fit = cyc_bar_from(eval, config, &ridge.beta)?;
    fit.inner_iters += ridge.sweeps;
    Ok(fit)
}

/// [`cyc_bar`] from a caller-supplied starting estimate.
pub fn cyc_bar_from<E: Evaluator + ?Sized>(
    eval: &mut E,
    config: &BarConfig,
    init: &[f64],
) -> Result<BarFit> {
    config.validate()?;
    let p = init.len();
    let mut beta = init.to_vec();
    eval.set_beta(&beta)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut sweeps = 0;
    let mut pending = vec![0.0; p];

    while sweeps < config.max_outer {
        sweeps += 1;
        let mut ss = 0.0;
        match config.sweep_mode {
            SweepMode::GaussSeidel => {
                for j in 0..p {
                    let next = cyc_target(eval, &beta, j, config.lambda)?;
                    let step = set_coordinate(eval, &mut beta, j, next);
                    ss += step * step;
                }
            }
            SweepMode::Jacobi => {
                for j in 0..p {
                    pending[j] = cyc_target(eval, &beta, j, config.lambda)?;
                }
                for j in 0..p {
                    let step = set_coordinate(eval, &mut beta, j, pending[j]);
                    ss += step * step;
                }
            }
        }
        let change = norm2(ss);
        trace.push(change);
        if change < config.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("cycBAR did not converge in {sweeps} sweeps (lambda = {})", config.lambda);
    }
    Ok(BarFit {
        support: support_of(&beta),
        beta,
        outer_iters: sweeps,
        inner_iters: sweeps,
        converged,
        objective_trace: trace,
        config: config.clone(),
    })
}

fn cyc_target<E: Evaluator + ?Sized>(
    eval: &mut E,
    beta: &[f64],
    j: usize,
    lambda: f64,
) -> Result<f64> {
    let d = eval.coordinate(j)?;
    if d.neg_hess <= MIN_CURVATURE {
        return Ok(0.0);
    }
    let b = d.neg_hess * beta[j] + d.score;
    Ok(threshold_update(b, d.neg_hess, lambda))
}
