//! Tuning grids and BIC model selection for every fitter.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bar::{
    bar_ccd_from, cyc_bar_from, fit_ridge, BarConfig, BarFit, SparseFit, SweepMode,
};
use crate::engine::{EngineKind, Evaluator, PshProblem};
use crate::error::{Error, Result};
use crate::penalty::{alasso_weights, fit_penalized_from, lambda_max, PenalizedFit, PenaltyKind, PenaltySpec};

pub const GRID_LEN: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    CycBar,
    Bar,
    Lasso,
    Alasso,
    Scad,
    Mcp,
}

impl Method {
    pub fn penalty_kind(self) -> Option<PenaltyKind> {
        match self {
            Method::Lasso => Some(PenaltyKind::Lasso),
            Method::Alasso => Some(PenaltyKind::Alasso),
            Method::Scad => Some(PenaltyKind::Scad),
            Method::Mcp => Some(PenaltyKind::Mcp),
            Method::CycBar | Method::Bar => None,
        }
    }

    pub fn is_bar(self) -> bool {
        matches!(self, Method::CycBar | Method::Bar)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::CycBar => "cycbar",
            Method::Bar => "bar",
            Method::Lasso => "lasso",
            Method::Alasso => "alasso",
            Method::Scad => "scad",
            Method::Mcp => "mcp",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cycbar" => Ok(Method::CycBar),
            "bar" | "bar-ccd" => Ok(Method::Bar),
            "lasso" => Ok(Method::Lasso),
            "alasso" => Ok(Method::Alasso),
            "scad" => Ok(Method::Scad),
            "mcp" => Ok(Method::Mcp),
            other => Err(format!("unknown method '{other}'")),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Sample-size term of the BIC penalty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BicSampleSize {
    #[default]
    Subjects,
    Events,
}

impl std::str::FromStr for BicSampleSize {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "subjects" => Ok(BicSampleSize::Subjects),
            "events" => Ok(BicSampleSize::Events),
            other => Err(format!("unknown BIC sample size '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitOptions {
    /// Ridge penalty for BAR methods; `None` means `log(p)`.
    pub xi: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub sweep_mode: SweepMode,
    /// SCAD/MCP shape; `None` uses the kind's default.
    pub gamma: Option<f64>,
    pub engine: EngineKind,
    pub bic_n: BicSampleSize,
    pub warm_start: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            xi: None,
            tol: 1e-6,
            max_iter: 1000,
            sweep_mode: SweepMode::GaussSeidel,
            gamma: None,
            engine: EngineKind::Scan,
            bic_n: BicSampleSize::Subjects,
            warm_start: true,
        }
    }
}

impl FitOptions {
    pub fn xi_for(&self, p: usize) -> f64 {
        self.xi.unwrap_or((p as f64).ln())
    }

    pub fn bar_config(&self, p: usize, lambda: f64) -> BarConfig {
        BarConfig {
            xi: self.xi_for(p),
            lambda,
            tol: self.tol,
            inner_tol: self.tol,
            max_outer: self.max_iter,
            max_inner: self.max_iter,
            sweep_mode: self.sweep_mode,
            ..BarConfig::default()
        }
    }

    fn penalty_spec(&self, kind: PenaltyKind, lambda: f64, weights: Option<&Vec<f64>>) -> PenaltySpec {
        let mut spec = PenaltySpec::new(kind, lambda);
        if let Some(g) = self.gamma {
            spec.gamma = g;
        }
        spec.adaptive_weights = weights.cloned();
        spec
    }
}

/// Result of any fitter.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum AnyFit {
    Bar(BarFit),
    Penalized(PenalizedFit),
}

impl SparseFit for AnyFit {
    fn beta(&self) -> &[f64] {
        match self {
            AnyFit::Bar(f) => &f.beta,
            AnyFit::Penalized(f) => &f.beta,
        }
    }
    fn converged(&self) -> bool {
        match self {
            AnyFit::Bar(f) => f.converged,
            AnyFit::Penalized(f) => f.converged,
        }
    }
    fn iterations(&self) -> usize {
        match self {
            AnyFit::Bar(f) => f.outer_iters,
            AnyFit::Penalized(f) => f.iterations,
        }
    }
}

/// 25 log-spaced values from 0.001 to `3 log(p)`, endpoints included.
pub fn default_grid(p: usize) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::Validation(format!("default grid needs p >= 2, got {p}")));
    }
    Ok(log_spaced(0.001, 3.0 * (p as f64).ln(), GRID_LEN))
}

pub fn log_spaced(lo: f64, hi: f64, len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..len)
        .map(|i| {
            if i == len - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (len - 1) as f64).exp()
            }
        })
        .collect()
}

/// Grid for the LASSO-type baselines: `len` log-spaced values from
/// `ratio * lambda_max` to `lambda_max`.
pub fn penalty_grid<E: Evaluator + ?Sized>(
    eval: &mut E,
    weights: Option<&[f64]>,
    len: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    let hi = lambda_max(eval, weights)?;
    if !(hi > 0.0) {
        return Err(Error::Validation("score at zero vanishes; no penalty grid".into()));
    }
    Ok(log_spaced(hi * ratio, hi, len))
}

/// `-2 l(beta) + |support| log(m)` with `m` subjects or cause-1 events.
pub fn bic_score(problem: &PshProblem, beta: &[f64], bic_n: BicSampleSize) -> Result<f64> {
    let ll = problem.loglik(beta)?;
    let df = beta.iter().filter(|b| **b != 0.0).count() as f64;
    let m = match bic_n {
        BicSampleSize::Subjects => problem.n(),
        BicSampleSize::Events => problem.n_events().max(1),
    } as f64;
    Ok(-2.0 * ll + df * m.ln())
}

/// Fits one tuning value. `init` is the starting estimate (the ridge fit for
/// BAR methods, zero or a warm start otherwise).
pub fn fit_at<E: Evaluator + ?Sized>(
    eval: &mut E,
    method: Method,
    lambda: f64,
    options: &FitOptions,
    init: &[f64],
    weights: Option<&Vec<f64>>,
) -> Result<AnyFit> {
    let p = eval.problem().p();
    match method {
        Method::CycBar => Ok(AnyFit::Bar(cyc_bar_from(eval, &options.bar_config(p, lambda), init)?)),
        Method::Bar => Ok(AnyFit::Bar(bar_ccd_from(eval, &options.bar_config(p, lambda), init)?)),
        _ => {
            let kind = method.penalty_kind().expect("penalized method");
            let spec = options.penalty_spec(kind, lambda, weights);
            Ok(AnyFit::Penalized(fit_penalized_from(eval, &spec, options.tol, options.max_iter, init)?))
        }
    }
}

/// Single fit from the method's natural starting point.
pub fn fit_method(problem: &PshProblem, method: Method, lambda: f64, options: &FitOptions) -> Result<AnyFit> {
    let mut eval = problem.evaluator(options.engine);
    let start = starting_point(&mut *eval, method, options)?;
    fit_at(&mut *eval, method, lambda, options, &start.init, start.weights.as_ref())
}

struct Start {
    init: Vec<f64>,
    weights: Option<Vec<f64>>,
}

fn starting_point<E: Evaluator + ?Sized>(eval: &mut E, method: Method, options: &FitOptions) -> Result<Start> {
    let p = eval.problem().p();
    if method.is_bar() {
        let ridge = fit_ridge(eval, options.xi_for(p), options.tol, options.max_iter)?;
        return Ok(Start {
            init: ridge.beta,
            weights: None,
        });
    }
    let weights = if method == Method::Alasso {
        Some(alasso_weights(eval, options.tol, options.max_iter)?)
    } else {
        None
    };
    Ok(Start {
        init: vec![0.0; p],
        weights,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TuneResult {
    pub method: Method,
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    pub support_sizes: Vec<usize>,
    pub converged: Vec<bool>,
    pub best_index: usize,
    pub best_lambda: f64,
    pub best_fit: AnyFit,
    pub betas: Vec<Vec<f64>>,
}

/// Builds the grid the method is tuned over by default: the BAR grid for
/// BAR methods, a data-driven `lambda_max` grid for the baselines.
pub fn method_grid(problem: &PshProblem, method: Method, options: &FitOptions) -> Result<Vec<f64>> {
    if method.is_bar() {
        return default_grid(problem.p());
    }
    let mut eval = problem.evaluator(EngineKind::Scan);
    let weights = if method == Method::Alasso {
        Some(alasso_weights(&mut *eval, options.tol, options.max_iter)?)
    } else {
        None
    };
    penalty_grid(&mut *eval, weights.as_deref(), GRID_LEN, 0.01)
}

/// Fits every grid value and selects the BIC minimizer (ties go to the
/// larger lambda). Values are fitted from largest to smallest; with
/// `warm_start`, cycBAR and the baselines start from the previous solution.
/// BAR-CCD always starts from the ridge estimate, since its zeros are
/// absorbing.
pub fn grid_search(problem: &PshProblem, method: Method, grid: &[f64], options: &FitOptions) -> Result<TuneResult> {
    if grid.is_empty() {
        return Err(Error::Validation("tuning grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::Validation(format!("grid value {bad} is not a valid penalty")));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));

    let start = {
        let mut eval = problem.evaluator(options.engine);
        starting_point(&mut *eval, method, options)?
    };

    let mut fits: Vec<Option<AnyFit>> = vec![None; grid.len()];
    let sequential = options.warm_start && method != Method::Bar;
    if sequential {
        let mut eval = problem.evaluator(options.engine);
        let mut init = start.init.clone();
        for &i in &order {
            let fit = fit_at(&mut *eval, method, grid[i], options, &init, start.weights.as_ref())?;
            init = fit.beta().to_vec();
            fits[i] = Some(fit);
        }
    } else {
        let done: Vec<(usize, AnyFit)> = order
            .par_iter()
            .map(|&i| {
                let mut eval = problem.evaluator(options.engine);
                fit_at(&mut *eval, method, grid[i], options, &start.init, start.weights.as_ref()).map(|f| (i, f))
            })
            .collect::<Result<_>>()?;
        for (i, f) in done {
            fits[i] = Some(f);
        }
    }
    let fits: Vec<AnyFit> = fits.into_iter().map(|f| f.expect("every grid point fitted")).collect();

    let scores = fits
        .iter()
        .map(|f| bic_score(problem, f.beta(), options.bic_n))
        .collect::<Result<Vec<_>>>()?;
    let converged: Vec<bool> = fits.iter().map(|f| f.converged()).collect();
    if !converged.iter().any(|&c| c) {
        return Err(Error::NoConvergence(grid.len()));
    }
    let mut best: Option<usize> = None;
    for &i in &order {
        if !converged[i] || !scores[i].is_finite() {
            continue;
        }
        match best {
            Some(b) if scores[i] >= scores[b] => {}
            _ => best = Some(i),
        }
    }
    let best_index = best.ok_or(Error::NoConvergence(grid.len()))?;
    Ok(TuneResult {
        method,
        grid: grid.to_vec(),
        support_sizes: fits.iter().map(|f| f.support().len()).collect(),
        betas: fits.iter().map(|f| f.beta().to_vec()).collect(),
        scores,
        converged,
        best_index,
        best_lambda: grid[best_index],
        best_fit: fits[best_index].clone(),
    })
}
