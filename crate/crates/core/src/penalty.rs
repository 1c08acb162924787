//! LASSO, adaptive LASSO, SCAD and MCP baselines.
//!
//! All four run cyclic coordinate descent on `-l(beta)/n + sum_j P(|beta_j|)`.
//! Each coordinate minimizes the penalized local quadratic
//! `u/2 beta^2 - v beta + P(|beta|)` with `u = c2/n` and
//! `v = (c2 beta_j + c1)/n`, so `lambda` is on the per-subject scale used by
//! the usual SCAD/MCP parameterizations.
//!
//! Penalties (t = |beta|):
//!
//! * LASSO: `lambda t`, adaptive LASSO: `lambda w_j t`
//! * SCAD: `lambda t` up to `lambda`, `(2 gamma lambda t - t^2 - lambda^2) / (2 (gamma - 1))`
//!   up to `gamma lambda`, then constant `lambda^2 (gamma + 1) / 2`
//! * MCP: `lambda t - t^2 / (2 gamma)` up to `gamma lambda`, then `gamma lambda^2 / 2`
//!
//! The univariate SCAD/MCP step takes the global minimizer over the
//! piecewise-quadratic pieces, which coincides with the familiar closed-form
//! rules whenever the piece is convex.

use serde::{Deserialize, Serialize};

use crate::bar::{fit_ridge, set_coordinate, support_of, SparseFit};
use crate::engine::Evaluator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyKind {
    Lasso,
    Alasso,
    Scad,
    Mcp,
}

impl PenaltyKind {
    pub fn default_gamma(self) -> f64 {
        match self {
            PenaltyKind::Scad => 3.7,
            PenaltyKind::Mcp => 3.0,
            PenaltyKind::Lasso | PenaltyKind::Alasso => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub gamma: f64,
    pub adaptive_weights: Option<Vec<f64>>,
}

impl PenaltySpec {
    pub fn new(kind: PenaltyKind, lambda: f64) -> Self {
        PenaltySpec {
            kind,
            lambda,
            gamma: kind.default_gamma(),
            adaptive_weights: None,
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Validation(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        match self.kind {
            PenaltyKind::Scad if !(self.gamma > 2.0) => {
                return Err(Error::Validation(format!("SCAD needs gamma > 2, got {}", self.gamma)))
            }
            PenaltyKind::Mcp if !(self.gamma > 1.0) => {
                return Err(Error::Validation(format!("MCP needs gamma > 1, got {}", self.gamma)))
            }
            _ => {}
        }
        if let Some(w) = &self.adaptive_weights {
            if w.len() != p {
                return Err(Error::Validation(format!(
                    "{} adaptive weights for {p} coefficients",
                    w.len()
                )));
            }
            if w.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::Validation("adaptive weights must be positive".into()));
            }
        }
        Ok(())
    }

    fn weight(&self, j: usize) -> f64 {
        match (&self.adaptive_weights, self.kind) {
            (Some(w), PenaltyKind::Alasso) => w[j],
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenalizedFit {
    pub beta: Vec<f64>,
    pub support: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
    pub spec: PenaltySpec,
}

impl SparseFit for PenalizedFit {
    fn beta(&self) -> &[f64] {
        &self.beta
    }
    fn converged(&self) -> bool {
        self.converged
    }
    fn iterations(&self) -> usize {
        self.iterations
    }
}

/// Penalty value `P(t)` for `t >= 0`.
pub fn penalty_value(kind: PenaltyKind, t: f64, lambda: f64, gamma: f64) -> f64 {
    match kind {
        PenaltyKind::Lasso | PenaltyKind::Alasso => lambda * t,
        PenaltyKind::Scad => {
            if t <= lambda {
                lambda * t
            } else if t <= gamma * lambda {
                (2.0 * gamma * lambda * t - t * t - lambda * lambda) / (2.0 * (gamma - 1.0))
            } else {
                lambda * lambda * (gamma + 1.0) / 2.0
            }
        }
        PenaltyKind::Mcp => {
            if t <= gamma * lambda {
                lambda * t - t * t / (2.0 * gamma)
            } else {
                gamma * lambda * lambda / 2.0
            }
        }
    }
}

fn soft(v: f64, thresh: f64) -> f64 {
    if v > thresh {
        v - thresh
    } else if v < -thresh {
        v + thresh
    } else {
        0.0
    }
}

/// Global minimizer of `u/2 b^2 - v b + P(|b|)` for `u > 0`.
pub fn univariate_update(kind: PenaltyKind, u: f64, v: f64, lambda: f64, gamma: f64) -> f64 {
    if lambda == 0.0 {
        return v / u;
    }
    let a = v.abs();
    let s = v.signum();
    let objective = |t: f64| 0.5 * u * t * t - a * t + penalty_value(kind, t, lambda, gamma);
    let mut candidates: [f64; 5] = [0.0; 5];
    let mut m = 0;
    let mut push = |t: f64| {
        candidates[m] = t;
        m += 1;
    };
    match kind {
        PenaltyKind::Lasso | PenaltyKind::Alasso => return soft(v, lambda) / u,
        PenaltyKind::Scad => {
            push(((a - lambda) / u).clamp(0.0, lambda));
            let curv = u - 1.0 / (gamma - 1.0);
            let (lo, hi) = (lambda, gamma * lambda);
            if curv > 0.0 {
                push(((a - gamma * lambda / (gamma - 1.0)) / curv).clamp(lo, hi));
            } else {
                push(lo);
                push(hi);
            }
            push((a / u).max(hi));
        }
        PenaltyKind::Mcp => {
            let curv = u - 1.0 / gamma;
            let hi = gamma * lambda;
            if curv > 0.0 {
                push(((a - lambda) / curv).clamp(0.0, hi));
            } else {
                push(0.0);
                push(hi);
            }
            push((a / u).max(hi));
        }
    }
    let mut best = 0.0;
    let mut best_obj = objective(0.0);
    for &t in &candidates[..m] {
        let o = objective(t);
        if o < best_obj {
            best = t;
            best_obj = o;
        }
    }
    s * best
}

/// Inverse absolute unpenalized estimates, floored to stay finite.
pub fn alasso_weights<E: Evaluator + ?Sized>(eval: &mut E, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let init = fit_ridge(eval, 0.0, tol, max_iter)?;
    Ok(init.beta.iter().map(|b| 1.0 / b.abs().max(1e-10)).collect())
}

pub fn fit_penalized<E: Evaluator + ?Sized>(
    eval: &mut E,
    spec: &PenaltySpec,
    tol: f64,
    max_iter: usize,
) -> Result<PenalizedFit> {
    let p = eval.problem().p();
    fit_penalized_from(eval, spec, tol, max_iter, &vec![0.0; p])
}

/// Coordinate descent from `init`. Adaptive LASSO without explicit weights
/// derives them from the unpenalized fit.
pub fn fit_penalized_from<E: Evaluator + ?Sized>(
    eval: &mut E,
    spec: &PenaltySpec,
    tol: f64,
    max_iter: usize,
    init: &[f64],
) -> Result<PenalizedFit> {
    let p = eval.problem().p();
    spec.validate(p)?;
    let mut spec = spec.clone();
    if spec.kind == PenaltyKind::Alasso && spec.adaptive_weights.is_none() {
        spec.adaptive_weights = Some(alasso_weights(eval, tol, max_iter)?);
    }
    let n = eval.problem().n() as f64;
    let mut beta = init.to_vec();
    eval.set_beta(&beta)?;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    while iters < max_iter {
        iters += 1;
        let mut ss = 0.0;
        for j in 0..p {
            let d = eval.coordinate(j)?;
            let u = d.neg_hess / n;
            let next = if u <= 1e-12 / n {
                0.0
            } else {
                let v = (d.neg_hess * beta[j] + d.score) / n;
                univariate_update(spec.kind, u, v, spec.lambda * spec.weight(j), spec.gamma)
            };
            let step = set_coordinate(eval, &mut beta, j, next);
            ss += step * step;
        }
        let change = ss.sqrt();
        trace.push(change);
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(PenalizedFit {
        support: support_of(&beta),
        beta,
        iterations: iters,
        converged,
        objective_trace: trace,
        spec,
    })
}

/// Smallest `lambda` at which every coefficient is zero at `beta = 0`:
/// `max_j |score_j(0)| / (n w_j)`.
pub fn lambda_max<E: Evaluator + ?Sized>(eval: &mut E, weights: Option<&[f64]>) -> Result<f64> {
    let p = eval.problem().p();
    let n = eval.problem().n() as f64;
    eval.set_beta(&vec![0.0; p])?;
    let mut best = 0.0_f64;
    for j in 0..p {
        let s = eval.coordinate(j)?.score.abs() / n;
        let w = weights.map_or(1.0, |w| w[j]);
        best = best.max(s / w);
    }
    Ok(best)
}
