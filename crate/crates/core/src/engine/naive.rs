use super::{CoordinateDerivs, Evaluator, LikelihoodReport, Moment, Predictor, PshProblem};
use crate::data::Cause;
use crate::error::{Error, Result};

/// Quadratic-cost evaluator that enumerates
/// `R_i = {k : X_k >= X_i} ∪ {k : X_k <= X_i, cause_k = 2}` for every
/// cause-1 failure and weights each member by `G(X_i) / G(min(X_i, X_k))`.
pub struct NaiveEvaluator<'a> {
    problem: &'a PshProblem,
    pred: Predictor,
}

impl<'a> NaiveEvaluator<'a> {
    pub fn new(problem: &'a PshProblem) -> Self {
        NaiveEvaluator {
            problem,
            pred: Predictor::new(problem.n()),
        }
    }
}

#[inline]
fn in_risk_set(prob: &PshProblem, i: usize, k: usize) -> bool {
    let (ti, tk) = (prob.time[i], prob.time[k]);
    tk >= ti || (tk <= ti && prob.cause[k] == Cause::Cause2)
}

#[inline]
fn weight(prob: &PshProblem, i: usize, k: usize) -> f64 {
    let g_min = if prob.time[k] < prob.time[i] {
        prob.g[k]
    } else {
        prob.g[i]
    };
    prob.g[i] / g_min
}

/// Risk-set sums of `w_ik * exp(eta_k) * m_k` for `m_k` in `1, z_k, z_k^2`.
fn risk_sums(prob: &PshProblem, w: &[f64], z: Option<&[f64]>, i: usize) -> [f64; 3] {
    let mut d = [0.0; 3];
    for k in 0..prob.n {
        if !in_risk_set(prob, i, k) {
            continue;
        }
        let v = weight(prob, i, k) * w[k];
        d[0] += v;
        if let Some(z) = z {
            d[1] += v * z[k];
            d[2] += v * z[k] * z[k];
        }
    }
    d
}

impl Evaluator for NaiveEvaluator<'_> {
    fn problem(&self) -> &PshProblem {
        self.problem
    }

    fn set_beta(&mut self, beta: &[f64]) -> Result<()> {
        self.problem.check_beta(beta)?;
        self.pred.set(self.problem.sorted_eta(beta));
        Ok(())
    }

    fn shift_coordinate(&mut self, j: usize, delta: f64) {
        self.pred.shift_by(self.problem.column(j), delta);
    }

    fn sorted_eta(&self) -> &[f64] {
        &self.pred.eta
    }

    fn loglik(&mut self) -> Result<f64> {
        self.pred.refresh()?;
        let prob = self.problem;
        let mut ll = 0.0;
        for &i in &prob.events {
            let d0 = risk_sums(prob, &self.pred.weights, None, i)[0];
            if !(d0 > 0.0) {
                return Err(Error::SingularRiskSet { time: prob.time[i] });
            }
            ll += self.pred.eta[i] - self.pred.shift - d0.ln();
        }
        Ok(ll)
    }

    fn coordinate(&mut self, j: usize) -> Result<CoordinateDerivs> {
        self.pred.refresh()?;
        let prob = self.problem;
        let z = prob.column(j);
        let mut score = 0.0;
        let mut neg_hess = 0.0;
        for &i in &prob.events {
            let [d0, d1, d2] = risk_sums(prob, &self.pred.weights, Some(z), i);
            if !(d0 > 0.0) {
                return Err(Error::SingularRiskSet { time: prob.time[i] });
            }
            let mean = d1 / d0;
            score += z[i] - mean;
            neg_hess += d2 / d0 - mean * mean;
        }
        Ok(CoordinateDerivs { score, neg_hess })
    }
}

/// Literal double-sum evaluation of the log-pseudo-likelihood, score and
/// negative Hessian diagonal.
pub fn naive_likelihood_suite(problem: &PshProblem, beta: &[f64]) -> Result<LikelihoodReport> {
    let mut ev = NaiveEvaluator::new(problem);
    ev.set_beta(beta)?;
    ev.report()
}

/// Direct enumeration counterpart of [`super::scan_denominators`].
pub fn naive_denominators(problem: &PshProblem, eta: &[f64], moment: Moment) -> Result<Vec<f64>> {
    if eta.len() != problem.n() {
        return Err(Error::Validation(format!(
            "linear predictor has length {}, expected {}",
            eta.len(),
            problem.n()
        )));
    }
    let eta_sorted: Vec<f64> = problem.order.iter().map(|&i| eta[i]).collect();
    let mut out = Vec::with_capacity(problem.n_events());
    for &i in &problem.events {
        let mut d = 0.0;
        for k in 0..problem.n {
            if !in_risk_set(problem, i, k) {
                continue;
            }
            let m = match moment {
                Moment::Zeroth => 1.0,
                Moment::First(j) => problem.column(j)[k],
                Moment::Second(j) => problem.column(j)[k].powi(2),
            };
            d += weight(problem, i, k) * m * eta_sorted[k].exp();
        }
        out.push(d);
    }
    Ok(out)
}
