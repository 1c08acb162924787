//! Fine-Gray log-pseudo-likelihood, score and negative Hessian diagonal.
//!
//! Two evaluators share one [`PshProblem`]:
//!
//! * [`ScanEvaluator`] splits every weighted risk-set sum into a
//!   descending-time cumulative sum over `{X_k >= X_i}` and an ascending-time
//!   cumulative sum over competing failures with `X_k < X_i` scaled by
//!   `1/G(X_k)`, so each quantity costs `O(n)`.
//! * [`NaiveEvaluator`] enumerates each risk set directly, `O(n^2)`. It is the
//!   reference the scan is checked against and the baseline for timings.
//!
//! The negative Hessian diagonal is reported as the non-negative weighted
//! variance sum, i.e. `-d^2 l / d beta_j^2`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::censoring::CensoringSurvival;
use crate::data::{Cause, CompetingRisksDataset};
use crate::error::{Error, Result};

mod naive;
mod scan;

pub use naive::{naive_denominators, naive_likelihood_suite, NaiveEvaluator};
pub use scan::{scan_denominators, ScanEvaluator};

/// Which implementation evaluates the likelihood pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Scan,
    Naive,
}

impl std::str::FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "scan" => Ok(EngineKind::Scan),
            "naive" => Ok(EngineKind::Naive),
            other => Err(format!("unknown engine '{other}' (expected scan or naive)")),
        }
    }
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::Scan => "scan",
            EngineKind::Naive => "naive",
        })
    }
}

/// Multiplier applied to each risk-set term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moment {
    Zeroth,
    First(usize),
    Second(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodReport {
    pub loglik: f64,
    pub score: Vec<f64>,
    pub neg_hess_diag: Vec<f64>,
    /// Linear predictor in record order.
    pub eta: Vec<f64>,
}

/// Dataset and censoring weights laid out in descending-time order for the
/// evaluators.
#[derive(Debug, Clone)]
pub struct PshProblem {
    n: usize,
    p: usize,
    order: Vec<usize>,
    time: Vec<f64>,
    cause: Vec<Cause>,
    g: Vec<f64>,
    /// `1/G(X_k)` for competing failures, zero for everyone else.
    inv_g_competing: Vec<f64>,
    groups: Vec<Range<usize>>,
    /// For each tie group, its slice of `events`.
    group_events: Vec<Range<usize>>,
    /// Sorted positions of cause-1 failures.
    events: Vec<usize>,
    event_g: Vec<f64>,
    columns: Vec<f64>,
}

impl PshProblem {
    pub fn new(dataset: &CompetingRisksDataset, censoring: &CensoringSurvival) -> Result<Self> {
        let n = dataset.n();
        let p = dataset.p();
        if censoring.per_subject().len() != n {
            return Err(Error::Validation(
                "censoring estimate was fitted on a different dataset".into(),
            ));
        }
        let order = dataset.sorted_index().to_vec();
        let records = dataset.records();
        let gs = censoring.per_subject();
        let time: Vec<f64> = order.iter().map(|&i| records[i].time).collect();
        let cause: Vec<Cause> = order.iter().map(|&i| records[i].cause).collect();
        let g: Vec<f64> = order.iter().map(|&i| gs[i]).collect();

        let mut inv_g_competing = vec![0.0; n];
        for k in 0..n {
            if cause[k] == Cause::Cause2 {
                if g[k] <= 0.0 {
                    return Err(Error::WeightUndefined { time: time[k] });
                }
                inv_g_competing[k] = 1.0 / g[k];
            }
        }

        let groups = dataset.tie_groups().to_vec();
        let mut events = Vec::new();
        let mut group_events = Vec::with_capacity(groups.len());
        for grp in &groups {
            let start = events.len();
            events.extend(grp.clone().filter(|&k| cause[k] == Cause::Cause1));
            group_events.push(start..events.len());
        }
        let event_g = events.iter().map(|&k| g[k]).collect();

        let mut columns = vec![0.0; n * p];
        for j in 0..p {
            let src = dataset.column(j);
            let dst = &mut columns[j * n..(j + 1) * n];
            for (d, &i) in dst.iter_mut().zip(&order) {
                *d = src[i];
            }
        }

        Ok(PshProblem {
            n,
            p,
            order,
            time,
            cause,
            g,
            inv_g_competing,
            groups,
            group_events,
            events,
            event_g,
            columns,
        })
    }

    /// Convenience constructor that fits the censoring estimate itself.
    pub fn from_dataset(dataset: &CompetingRisksDataset) -> Result<Self> {
        let censoring = crate::censoring::fit_censoring_km(dataset);
        Self::new(dataset, &censoring)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn n_events(&self) -> usize {
        self.events.len()
    }

    /// Record indices of the cause-1 failures, in the order the evaluators
    /// report per-event quantities (descending time).
    pub fn event_records(&self) -> Vec<usize> {
        self.events.iter().map(|&k| self.order[k]).collect()
    }

    /// Covariate column `j` in descending-time order.
    pub(crate) fn column(&self, j: usize) -> &[f64] {
        &self.columns[j * self.n..(j + 1) * self.n]
    }

    /// Linear predictor in descending-time order.
    pub(crate) fn sorted_eta(&self, beta: &[f64]) -> Vec<f64> {
        let mut eta = vec![0.0; self.n];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (e, z) in eta.iter_mut().zip(self.column(j)) {
                    *e += b * z;
                }
            }
        }
        eta
    }

    pub(crate) fn to_record_order(&self, sorted: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (pos, &i) in self.order.iter().enumerate() {
            out[i] = sorted[pos];
        }
        out
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.p {
            return Err(Error::Validation(format!(
                "coefficient vector has length {}, expected {}",
                beta.len(),
                self.p
            )));
        }
        Ok(())
    }

    /// Log-pseudo-likelihood at `beta` via the linear-time scan.
    pub fn loglik(&self, beta: &[f64]) -> Result<f64> {
        let mut ev = ScanEvaluator::new(self);
        ev.set_beta(beta)?;
        ev.loglik()
    }

    /// Full report at `beta` via the linear-time scan.
    pub fn score_and_neg_hess_diag(&self, beta: &[f64]) -> Result<LikelihoodReport> {
        let mut ev = ScanEvaluator::new(self);
        ev.set_beta(beta)?;
        ev.report()
    }

    pub fn evaluator(&self, kind: EngineKind) -> Box<dyn Evaluator + '_> {
        match kind {
            EngineKind::Scan => Box::new(ScanEvaluator::new(self)),
            EngineKind::Naive => Box::new(NaiveEvaluator::new(self)),
        }
    }
}

/// Score and negative Hessian diagonal for one coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateDerivs {
    pub score: f64,
    pub neg_hess: f64,
}

/// Stateful likelihood evaluation around a current coefficient vector.
///
/// Implementations keep the linear predictor and its exponentials so that
/// coordinate-wise solvers can move one coefficient at a time in `O(n)`.
pub trait Evaluator {
    fn problem(&self) -> &PshProblem;

    /// Recomputes the linear predictor from scratch.
    fn set_beta(&mut self, beta: &[f64]) -> Result<()>;

    /// Adds `delta * z_j` to the linear predictor.
    fn shift_coordinate(&mut self, j: usize, delta: f64);

    /// Linear predictor in descending-time order.
    fn sorted_eta(&self) -> &[f64];

    fn loglik(&mut self) -> Result<f64>;

    fn coordinate(&mut self, j: usize) -> Result<CoordinateDerivs>;

    fn report(&mut self) -> Result<LikelihoodReport> {
        let loglik = self.loglik()?;
        let p = self.problem().p();
        let mut score = Vec::with_capacity(p);
        let mut neg_hess_diag = Vec::with_capacity(p);
        for j in 0..p {
            let d = self.coordinate(j)?;
            score.push(d.score);
            neg_hess_diag.push(d.neg_hess);
        }
        let eta = self.problem().to_record_order(self.sorted_eta());
        Ok(LikelihoodReport {
            loglik,
            score,
            neg_hess_diag,
            eta,
        })
    }
}

/// Linear predictor plus `exp(eta - max eta)`, refreshed lazily.
#[derive(Debug, Clone)]
pub(crate) struct Predictor {
    pub eta: Vec<f64>,
    pub weights: Vec<f64>,
    pub shift: f64,
    stale: bool,
}

impl Predictor {
    pub fn new(n: usize) -> Self {
        Predictor {
            eta: vec![0.0; n],
            weights: vec![1.0; n],
            shift: 0.0,
            stale: false,
        }
    }

    pub fn set(&mut self, eta: Vec<f64>) {
        self.eta = eta;
        self.stale = true;
    }

    pub fn shift_by(&mut self, column: &[f64], delta: f64) {
        if delta == 0.0 {
            return;
        }
        for (e, z) in self.eta.iter_mut().zip(column) {
            *e += delta * z;
        }
        self.stale = true;
    }

    /// Re-exponentiates after centering by the maximum.
    pub fn refresh(&mut self) -> Result<()> {
        if !self.stale {
            return Ok(());
        }
        let mut max = f64::NEG_INFINITY;
        let mut finite = true;
        for &e in &self.eta {
            finite &= e.is_finite();
            max = max.max(e);
        }
        if !finite {
            let max_abs_eta = self.eta.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
            return Err(Error::Overflow { max_abs_eta });
        }
        self.shift = max;
        for (w, &e) in self.weights.iter_mut().zip(&self.eta) {
            *w = (e - max).exp();
        }
        self.stale = false;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> CompetingRisksDataset {
        // times (3,2,1), causes (1,2,1), no censoring
        CompetingRisksDataset::from_parts(
            &[3.0, 2.0, 1.0],
            &[Cause::Cause1, Cause::Cause2, Cause::Cause1],
            &[vec![0.3], vec![-1.0], vec![0.8]],
        )
        .unwrap()
    }

    #[test]
    fn problem_layout() {
        let d = toy();
        let prob = PshProblem::from_dataset(&d).unwrap();
        assert_eq!(prob.n_events(), 2);
        assert_eq!(prob.event_records(), vec![0, 2]);
        assert_eq!(prob.column(0), &[0.3, -1.0, 0.8]);
    }

    #[test]
    fn beta_length_checked() {
        let d = toy();
        let prob = PshProblem::from_dataset(&d).unwrap();
        assert!(matches!(prob.loglik(&[0.0, 1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn overflow_reported() {
        let d = toy();
        let prob = PshProblem::from_dataset(&d).unwrap();
        assert!(matches!(prob.loglik(&[f64::INFINITY]), Err(Error::Overflow { .. })));
    }

    #[test]
    fn huge_beta_is_stable() {
        let d = toy();
        let prob = PshProblem::from_dataset(&d).unwrap();
        let ll = prob.loglik(&[900.0]).unwrap();
        assert!(ll.is_finite());
        assert!(ll <= 0.0);
    }
}
