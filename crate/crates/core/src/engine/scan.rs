use super::{CoordinateDerivs, Evaluator, Moment, Predictor, PshProblem};
use crate::error::{Error, Result};

/// Forward-backward scan evaluator.
///
/// Tie groups are handled atomically: a group is added to the forward sum
/// before its events read it (so tied subjects share `X_k >= X_i`), and its
/// competing failures are added to the backward sum only after its events
/// read it (so they are excluded by `X_k < X_i`).
pub struct ScanEvaluator<'a> {
    problem: &'a PshProblem,
    pred: Predictor,
    buf: Vec<[f64; 3]>,
}

impl<'a> ScanEvaluator<'a> {
    pub fn new(problem: &'a PshProblem) -> Self {
        ScanEvaluator {
            problem,
            pred: Predictor::new(problem.n()),
            buf: vec![[0.0; 3]; problem.n_events()],
        }
    }
}

impl Evaluator for ScanEvaluator<'_> {
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
        let w = &self.pred.weights;
        let buf = &mut self.buf;

        let mut s0 = 0.0;
        for (grp, evs) in prob.groups.iter().zip(&prob.group_events) {
            for k in grp.clone() {
                s0 += w[k];
            }
            for e in evs.clone() {
                buf[e][0] = s0;
            }
        }
        let mut b0 = 0.0;
        for (grp, evs) in prob.groups.iter().zip(&prob.group_events).rev() {
            for e in evs.clone() {
                buf[e][0] += prob.event_g[e] * b0;
            }
            for k in grp.clone() {
                b0 += w[k] * prob.inv_g_competing[k];
            }
        }

        let eta = &self.pred.eta;
        let shift = self.pred.shift;
        let mut ll = 0.0;
        for (e, &k) in prob.events.iter().enumerate() {
            let d0 = buf[e][0];
            if !(d0 > 0.0) {
                return Err(Error::SingularRiskSet { time: prob.time[k] });
            }
            ll += (eta[k] - shift) - d0.ln();
        }
        Ok(ll)
    }

    fn coordinate(&mut self, j: usize) -> Result<CoordinateDerivs> {
        self.pred.refresh()?;
        let prob = self.problem;
        let w = &self.pred.weights;
        let z = prob.column(j);
        let buf = &mut self.buf;

        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for (grp, evs) in prob.groups.iter().zip(&prob.group_events) {
            for k in grp.clone() {
                let wk = w[k];
                let wz = wk * z[k];
                s0 += wk;
                s1 += wz;
                s2 += wz * z[k];
            }
            for e in evs.clone() {
                buf[e] = [s0, s1, s2];
            }
        }

        let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
        for (grp, evs) in prob.groups.iter().zip(&prob.group_events).rev() {
            for e in evs.clone() {
                let gi = prob.event_g[e];
                let d = &mut buf[e];
                d[0] += gi * b0;
                d[1] += gi * b1;
                d[2] += gi * b2;
            }
            for k in grp.clone() {
                let v = w[k] * prob.inv_g_competing[k];
                let vz = v * z[k];
                b0 += v;
                b1 += vz;
                b2 += vz * z[k];
            }
        }

        let mut score = 0.0;
        let mut neg_hess = 0.0;
        for (e, &k) in prob.events.iter().enumerate() {
            let [d0, d1, d2] = buf[e];
            if !(d0 > 0.0) {
                return Err(Error::SingularRiskSet { time: prob.time[k] });
            }
            let mean = d1 / d0;
            score += z[k] - mean;
            neg_hess += d2 / d0 - mean * mean;
        }
        Ok(CoordinateDerivs { score, neg_hess })
    }
}

/// Weighted risk-set sums `sum_{k in R_i} w_ik m_k exp(eta_k)` for every
/// cause-1 failure, computed with one forward and one backward pass.
///
/// `eta` is in record order; the output follows
/// [`PshProblem::event_records`].
pub fn scan_denominators(problem: &PshProblem, eta: &[f64], moment: Moment) -> Result<Vec<f64>> {
    if eta.len() != problem.n() {
        return Err(Error::Validation(format!(
            "linear predictor has length {}, expected {}",
            eta.len(),
            problem.n()
        )));
    }
    let mut pred = Predictor::new(problem.n());
    pred.set(problem.order.iter().map(|&i| eta[i]).collect());
    pred.refresh()?;
    let ones;
    let (col, power) = match moment {
        Moment::Zeroth => {
            ones = vec![1.0; problem.n()];
            (&ones[..], 1)
        }
        Moment::First(j) => (problem.column(j), 1),
        Moment::Second(j) => (problem.column(j), 2),
    };
    let m = |k: usize| col[k].powi(power);
    let w = &pred.weights;

    let mut out = vec![0.0; problem.n_events()];
    let mut s = 0.0;
    for (grp, evs) in problem.groups.iter().zip(&problem.group_events) {
        for k in grp.clone() {
            s += w[k] * m(k);
        }
        for e in evs.clone() {
            out[e] = s;
        }
    }
    let mut b = 0.0;
    for (grp, evs) in problem.groups.iter().zip(&problem.group_events).rev() {
        for e in evs.clone() {
            out[e] += problem.event_g[e] * b;
        }
        for k in grp.clone() {
            b += w[k] * problem.inv_g_competing[k] * m(k);
        }
    }

    let scale = pred.shift.exp();
    if !scale.is_finite() {
        return Err(Error::Overflow {
            max_abs_eta: pred.shift.abs(),
        });
    }
    for (e, v) in out.iter_mut().enumerate() {
        if moment == Moment::Zeroth && !(*v > 0.0) {
            return Err(Error::SingularRiskSet {
                time: problem.time[problem.events[e]],
            });
        }
        *v *= scale;
    }
    Ok(out)
}
