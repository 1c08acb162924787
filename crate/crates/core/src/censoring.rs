//! Kaplan-Meier estimate of the censoring survival function
//! `G(t) = Pr(C >= t)`, the source of the inverse-probability-of-censoring
//! weights used by the subdistribution risk sets.

use serde::Serialize;

use crate::data::{Cause, CompetingRisksDataset};
use crate::error::{Error, Result};

/// Step function `G(t) = Pr(C >= t)`.
///
/// `G` is left-continuous: at a jump time `c` the value is still the one
/// from before the drop, since subjects censored at `c` satisfy `C >= c`.
#[derive(Debug, Clone, Serialize)]
pub struct CensoringSurvival {
    jump_times: Vec<f64>,
    values: Vec<f64>,
    per_subject: Vec<f64>,
}

impl CensoringSurvival {
    /// Distinct censoring times, strictly increasing.
    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    /// Value of `G` just after each jump.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `G(X_i)` for every record, in record order.
    pub fn per_subject(&self) -> &[f64] {
        &self.per_subject
    }

    /// Evaluates `G(t)`: the product of the drops at censoring times strictly
    /// before `t`.
    pub fn eval(&self, t: f64) -> f64 {
        let k = self.jump_times.partition_point(|&c| c < t);
        if k == 0 {
            1.0
        } else {
            self.values[k - 1]
        }
    }
}

/// Product-limit estimate treating censoring (cause 0) as the event and
/// failures of either cause as censored observations of `C`.
///
/// Failures tied with a censoring time leave the censoring risk set first,
/// so the risk set at censoring time `c` is `{X > c}` plus the subjects
/// censored at `c`.
pub fn fit_censoring_km(dataset: &CompetingRisksDataset) -> CensoringSurvival {
    let n = dataset.n();
    let records = dataset.records();
    let order = dataset.sorted_index();
    let mut jump_times = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut seen = 0usize;
    for group in dataset.tie_groups().iter().rev() {
        let len = group.len();
        let censored = order[group.clone()]
            .iter()
            .filter(|&&i| records[i].cause == Cause::Censored)
            .count();
        if censored > 0 {
            let at_risk = n - seen - len + censored;
            surv *= 1.0 - censored as f64 / at_risk as f64;
            jump_times.push(records[order[group.start]].time);
            values.push(surv);
        }
        seen += len;
    }
    let mut out = CensoringSurvival {
        jump_times,
        values,
        per_subject: Vec::new(),
    };
    out.per_subject = records.iter().map(|r| out.eval(r.time)).collect();
    out
}

/// `w_ik = G(X_i) / G(min(X_i, X_k))`, the weight subject `k` carries in the
/// risk set of event `i`.
pub fn weight_ratio(
    censoring: &CensoringSurvival,
    dataset: &CompetingRisksDataset,
    i: usize,
    k: usize,
) -> Result<f64> {
    let records = dataset.records();
    let (ti, tk) = (records[i].time, records[k].time);
    let g = censoring.per_subject();
    let denom = if tk < ti { g[k] } else { g[i] };
    if denom <= 0.0 {
        return Err(Error::WeightUndefined { time: ti.min(tk) });
    }
    Ok(g[i] / denom)
}
