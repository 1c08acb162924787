//! Competing-risks data generator and selection metrics.
//!
//! Covariates are mean-zero Gaussian with AR(1) correlation
//! `corr(z_i, z_j) = rho^|i-j|`. The cause-1 cumulative incidence is
//! `F1(t; z) = 1 - [1 - pi (1 - e^-t)]^exp(z'beta1)`, so
//! `Pr(cause 1 | z) = 1 - (1 - pi)^exp(z'beta1)`. Cause-2 failures are
//! exponential with rate `exp(-z'beta1)`, and censoring is `U(0, u_max)`.
//!
//! Every replicate draws from its own ChaCha8 stream (`seed`, `replicate`),
//! so replicates can be generated in parallel and reproduced individually.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Cause, CompetingRisksDataset, SubjectRecord};
use crate::error::{Error, Result};

/// Nonzero leading block of the standard cause-1 coefficient vector; the
/// remaining `p - 10` entries are zero.
pub const STANDARD_BETA1_HEAD: [f64; 10] = [0.40, 0.45, 0.0, 0.50, 0.0, 0.60, 0.75, 0.0, 0.0, 0.80];

/// Censoring bound giving roughly 32% censoring under the standard design.
pub const STANDARD_U_MAX: f64 = 1.42;

pub fn standard_beta1(p: usize) -> Vec<f64> {
    (0..p)
        .map(|j| STANDARD_BETA1_HEAD.get(j).copied().unwrap_or(0.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    pub beta1: Vec<f64>,
    pub pi: f64,
    pub u_max: f64,
    pub seed: u64,
}

impl SimulationSpec {
    /// `rho = 0.5`, `pi = 0.5`, standard coefficients and censoring bound.
    pub fn standard(n: usize, p: usize, seed: u64) -> Self {
        SimulationSpec {
            n,
            p,
            rho: 0.5,
            beta1: standard_beta1(p),
            pi: 0.5,
            u_max: STANDARD_U_MAX,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Validation(m));
        if self.n == 0 {
            return fail("n must be positive".into());
        }
        if self.p == 0 {
            return fail("p must be positive".into());
        }
        if self.beta1.len() != self.p {
            return fail(format!("beta1 has length {}, expected p = {}", self.beta1.len(), self.p));
        }
        if self.beta1.iter().any(|b| !b.is_finite()) {
            return fail("beta1 must be finite".into());
        }
        if !(0.0..1.0).contains(&self.rho) {
            return fail(format!("rho must lie in [0, 1), got {}", self.rho));
        }
        if !(self.pi > 0.0 && self.pi <= 1.0) {
            return fail(format!("pi must lie in (0, 1], got {}", self.pi));
        }
        if !(self.u_max > 0.0 && self.u_max.is_finite()) {
            return fail(format!("u_max must be positive, got {}", self.u_max));
        }
        Ok(())
    }
}

/// `Pr(cause 1 | z)` for linear predictor `eta = z'beta1`.
pub fn cause1_probability(eta: f64, pi: f64) -> f64 {
    -(eta.exp() * (1.0 - pi).ln()).exp_m1()
}

/// Cause-1 cumulative incidence `F1(t; z)`.
pub fn cause1_cif(t: f64, eta: f64, pi: f64) -> f64 {
    let base = 1.0 - pi * (-(-t).exp_m1());
    1.0 - base.powf(eta.exp())
}

/// Failure time for a cause-1 subject: solves `F1(t; z) = u * Pr(cause 1 | z)`
/// for `u` in `(0, 1)`.
pub fn cause1_inverse_time(u: f64, eta: f64, pi: f64) -> f64 {
    let p1 = cause1_probability(eta, pi);
    // 1 - (1 - u p1)^exp(-eta)
    let q = -((-eta).exp() * (-u * p1).ln_1p()).exp_m1();
    -(-q / pi).ln_1p()
}

/// One latent subject before censoring is applied.
#[derive(Debug, Clone)]
struct Latent {
    covariates: Vec<f64>,
    cause: Cause,
    time: f64,
    censor_u: f64,
}

fn rng_for(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

fn draw_latent(spec: &SimulationSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<Latent> {
    let innov = (1.0 - spec.rho * spec.rho).sqrt();
    (0..n)
        .map(|_| {
            let mut z = Vec::with_capacity(spec.p);
            let mut prev = 0.0;
            for j in 0..spec.p {
                let e: f64 = rng.sample(StandardNormal);
                prev = if j == 0 { e } else { spec.rho * prev + innov * e };
                z.push(prev);
            }
            let eta: f64 = z.iter().zip(&spec.beta1).map(|(a, b)| a * b).sum();
            let p1 = cause1_probability(eta, spec.pi);
            let (cause, time) = if rng.random::<f64>() < p1 {
                let u: f64 = rng.random();
                (Cause::Cause1, cause1_inverse_time(u, eta, spec.pi))
            } else {
                let e: f64 = rng.sample(Exp1);
                (Cause::Cause2, e * eta.exp())
            };
            Latent {
                covariates: z,
                cause,
                time,
                censor_u: rng.random(),
            }
        })
        .collect()
}

/// Generated sample together with the uncensored truth.
#[derive(Debug, Clone)]
pub struct Simulated {
    pub dataset: CompetingRisksDataset,
    pub latent_causes: Vec<Cause>,
    pub latent_times: Vec<f64>,
}

impl Simulated {
    pub fn censoring_rate(&self) -> f64 {
        self.dataset.count_cause(Cause::Censored) as f64 / self.dataset.n() as f64
    }

    /// Share of subjects whose (uncensored) failure is from cause 1.
    pub fn latent_cause1_rate(&self) -> f64 {
        self.latent_causes.iter().filter(|&&c| c == Cause::Cause1).count() as f64
            / self.latent_causes.len() as f64
    }

    /// Share of subjects observed to fail from cause 1.
    pub fn observed_cause1_rate(&self) -> f64 {
        self.dataset.count_cause(Cause::Cause1) as f64 / self.dataset.n() as f64
    }
}

pub fn generate(spec: &SimulationSpec) -> Result<CompetingRisksDataset> {
    Ok(generate_replicate(spec, 0)?.dataset)
}

pub fn generate_replicate(spec: &SimulationSpec, replicate: u64) -> Result<Simulated> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, replicate);
    let latent = draw_latent(spec, spec.n, &mut rng);
    let mut latent_causes = Vec::with_capacity(spec.n);
    let mut latent_times = Vec::with_capacity(spec.n);
    let records = latent
        .into_iter()
        .map(|l| {
            latent_causes.push(l.cause);
            latent_times.push(l.time);
            let c = l.censor_u * spec.u_max;
            let (time, cause) = if l.time <= c {
                (l.time, l.cause)
            } else {
                (c, Cause::Censored)
            };
            SubjectRecord {
                time,
                cause,
                covariates: l.covariates,
            }
        })
        .collect();
    Ok(Simulated {
        dataset: CompetingRisksDataset::new(records, None)?,
        latent_causes,
        latent_times,
    })
}

/// Finds `u_max` whose censoring rate on a pilot sample is within
/// `tolerance` of `target`. The pilot reuses one set of latent draws, so the
/// rate is monotone in `u_max` and bisection applies.
pub fn calibrate_u_max(
    spec: &SimulationSpec,
    target: f64,
    pilot_n: usize,
    tolerance: f64,
) -> Result<f64> {
    spec.validate()?;
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Validation(format!("target censoring {target} must be in (0, 1)")));
    }
    let mut rng = rng_for(spec.seed, u64::MAX);
    let latent = draw_latent(spec, pilot_n.max(1), &mut rng);
    let rate = |u_max: f64| {
        latent.iter().filter(|l| l.censor_u * u_max < l.time).count() as f64 / latent.len() as f64
    };
    let (mut lo, mut hi) = (1e-6, 1.0);
    while rate(hi) > target {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Validation(format!("censoring rate {target} is unreachable")));
        }
    }
    let mut mid = hi;
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let r = rate(mid);
        if (r - target).abs() <= tolerance {
            return Ok(mid);
        }
        if r > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionMetrics {
    /// Squared estimation error `sum_j (beta_hat_j - beta_j)^2`.
    pub msb: f64,
    pub fn_count: f64,
    pub fp_count: f64,
    /// Support similarity `|S_hat ∩ S| / sqrt(|S_hat| |S|)`, 0 when either is
    /// empty.
    pub sm: f64,
}

pub fn evaluate_selection(fit: &[f64], truth: &[f64]) -> Result<SelectionMetrics> {
    if fit.len() != truth.len() {
        return Err(Error::Validation(format!(
            "fit has {} coefficients, truth has {}",
            fit.len(),
            truth.len()
        )));
    }
    let mut msb = 0.0;
    let (mut fnc, mut fpc, mut both, mut n_fit, mut n_true) = (0, 0, 0, 0, 0);
    for (&b, &t) in fit.iter().zip(truth) {
        msb += (b - t).powi(2);
        let (sel, real) = (b != 0.0, t != 0.0);
        n_fit += sel as usize;
        n_true += real as usize;
        both += (sel && real) as usize;
        fnc += (!sel && real) as usize;
        fpc += (sel && !real) as usize;
    }
    let sm = if n_fit == 0 || n_true == 0 {
        0.0
    } else {
        both as f64 / ((n_fit * n_true) as f64).sqrt()
    };
    Ok(SelectionMetrics {
        msb,
        fn_count: fnc as f64,
        fp_count: fpc as f64,
        sm,
    })
}

/// Averages metrics over replicates.
pub fn mean_metrics(all: &[SelectionMetrics]) -> SelectionMetrics {
    let k = all.len().max(1) as f64;
    let sum = |f: fn(&SelectionMetrics) -> f64| all.iter().map(f).sum::<f64>() / k;
    SelectionMetrics {
        msb: sum(|m| m.msb),
        fn_count: sum(|m| m.fn_count),
        fp_count: sum(|m| m.fp_count),
        sm: sum(|m| m.sm),
    }
}
