// Shared fixtures and an independent dense implementation of the
// pseudo-likelihood used as an oracle by several test targets.
#![allow(dead_code)]

use fgscan_core::{Cause, CompetingRisksDataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random mixed-cause dataset. Times are rounded to `grid` decimals when
/// given, which produces ties.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    n: usize,
    p: usize,
    censor_frac: f64,
    grid: Option<i32>,
) -> CompetingRisksDataset {
    let mut times = Vec::with_capacity(n);
    let mut causes = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut t: f64 = rng.random_range(0.01..3.0);
        if let Some(d) = grid {
            let s = 10f64.powi(d);
            t = (t * s).round().max(1.0) / s;
        }
        times.push(t);
        causes.push(if rng.random::<f64>() < censor_frac {
            Cause::Censored
        } else if rng.random::<f64>() < 0.6 {
            Cause::Cause1
        } else {
            Cause::Cause2
        });
        rows.push((0..p).map(|_| StandardNormal.sample(rng)).collect::<Vec<f64>>());
    }
    CompetingRisksDataset::from_parts(&times, &causes, &rows).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Left-continuous censoring survival `Pr(C >= X_i)` for each subject,
/// computed by direct enumeration.
pub fn censoring_at_subjects(data: &CompetingRisksDataset) -> Vec<f64> {
    let recs = data.records();
    let mut cens: Vec<f64> = recs
        .iter()
        .filter(|r| r.cause == Cause::Censored)
        .map(|r| r.time)
        .collect();
    cens.sort_by(f64::total_cmp);
    cens.dedup();
    recs.iter()
        .map(|r| {
            let mut g = 1.0;
            for &c in cens.iter().filter(|&&c| c < r.time) {
                let d = recs.iter().filter(|s| s.time == c && s.cause == Cause::Censored).count();
                let at_risk = recs.iter().filter(|s| s.time > c).count() + d;
                g *= 1.0 - d as f64 / at_risk as f64;
            }
            g
        })
        .collect()
}

pub struct Dense {
    pub loglik: f64,
    pub grad: Vec<f64>,
    /// Negative Hessian, row-major `p x p`.
    pub info: Vec<f64>,
}

/// Loglik, full gradient and full negative Hessian by double summation.
pub fn dense_psh(data: &CompetingRisksDataset, g: &[f64], beta: &[f64]) -> Dense {
    let recs = data.records();
    let p = beta.len();
    let eta: Vec<f64> = recs
        .iter()
        .map(|r| r.covariates.iter().zip(beta).map(|(z, b)| z * b).sum())
        .collect();
    let mut out = Dense {
        loglik: 0.0,
        grad: vec![0.0; p],
        info: vec![0.0; p * p],
    };
    for (i, ri) in recs.iter().enumerate() {
        if ri.cause != Cause::Cause1 {
            continue;
        }
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; p * p];
        for (k, rk) in recs.iter().enumerate() {
            let inside = rk.time >= ri.time || rk.cause == Cause::Cause2;
            if !inside {
                continue;
            }
            let gmin = if rk.time < ri.time { g[k] } else { g[i] };
            let w = g[i] / gmin * eta[k].exp();
            s0 += w;
            for a in 0..p {
                s1[a] += w * rk.covariates[a];
                for b in 0..p {
                    s2[a * p + b] += w * rk.covariates[a] * rk.covariates[b];
                }
            }
        }
        out.loglik += eta[i] - s0.ln();
        for a in 0..p {
            out.grad[a] += ri.covariates[a] - s1[a] / s0;
            for b in 0..p {
                out.info[a * p + b] += s2[a * p + b] / s0 - s1[a] * s1[b] / (s0 * s0);
            }
        }
    }
    out
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs())).unwrap();
        for k in 0..n {
            a.swap(c * n + k, piv * n + k);
        }
        b.swap(c, piv);
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r * n + k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r * n + r];
    }
    x
}

/// Unpenalized maximizer by damped full Newton.
pub fn newton_fit(data: &CompetingRisksDataset) -> Vec<f64> {
    let g = censoring_at_subjects(data);
    let mut beta = vec![0.0; data.p()];
    for _ in 0..100 {
        let d = dense_psh(data, &g, &beta);
        let step = solve(d.info.clone(), d.grad.clone());
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            if dense_psh(data, &g, &cand).loglik >= d.loglik - 1e-12 || t < 1e-8 {
                beta = cand;
                break;
            }
            t *= 0.5;
        }
        if step.iter().map(|s| s * s).sum::<f64>().sqrt() < 1e-12 {
            break;
        }
    }
    beta
}

/// Pearson correlation of two equal-length columns.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    sab / (saa * sbb).sqrt()
}

/// Right-hand side of the grouping bound for a pair with correlation `r`.
pub fn grouping_bound(lambda: f64, n: usize, events: usize, r: f64) -> f64 {
    let n = n as f64;
    let e = events as f64;
    (2.0 * (n - 1.0) * (1.0 - r).max(0.0)).sqrt() * (n * (1.0 + e).powi(2)).sqrt() / lambda
}
