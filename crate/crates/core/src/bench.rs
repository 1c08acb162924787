//! Wall-clock timing harness for fitter/engine combinations.
//!
//! Each cell times complete fits (ridge start included) on simulated data.
//! Data generation and the censoring Kaplan-Meier fit are done before the
//! clock starts, so scan and naive cells differ only in likelihood
//! evaluation.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;

use crate::engine::{EngineKind, PshProblem};
use crate::error::{Error, Result};
use crate::simulate::{generate_replicate, SimulationSpec};
use crate::tuning::{fit_method, FitOptions, Method};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub p: usize,
    pub methods: Vec<Method>,
    pub engines: Vec<EngineKind>,
    pub replicates: usize,
    pub seed: u64,
    /// Penalty for every fit; `None` uses `log(p)`.
    pub lambda: Option<f64>,
    pub options: FitOptions,
    /// Cell that fold changes are measured against.
    pub reference: (Method, EngineKind),
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, p: usize, methods: Vec<Method>, replicates: usize) -> Self {
        BenchConfig {
            sizes,
            p,
            methods,
            engines: vec![EngineKind::Scan, EngineKind::Naive],
            replicates,
            seed: 2024,
            lambda: None,
            options: FitOptions::default(),
            reference: (Method::Bar, EngineKind::Naive),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCell {
    pub n: usize,
    pub p: usize,
    pub method: Method,
    pub engine: EngineKind,
    pub mean_secs: f64,
    pub median_of_means_secs: f64,
    pub replicates: usize,
    /// Reference time divided by this cell's time.
    pub fold_change: Option<f64>,
    pub valid: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
    pub reference: (Method, EngineKind),
}

impl BenchReport {
    pub fn cell(&self, n: usize, method: Method, engine: EngineKind) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.method == method && c.engine == engine)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Validation(format!("writing bench CSV: {e}"));
        w.write_record([
            "n",
            "p",
            "method",
            "engine",
            "mean_secs",
            "median_of_means_secs",
            "replicates",
            "fold_change",
            "valid",
        ])
        .map_err(err)?;
        for c in &self.cells {
            w.write_record([
                c.n.to_string(),
                c.p.to_string(),
                c.method.to_string(),
                c.engine.to_string(),
                c.mean_secs.to_string(),
                c.median_of_means_secs.to_string(),
                c.replicates.to_string(),
                c.fold_change.map_or(String::new(), |f| f.to_string()),
                c.valid.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Validation(e.to_string()))
    }
}

/// Median of the means of consecutive blocks of three timings.
pub fn median_of_means(times: &[f64]) -> f64 {
    if times.is_empty() {
        return f64::NAN;
    }
    let mut means: Vec<f64> = times
        .chunks(3)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let m = means.len();
    if m % 2 == 1 {
        means[m / 2]
    } else {
        0.5 * (means[m / 2 - 1] + means[m / 2])
    }
}

/// Least-squares slope of `log(y)` on `log(x)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Times one fit of `method` with `engine` on a prepared problem.
pub fn time_fit(problem: &PshProblem, method: Method, engine: EngineKind, lambda: f64, options: &FitOptions) -> Result<f64> {
    let options = FitOptions {
        engine,
        ..options.clone()
    };
    let start = Instant::now();
    let fit = fit_method(problem, method, lambda, &options)?;
    let secs = start.elapsed().as_secs_f64();
    std::hint::black_box(fit);
    Ok(secs)
}

/// Runs the grid single-threaded. One extra warm-up replicate per cell is
/// timed and discarded.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    if config.replicates < 3 {
        return Err(Error::Validation(format!(
            "at least 3 replicates are required, got {}",
            config.replicates
        )));
    }
    let lambda = config.lambda.unwrap_or((config.p as f64).ln());
    let mut cells = Vec::new();
    for &n in &config.sizes {
        let spec = SimulationSpec::standard(n, config.p, config.seed);
        let problems = (0..=config.replicates as u64)
            .map(|r| {
                let data = generate_replicate(&spec, r)?.dataset;
                PshProblem::from_dataset(&data)
            })
            .collect::<Result<Vec<_>>>()?;
        for &method in &config.methods {
            for &engine in &config.engines {
                let mut times = Vec::with_capacity(config.replicates);
                let mut error = None;
                for (r, prob) in problems.iter().enumerate() {
                    match time_fit(prob, method, engine, lambda, &config.options) {
                        Ok(t) if r > 0 => times.push(t),
                        Ok(_) => {}
                        Err(e) => {
                            error = Some(e.to_string());
                            break;
                        }
                    }
                }
                log::info!("bench n={n} {method}/{engine}: {} runs", times.len());
                let valid = error.is_none();
                let mean = if valid {
                    times.iter().sum::<f64>() / times.len() as f64
                } else {
                    f64::NAN
                };
                cells.push(BenchCell {
                    n,
                    p: config.p,
                    method,
                    engine,
                    mean_secs: mean,
                    median_of_means_secs: if valid { median_of_means(&times) } else { f64::NAN },
                    replicates: times.len(),
                    fold_change: None,
                    valid,
                    error,
                });
            }
        }
    }
    for i in 0..cells.len() {
        let reference = cells
            .iter()
            .find(|c| c.n == cells[i].n && (c.method, c.engine) == config.reference && c.valid)
            .map(|c| c.mean_secs);
        if let Some(r) = reference {
            if cells[i].valid {
                cells[i].fold_change = Some(r / cells[i].mean_secs);
            }
        }
    }
    Ok(BenchReport {
        cells,
        reference: config.reference,
    })
}
