use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use fgscan_core::bar::SparseFit;
use fgscan_core::bench::{run_bench, BenchConfig};
use fgscan_core::data::unstandardize_coefficients;
use fgscan_core::simulate::{calibrate_u_max, generate_replicate, standard_beta1};
use fgscan_core::tuning::{fit_method, method_grid, FitOptions};
use fgscan_core::{
    bic_score, fit_censoring_km, fit_ridge, grid_search, load_csv, naive_likelihood_suite,
    CensoringSurvival, CompetingRisksDataset, CsvSchema, EngineKind, LikelihoodReport, Method,
    PshProblem, SimulationSpec,
};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cli::{
    column_ref, covariate_refs, BenchArgs, CheckArgs, FitArgs, InputArgs, LambdaArg, Preset,
    ScanArg, SimulateArgs, SolverArgs, TuneArgs, UmaxArg,
};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
const CHECK_TOL: f64 = 1e-8;
const NAIVE_WARN_N: usize = 50_000;

struct Loaded {
    /// Dataset the model is fitted on (standardized when requested).
    data: CompetingRisksDataset,
    scales: Option<Vec<f64>>,
}

fn load(input: &InputArgs) -> CliResult<Loaded> {
    let schema = CsvSchema {
        has_header: !input.no_header,
        time: column_ref(&input.time_col).map_err(CliError::Usage)?,
        status: column_ref(&input.status_col).map_err(CliError::Usage)?,
        covariates: input
            .covariates
            .as_deref()
            .map(covariate_refs)
            .transpose()
            .map_err(CliError::Usage)?,
        collapse_causes: input.collapse_causes,
    };
    let raw = load_csv(&input.data, &schema)?;
    log::info!(
        "loaded {} rows, {} covariates, {} events of interest",
        raw.n(),
        raw.p(),
        raw.count_cause(fgscan_core::Cause::Cause1)
    );
    if input.standardize {
        let (data, _, scales) = raw.standardize_covariates()?;
        Ok(Loaded {
            data,
            scales: Some(scales),
        })
    } else {
        Ok(Loaded { data: raw, scales: None })
    }
}

fn fit_options(s: &SolverArgs) -> CliResult<FitOptions> {
    if !(s.tol.is_finite() && s.tol > 0.0) {
        return Err(CliError::Validation(format!("--tol must be positive, got {}", s.tol)));
    }
    if s.max_iter == 0 {
        return Err(CliError::Validation("--max-iter must be at least 1".into()));
    }
    Ok(FitOptions {
        xi: match s.xi {
            Preset::LogP => None,
            Preset::Value(v) => Some(v),
        },
        tol: s.tol,
        max_iter: s.max_iter,
        sweep_mode: s.sweep_mode.into(),
        gamma: s.gamma,
        engine: s.engine.into(),
        bic_n: s.bic_n.into(),
        warm_start: true,
    })
}

fn warn_if_naive_is_slow(engine: EngineKind, n: usize) {
    if engine == EngineKind::Naive && n > NAIVE_WARN_N {
        log::warn!("the naive engine is quadratic in n; {n} rows may take a long time");
    }
}

fn open_out(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::io(p, e))?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> CliResult<()> {
    let target = path.map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf);
    let mut out = open_out(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| CliError::io(target, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Internal(format!("{other:?}")),
    }
}

fn dump_censoring(km: &CensoringSurvival, path: &Path) -> CliResult<()> {
    let err = csv_err(path);
    let mut w = csv::Writer::from_path(path).map_err(&err)?;
    w.write_record(["time", "survival"]).map_err(&err)?;
    for (t, g) in km.jump_times().iter().zip(km.values()) {
        w.write_record([t.to_string(), g.to_string()]).map_err(&err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
struct Coefficients {
    covariates: Vec<String>,
    coefficients: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients_standardized: Option<Vec<f64>>,
    support: Vec<String>,
}

fn coefficients(data: &CompetingRisksDataset, beta: &[f64], scales: Option<&[f64]>) -> Coefficients {
    let names = data.covariate_names().to_vec();
    let support = beta
        .iter()
        .zip(&names)
        .filter(|(b, _)| **b != 0.0)
        .map(|(_, n)| n.clone())
        .collect();
    Coefficients {
        coefficients: match scales {
            Some(s) => unstandardize_coefficients(beta, s),
            None => beta.to_vec(),
        },
        coefficients_standardized: scales.map(|_| beta.to_vec()),
        covariates: names,
        support,
    }
}

#[derive(Serialize)]
struct FitOutput {
    schema_version: u32,
    command: &'static str,
    method: Method,
    engine: EngineKind,
    lambda: f64,
    lambda_selected_by_bic: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    n: usize,
    p: usize,
    events: usize,
    #[serde(flatten)]
    coefficients: Coefficients,
    loglik: f64,
    bic: f64,
    iterations: usize,
    converged: bool,
    elapsed_secs: f64,
}

fn check_converged(converged: bool, strict: bool, what: &str) -> CliResult<()> {
    if converged {
        return Ok(());
    }
    if strict {
        return Err(CliError::NotConverged(format!("{what} did not converge")));
    }
    log::warn!("{what} did not converge; reporting the last iterate");
    Ok(())
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let options = fit_options(&args.solver)?;
    let method: Method = args.solver.method.into();
    let data = &loaded.data;
    warn_if_naive_is_slow(options.engine, data.n());
    let km = fit_censoring_km(data);
    if let Some(path) = &args.dump_censoring_km {
        dump_censoring(&km, path)?;
    }
    let problem = PshProblem::new(data, &km)?;
    let lambda_arg = args.lambda.unwrap_or(if method.is_bar() {
        LambdaArg::Fixed(Preset::LogP)
    } else {
        LambdaArg::Grid
    });

    let start = Instant::now();
    let (fit, lambda, tuned) = match lambda_arg {
        LambdaArg::Fixed(preset) => {
            let lambda = preset.resolve(data.p());
            (fit_method(&problem, method, lambda, &options)?, lambda, false)
        }
        LambdaArg::Grid => {
            let grid = method_grid(&problem, method, &options)?;
            let res = grid_search(&problem, method, &grid, &options)?;
            (res.best_fit, res.best_lambda, true)
        }
    };
    let elapsed_secs = start.elapsed().as_secs_f64();
    check_converged(fit.converged(), args.solver.strict, &format!("{method} at lambda {lambda}"))?;

    let beta = fit.beta();
    let out = FitOutput {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        method,
        engine: options.engine,
        lambda,
        lambda_selected_by_bic: tuned,
        xi: method.is_bar().then(|| options.xi_for(data.p())),
        n: data.n(),
        p: data.p(),
        events: problem.n_events(),
        coefficients: coefficients(data, beta, loaded.scales.as_deref()),
        loglik: problem.loglik(beta)?,
        bic: bic_score(&problem, beta, options.bic_n)?,
        iterations: fit.iterations(),
        converged: fit.converged(),
        elapsed_secs,
    };
    write_json(&out, args.solver.out.as_deref())
}

fn read_grid(spec: &str) -> CliResult<Option<Vec<f64>>> {
    if spec == "default" {
        return Ok(None);
    }
    let text = std::fs::read_to_string(spec).map_err(|e| CliError::io(spec, e))?;
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| CliError::Validation(format!("grid file {spec}: '{t}' is not a number")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(Some(values))
}

#[derive(Serialize)]
struct TuneOutput {
    schema_version: u32,
    command: &'static str,
    method: Method,
    engine: EngineKind,
    warm_start: bool,
    n: usize,
    p: usize,
    events: usize,
    grid: Vec<f64>,
    bic: Vec<f64>,
    support_sizes: Vec<usize>,
    converged: Vec<bool>,
    best_index: usize,
    best_lambda: f64,
    best: BestFit,
    elapsed_secs: f64,
}

#[derive(Serialize)]
struct BestFit {
    #[serde(flatten)]
    coefficients: Coefficients,
    loglik: f64,
    bic: f64,
    iterations: usize,
    converged: bool,
}

pub fn tune(args: &TuneArgs) -> CliResult<()> {
    let loaded = load(&args.input)?;
    let mut options = fit_options(&args.solver)?;
    options.warm_start = !args.no_warm_start;
    let method: Method = args.solver.method.into();
    let data = &loaded.data;
    warn_if_naive_is_slow(options.engine, data.n());
    let problem = PshProblem::from_dataset(data)?;
    let grid = match read_grid(&args.grid)? {
        Some(g) => g,
        None => method_grid(&problem, method, &options)?,
    };

    let start = Instant::now();
    let res = grid_search(&problem, method, &grid, &options)?;
    let elapsed_secs = start.elapsed().as_secs_f64();
    if let Some(k) = res.converged.iter().position(|c| !c) {
        check_converged(false, args.solver.strict, &format!("{method} at lambda {}", res.grid[k]))?;
    }

    if let Some(path) = &args.path_csv {
        let err = csv_err(path);
        let mut w = csv::Writer::from_path(path).map_err(&err)?;
        w.write_record(["lambda", "bic", "support_size", "converged"]).map_err(&err)?;
        for i in 0..res.grid.len() {
            w.write_record([
                res.grid[i].to_string(),
                res.scores[i].to_string(),
                res.support_sizes[i].to_string(),
                res.converged[i].to_string(),
            ])
            .map_err(&err)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }

    let beta = res.best_fit.beta();
    let best = BestFit {
        coefficients: coefficients(data, beta, loaded.scales.as_deref()),
        loglik: problem.loglik(beta)?,
        bic: res.scores[res.best_index],
        iterations: res.best_fit.iterations(),
        converged: res.best_fit.converged(),
    };
    let out = TuneOutput {
        schema_version: SCHEMA_VERSION,
        command: "tune",
        method,
        engine: options.engine,
        warm_start: options.warm_start,
        n: data.n(),
        p: data.p(),
        events: problem.n_events(),
        grid: res.grid,
        bic: res.scores,
        support_sizes: res.support_sizes,
        converged: res.converged,
        best_index: res.best_index,
        best_lambda: res.best_lambda,
        best,
        elapsed_secs,
    };
    write_json(&out, args.solver.out.as_deref())
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let beta1 = match &args.beta1 {
        None => standard_beta1(args.p),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            text.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        CliError::Validation(format!("{}: '{t}' is not a number", path.display()))
                    })
                })
                .collect::<CliResult<Vec<_>>>()?
        }
    };
    let mut spec = SimulationSpec {
        n: args.n,
        p: args.p,
        rho: args.rho,
        beta1,
        pi: args.pi,
        u_max: 1.0,
        seed: args.seed,
    };
    spec.u_max = match args.umax {
        UmaxArg::Value(v) => v,
        UmaxArg::TargetCensoring(rate) => {
            let u = calibrate_u_max(&spec, rate, 100_000, 0.002)?;
            log::info!("calibrated u_max = {u} for censoring rate {rate}");
            u
        }
    };
    let sim = generate_replicate(&spec, args.replicate)?;
    log::info!(
        "censored {:.3}, observed cause 1 {:.3}",
        sim.censoring_rate(),
        sim.observed_cause1_rate()
    );
    let target = args.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let out = open_out(args.out.as_deref())?;
    fgscan_core::data::write_csv_to(&sim.dataset, out).map_err(|e| match e {
        fgscan_core::Error::Validation(m) => CliError::io(target, std::io::Error::other(m)),
        other => other.into(),
    })
}

fn parse_reference(s: &str) -> CliResult<(Method, EngineKind)> {
    let bad = || CliError::Usage(format!("--reference expects method:engine, got '{s}'"));
    let (m, e) = s.split_once(':').ok_or_else(bad)?;
    Ok((
        m.parse().map_err(|_| bad())?,
        e.parse().map_err(|_| bad())?,
    ))
}

pub fn bench(args: &BenchArgs) -> CliResult<()> {
    let engines = match args.scan {
        ScanArg::On => vec![EngineKind::Scan],
        ScanArg::Off => vec![EngineKind::Naive],
        ScanArg::Both => vec![EngineKind::Scan, EngineKind::Naive],
    };
    let methods = args.methods.0.clone();
    let reference = match &args.reference {
        Some(r) => parse_reference(r)?,
        None if methods.contains(&Method::Bar) && engines.contains(&EngineKind::Naive) => {
            (Method::Bar, EngineKind::Naive)
        }
        None => (methods[0], engines[0]),
    };
    if let Some(&n) = args.sizes.0.iter().find(|&&n| n > NAIVE_WARN_N) {
        warn_if_naive_is_slow(*engines.last().unwrap(), n);
    }
    let config = BenchConfig {
        engines,
        seed: args.seed,
        lambda: args.lambda,
        reference,
        ..BenchConfig::new(args.sizes.0.clone(), args.p, methods, args.replicates)
    };
    let report = run_bench(&config)?;
    let target = args.out.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
    let out = open_out(args.out.as_deref())?;
    report.write_csv(out).map_err(|e| match e {
        fgscan_core::Error::Validation(m) => CliError::io(target, std::io::Error::other(m)),
        other => other.into(),
    })
}

#[derive(Serialize)]
struct CheckPoint {
    label: &'static str,
    max_discrepancy: f64,
    loglik_scan: f64,
    loglik_naive: f64,
}

#[derive(Serialize)]
struct CheckOutput {
    schema_version: u32,
    command: &'static str,
    n_rows: usize,
    n_checked: usize,
    events: usize,
    trivial: bool,
    tolerance: f64,
    points: Vec<CheckPoint>,
    max_discrepancy: f64,
    passed: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn discrepancy(fast: &LikelihoodReport, slow: &LikelihoodReport) -> f64 {
    let mut worst = rel(fast.loglik, slow.loglik);
    for j in 0..fast.score.len() {
        worst = worst
            .max(rel(fast.score[j], slow.score[j]))
            .max(rel(fast.neg_hess_diag[j], slow.neg_hess_diag[j]));
    }
    worst
}

pub fn check(args: &CheckArgs) -> CliResult<()> {
    let full = load(&args.input)?.data;
    if args.max_rows == 0 {
        return Err(CliError::Validation("--max-rows must be at least 1".into()));
    }
    let data = if full.n() > args.max_rows {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let mut rows = sample(&mut rng, full.n(), args.max_rows).into_vec();
        rows.sort_unstable();
        log::info!("checking a random subset of {} of {} rows", rows.len(), full.n());
        full.subset(&rows)?
    } else {
        full.clone()
    };
    let problem = PshProblem::from_dataset(&data)?;
    let events = problem.n_events();
    let mut points = Vec::new();
    if events == 0 {
        log::warn!("no events of interest in the checked rows; the likelihood is empty and the check passes trivially");
    } else {
        let p = data.p();
        let mut eval = problem.evaluator(EngineKind::Scan);
        let ridge = fit_ridge(&mut *eval, (p.max(2) as f64).ln(), 1e-8, 1000)?;
        for (label, beta) in [("zero", vec![0.0; p]), ("ridge", ridge.beta)] {
            eval.set_beta(&beta)?;
            let fast = eval.report()?;
            let slow = naive_likelihood_suite(&problem, &beta)?;
            points.push(CheckPoint {
                label,
                max_discrepancy: discrepancy(&fast, &slow),
                loglik_scan: fast.loglik,
                loglik_naive: slow.loglik,
            });
        }
    }
    let max_discrepancy = points.iter().map(|c| c.max_discrepancy).fold(0.0, f64::max);
    let passed = max_discrepancy <= CHECK_TOL;
    let out = CheckOutput {
        schema_version: SCHEMA_VERSION,
        command: "check",
        n_rows: full.n(),
        n_checked: data.n(),
        events,
        trivial: events == 0,
        tolerance: CHECK_TOL,
        points,
        max_discrepancy,
        passed,
    };
    write_json(&out, args.out.as_deref())?;
    if passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed(max_discrepancy))
    }
}
