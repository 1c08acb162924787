//! Sparse Fine-Gray proportional subdistribution hazards regression.
//!
//! The crate evaluates the log-pseudo-likelihood and its per-coordinate
//! derivatives in linear time with a forward-backward scan, and fits sparse
//! models with broken adaptive ridge (both the nested reweighted-ridge
//! algorithm and the cyclic thresholding fixed point), LASSO, adaptive LASSO,
//! SCAD and MCP.
//!
//! ```
//! use fgscan_core::{cyc_bar, simulate, BarConfig, PshProblem, ScanEvaluator};
//!
//! let spec = simulate::SimulationSpec::standard(200, 12, 7);
//! let data = simulate::generate(&spec).unwrap();
//! let problem = PshProblem::from_dataset(&data).unwrap();
//! let mut eval = ScanEvaluator::new(&problem);
//! let config = BarConfig::log_p(problem.p());
//! let fit = cyc_bar(&mut eval, &config).unwrap();
//! assert_eq!(fit.beta.len(), 12);
//! ```

pub mod bar;
pub mod bench;
pub mod censoring;
pub mod data;
pub mod engine;
pub mod error;
pub mod penalty;
pub mod simulate;
pub mod tuning;

pub use bar::{bar_ccd, cyc_bar, fit_ridge, threshold_update, BarConfig, BarFit, SweepMode};
pub use censoring::{fit_censoring_km, weight_ratio, CensoringSurvival};
pub use data::{load_csv, write_csv, Cause, CompetingRisksDataset, CsvSchema, SubjectRecord};
pub use engine::{
    naive_likelihood_suite, scan_denominators, EngineKind, Evaluator, LikelihoodReport,
    NaiveEvaluator, PshProblem, ScanEvaluator,
};
pub use error::{Error, Result};
pub use penalty::{fit_penalized, PenalizedFit, PenaltyKind, PenaltySpec};
pub use simulate::{evaluate_selection, SelectionMetrics, SimulationSpec};
pub use tuning::{bic_score, default_grid, grid_search, Method, TuneResult};
