//! Shared fixtures for the criterion benchmarks.

use fgscan_core::simulate::{generate, SimulationSpec};
use fgscan_core::PshProblem;

/// Standard-design problem of the given size.
pub fn problem(n: usize, p: usize, seed: u64) -> PshProblem {
    let data = generate(&SimulationSpec::standard(n, p, seed)).expect("valid spec");
    PshProblem::from_dataset(&data).expect("valid problem")
}
