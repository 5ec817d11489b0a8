//! Simulation designs, missingness injection and evaluation metrics.

pub mod grid;
pub mod mar;
pub mod metrics;
pub mod scenario;

pub use grid::{data_seed, default_configs, derive_seed, fit_seed, mask_seed, run_grid, CellSummary, GridResults, NamedConfig, RunRow};
pub use mar::{inject_mar, inject_mar_detailed, MarInjection};
pub use metrics::{ari, confusion_rates, ConfusionRates};
pub use scenario::{generate_part_a, generate_part_b, Case, GroundTruth, Part, Proximity, ScenarioSpec};
