//! Scenario runner reproducing the headline comparisons and writing
//! plot-ready data.

mod analysis;
mod config;
mod runner;

pub use analysis::{
    compare_orders, convergence_scan, decay_timescale, ComparisonRecord, ConvergenceScan,
    DecayTimescale, Envelope,
};
pub use config::{
    EnsembleConfig, GridConfig, NoiseConfig, OutputConfig, ParamsConfig, Quantity, Scenario,
    ScenarioConfig, ScenarioKind, Spacing, Toggles, Tolerances,
};
pub use runner::{
    execute, exit_code, run_scenario, Outcome, OutputFormat, RunOptions, Table,
    ALIAS_FREE_FRACTION, EXIT_INVALID_CONFIG, EXIT_IO, EXIT_OK, EXIT_TOLERANCE, OUT_DIR_ENV,
};
