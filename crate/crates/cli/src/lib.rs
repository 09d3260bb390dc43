//! Experiment harness around the `cicq-core` simulator: reproducible sweeps,
//! minimum-burst searches, comparison tables, and the `cicq` binary's
//! plumbing.

pub mod app;
pub mod config;
pub mod experiments;

pub use experiments::{
    experiment_csv, region_csv, reproduce_tables, run_region_sweep,
    run_threshold_burst_experiments, search_min_burst, tables_csv, ExperimentKind,
    ExperimentSpec, RegionSweepParams, SearchParams, TablesParams,
};
