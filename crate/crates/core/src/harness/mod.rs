//! Experiment runner: staged training, controller comparison, multi-seed
//! statistics and all artifact I/O.

mod config;
pub mod io;
mod run;

pub use config::{
    CompareSection, ExperimentConfig, PlantSection, PolicySection, PolicySource, RbfSection, ScenarioKind,
    StatsSection, OUT_DIR_ENV,
};
pub use run::{
    aggregate, median, simulate, write_simulation, ControllerStats, ControllerSummary, Harness, Outcome, RunSummary,
    StatsReport, TrainSummary, EFFICIENCY_FLAG_THRESHOLD,
};
