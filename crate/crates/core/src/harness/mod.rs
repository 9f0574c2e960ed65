//! Multi-seed experiments, gamma sweeps, comparisons and CSV reports.
//!
//! A [`Manifest`] is the declarative form of any experiment. It is
//! written next to every report, and executing it again reproduces the
//! report's CSV files byte for byte.

mod experiment;
mod report;
mod spec;

pub use experiment::{
    compare, derive_seed, gamma_sweep, run_experiment, run_prepared, sweep_specs, CurvePoint, ExperimentResult,
    PreparedData, RunOptions, SweepResult, SweepRow,
};
pub use report::{
    emit_report, Command, Manifest, Report, ReportFiles, CODE_VERSION, CURVES_FILE, MANIFEST_FILE, SUMMARY_FILE,
};
pub use spec::{parse_seeds, Algorithm, DataSource, ExperimentSpec, GammaChoice, GammaKeyword, DEFAULT_LOG_EVERY};
