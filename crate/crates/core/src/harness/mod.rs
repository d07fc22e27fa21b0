//! Experiment configuration, seeded execution and verification reports.

mod config;
mod report;
mod run;

pub use config::{ExperimentConfig, ExperimentKind, Start, DEFAULT_TOL_DETERMINISTIC, DEFAULT_Z_THRESHOLD};
pub use report::{
    render_discrepancies, report_render, Check, Discrepancy, Format, ReportRow, Summary,
    VerificationReport,
};
pub use run::{derive_seed, execute, run, simulate_artifacts, Artifact, RunOutput};
