//! Command-line front end: JSON config with flat `--set key=value` overrides,
//! named presets for the replication scenarios, atomic output writes, and
//! deterministic seeded output files.

mod config;
mod execute;

pub use config::{
    merge_value, parse_set_override, preset, validate_config, BandsConfig, EpCurveConfig,
    EpScanConfig, FitConfig, GridConfig, PipelineConfig, RatesConfig, RunCommand, RunConfig,
    SimulateConfig, SolvePolConfig, SpecConfig,
};
pub use execute::{execute, ExecuteOutcome, OutputFormat};

use crate::Error;

/// Process exit code for an error: 2 validation, 3 I/O, 4 numerical.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidInput(_)
        | Error::InvalidSpec(_)
        | Error::Dimension(_)
        | Error::NonFinite(_)
        | Error::Json(_) => 2,
        Error::Io(_) => 3,
        _ => 4,
    }
}

/// Machine-readable error JSON for the error stream.
pub fn error_json(err: &Error) -> String {
    let kind = match err {
        Error::Config(_) => "config",
        Error::InvalidInput(_) | Error::InvalidSpec(_) | Error::Dimension(_)
        | Error::NonFinite(_) | Error::Json(_) => "validation",
        Error::Io(_) => "io",
        Error::Infeasible(_) => "infeasible",
        _ => "numerical",
    };
    serde_json::json!({
        "error": { "kind": kind, "message": err.to_string() }
    })
    .to_string()
}
