//! Simulation toolkit for programmable non-Hermitian multilevel systems:
//! complex band structures, exceptional-point location and classification,
//! polarization-based dissipation design, and a synthetic measurement +
//! fit/bootstrap pipeline.

pub mod cli;
pub mod dissipation;
pub mod eplocate;
pub mod expsim;
pub mod fitting;
pub mod model;
pub mod numerics;
pub mod spectra;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("invalid argument: {0}")]
    InvalidInput(String),
    #[error("invalid Hamiltonian spec: {0}")]
    InvalidSpec(String),
    #[error("infeasible target: {0}")]
    Infeasible(String),
    #[error("objective carries no information: {0}")]
    NoInformation(String),
    #[error("degenerate family: {0}")]
    DegenerateFamily(String),
    #[error("fit pipeline failure: {0}")]
    FitFailure(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
