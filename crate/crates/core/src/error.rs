use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid initial datum: {0}")]
    InvalidDatum(String),

    #[error("characteristic coordinate is not strictly increasing near x = {x}")]
    DegenerateCoordinate { x: f64 },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("non-finite value in `{field}` at T = {t}")]
    StepBlowUp { field: &'static str, t: f64 },

    #[error("relative energy drift {drift:.3e} exceeds tolerance {tol:.3e} at step {step} (T = {t})")]
    EnergyDriftExceeded { drift: f64, tol: f64, step: usize, t: f64 },

    #[error("characteristic positions decrease at index {index} (dx = {dx:.3e})")]
    NonMonotoneX { index: usize, dx: f64 },

    #[error("breaking approached at t = {t}: sup|u_x| = {sup_ux:.3e}")]
    BreakingApproached { t: f64, sup_ux: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
