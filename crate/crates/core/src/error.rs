use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed field data in {path}: {msg}")]
    MalformedData { path: PathBuf, msg: String },

    #[error("implicit midpoint iteration did not converge at cell {cell} (t = {t}) after {iters} iterations, last increment {increment:e}")]
    PicardDivergence {
        cell: usize,
        t: f64,
        iters: usize,
        increment: f64,
    },

    #[error("field support within two cells of the boundary at t = {t}")]
    BoundaryReached { t: f64 },

    #[error("cone with apex ({x0}, {t0}) leaves the computed region: {msg}")]
    ConeOutOfRange { x0: f64, t0: f64, msg: String },

    #[error("empty trajectory")]
    EmptyTrajectory,

    #[error("quadrature failed on [{a}, {b}]: {msg}")]
    Quadrature { a: f64, b: f64, msg: String },

    #[error("grid too large for brute-force oracle: {n} cells (limit {limit})")]
    OracleTooLarge { n: usize, limit: usize },
}
