use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown config key `{key}` on line {line}")]
    UnknownConfigKey { line: usize, key: String },

    #[error("degenerate time step: maximal wave speed and epsilon are both zero")]
    DegenerateTimeStep,

    #[error("time step {dt} violates the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },

    #[error("flux `{0}` is not strictly convex")]
    NotConvex(String),

    #[error("boundary contamination on the {side} boundary at t = {time}: deviation {deviation:e}")]
    BoundaryContamination {
        side: &'static str,
        time: f64,
        deviation: f64,
    },

    #[error("numerical instability (non-finite value) at t = {time}")]
    Instability { time: f64 },

    #[error(
        "Duhamel Picard iteration does not contract (iterate distance {distance:e} at iteration {iteration}); use a smaller final time"
    )]
    NonContraction { iteration: usize, distance: f64 },

    #[error("time {time} outside the stored range [{start}, {end}]")]
    TimeOutOfRange { time: f64, start: f64, end: f64 },

    #[error("flow is not monotone at time index {time_index}: particles {left} and {right} are out of order")]
    Monotonicity {
        time_index: usize,
        left: usize,
        right: usize,
    },

    #[error("mismatched time stamps: {0}")]
    MismatchedTimes(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("unknown figure {0}; expected 1..=5")]
    UnknownFigure(u32),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
