use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point ({xi}, {eta}) lies on the collapsed edge eta >= 1")]
    CollapsedEdge { xi: f64, eta: f64 },

    #[error("quadrature exactness degree must be positive, got {0}")]
    QuadratureDegree(usize),

    #[error("invalid reference edge id {0} (expected 0, 1 or 2)")]
    EdgeId(usize),

    #[error("refinement level {0} is outside the supported range 0..=12")]
    RefinementLevel(u32),

    #[error("element {0} is degenerate (zero or negative area)")]
    DegenerateElement(usize),

    #[error("face index {index} out of range ({count} faces)")]
    FaceIndex { index: usize, count: usize },

    #[error("index ({row}, {col}) out of range for a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("linear solver produced a non-finite value at iteration {iteration}")]
    SolverBreakdown { iteration: usize },

    #[error("linear solver did not converge: {iterations} iterations, relative residual {residual:.3e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error(
        "bidomain data violate the compatibility condition \
         (int I_i - int I_e = -int b_i - int b_e): relative kernel component {defect:.3e}"
    )]
    Incompatible { defect: f64 },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("time step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("could not read config {path}: {source}")]
    ConfigRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    ConfigParse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(field: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures originating in the linear solver.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::SolverBreakdown { .. } | Error::NotConverged { .. } | Error::Incompatible { .. } => true,
            Error::StepFailed { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
