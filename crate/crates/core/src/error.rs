use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("zero field: the operation requires a nonzero field")]
    ZeroField,

    #[error("fields belong to different spaces")]
    SpaceMismatch,

    /// The scalar root finder could not certify a sign change. This points at a
    /// tolerance misconfiguration rather than a mathematical case.
    #[error("bracket failure: {0}")]
    BracketFailure(String),

    #[error("no convergence in {solver} after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("projection infeasible: fiber map is {0} at lambda = {1}")]
    ProjectionInfeasible(&'static str, f64),

    #[error("descent stalled after {iterations} steps at residual {residual:e}")]
    DescentStall { iterations: usize, residual: f64 },

    #[error("infeasible start: no seed yields a two-critical-point fiber at lambda = {0}")]
    InfeasibleStart(f64),

    #[error(
        "mountain-pass geometry violated: endpoint energy {endpoint:e} >= ring level {ring:e}"
    )]
    GeometryViolation { endpoint: f64, ring: f64 },

    #[error("saddle escape: polished point has psi'' class {0}")]
    SaddleEscape(char),

    #[error("malformed snapshot: {0}")]
    MalformedSnapshot(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-parseable tag used as the prefix of CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidParams(_) => "params",
            Error::InvalidConfig(_) => "config",
            Error::ZeroField => "zero-field",
            Error::SpaceMismatch => "space-mismatch",
            Error::BracketFailure(_) => "bracket",
            Error::NonConvergence { .. } => "nonconvergence",
            Error::ProjectionInfeasible(..) => "projection",
            Error::DescentStall { .. } => "descent-stall",
            Error::InfeasibleStart(_) => "infeasible-start",
            Error::GeometryViolation { .. } => "geometry",
            Error::SaddleEscape(_) => "saddle-escape",
            Error::MalformedSnapshot(_) => "snapshot",
            Error::MissingFile(_) => "missing-file",
            Error::Io(_) => "io",
        }
    }
}
