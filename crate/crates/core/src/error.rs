use thiserror::Error;

use crate::hull::Region;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid wave direction parameters: {0}")]
    InvalidWaveDirection(String),

    #[error("direction is not in the wave cone (max residual {residual:e})")]
    NotInWaveCone { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("state lies outside the lamination hull (firing separators: {separators:?})")]
    OutsideHull {
        region: Region,
        separators: Vec<String>,
    },

    /// Raised when a hull point cannot be turned into a verified laminate tree.
    /// Membership still follows from the closed-form hull description.
    #[error("membership certified by the closed-form hull, constructive tree unavailable: {0}")]
    TreeUnavailable(String),

    #[error("malformed laminate tree: {0}")]
    MalformedTree(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("boundary condition violated: {0}")]
    BoundaryViolation(String),

    #[error("empty time series")]
    EmptySeries,

    #[error("frame {frame} leaves the non-stationary hull at cell ({i}, {j}) (excess {excess:e})")]
    FrameOutsideHull {
        frame: usize,
        i: usize,
        j: usize,
        excess: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
