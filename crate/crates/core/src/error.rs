use thiserror::Error;

use crate::circuit::parse::ParseError;

/// Every failure the simulator can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("OAM index {oam} exceeds the truncation bound lmax = {lmax}")]
    OamOverflow { oam: i32, lmax: i32 },
    #[error("path `{0}` is not declared")]
    UnknownPath(String),
    #[error("element needs two distinct paths but got `{0}` twice")]
    SamePath(String),
    #[error("OAM {oam} on path `{path}` cannot be sorted (only +1 and -1 are allowed)")]
    UnsortableOam { oam: i32, path: String },
    #[error("topological charge {0} is not a half-integer")]
    NonPhysicalQ(String),
    #[error("linear combination has zero norm")]
    ZeroNorm,
    #[error("states live in different mode spaces")]
    DimensionMismatch,
    #[error("calibration failed: {0}")]
    CalibrationFailure(String),
    #[error("two-photon dimension {dim} exceeds the cap {cap}")]
    DimensionCap { dim: usize, cap: usize },
    #[error("amplitude leaked onto path `{0}` which feeds no detector")]
    LeakedAmplitude(String),
    #[error("malformed coincidence pattern: {0}")]
    MalformedPattern(String),
    #[error("invalid mode space: {0}")]
    InvalidSpace(String),
    #[error("decomposed OH gate needs an auxiliary path (aux=...)")]
    MissingAuxPath,
    #[error("element placement is invalid: {0}")]
    BadPlacement(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("stage {index} ({kind}): {source}")]
    Stage {
        index: usize,
        kind: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Strips any stage wrapper and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
