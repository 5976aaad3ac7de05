use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {0} is not part of this mode set")]
    UnknownMode(usize),

    #[error("duplicate mode index {0}")]
    DuplicateMode(usize),

    #[error("operands live on different mode sets")]
    ModeSetMismatch,

    #[error("bosonic mode {mode} would exceed its occupation cutoff {cutoff}")]
    CutoffOverflow { mode: usize, cutoff: u32 },

    #[error("basis of dimension {dimension} exceeds the limit of {limit}")]
    BasisTooLarge { dimension: u128, limit: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("position {x} lies outside the grid [{min}, {max}]")]
    OutsideGrid { x: f64, min: f64, max: f64 },

    #[error("basis is not orthonormal: <{i}|{j}> = {overlap:.3e}")]
    NotOrthonormal { i: usize, j: usize, overlap: f64 },

    #[error("matrix is not unitary (max |U^dag U - 1| = {0:.3e})")]
    NotUnitary(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn invariant(msg: impl Into<String>) -> Self {
        Error::Invariant(msg.into())
    }

    /// True for errors that signal a broken numerical invariant rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(self, Error::Invariant(_) | Error::NotUnitary(_))
    }
}
