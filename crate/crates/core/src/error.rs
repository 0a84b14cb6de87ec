use thiserror::Error;

/// Errors surfaced by the library. Precondition violations are reported as
/// usage errors rather than panics so the CLI can map them to exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty point set")]
    EmptyPointSet,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("vertex id {id} out of range for n = {n}")]
    VertexOutOfRange { id: u32, n: usize },

    /// The superlevel-set measure jumps across a single threshold value,
    /// i.e. the level set itself has positive measure. The iteration cannot
    /// pick a set of the requested measure without an arbitrary tie rule.
    #[error(
        "degenerate level set at threshold {level}: superlevel measure jumps from {above} to {below}"
    )]
    DegenerateLevel { level: f64, below: f64, above: f64 },

    #[error("trace records lack member ids (recorded with record_members = false)")]
    MissingMembers,
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
