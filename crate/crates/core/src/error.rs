//! Error type shared across the crate.

/// Crate-wide error enum. Integration routines translate `Collapse` and
/// `NonFinite` into trajectory terminations instead of propagating them.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A metric scale hit zero or went negative where positivity is required.
    #[error("metric collapse: f = {f}, h = {h}")]
    Collapse { f: f64, h: f64 },

    /// A computed quantity stopped being finite (overflow / blow-up).
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    /// Preset name not in the catalog.
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    /// A caller-supplied parameter violates a documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Evaluation outside the domain of a closed-form solution.
    #[error("argument outside domain: {0}")]
    OutOfDomain(String),

    /// Filesystem / serialization problems surfaced by the CLI layer.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
