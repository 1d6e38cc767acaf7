use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A level system violates one of its invariants. `field` names the
    /// offending quantity (e.g. "damping", "dipoles").
    #[error("invalid level system ({field}): {reason}")]
    InvalidSystem { field: &'static str, reason: String },

    #[error("invalid field pulse ({field}): {reason}")]
    InvalidPulse { field: &'static str, reason: String },

    /// Operation requires the ladder topology (ground coupled to every
    /// excited level, no excited-excited couplings).
    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("invalid argument ({name}): {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("mixing angle undefined: detuning and Rabi frequency are both zero")]
    DegenerateAngle,

    #[error(
        "branch error for virtual {index}: zero coupling with negative detuning gives theta = pi; \
         use a positive detuning or absorb the sign into the virtual strength"
    )]
    Branch { index: usize },

    #[error("integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("phase undefined at t = {t}: projection magnitude {magnitude:e} below floor")]
    UndefinedPhase { t: f64, magnitude: f64 },

    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for {what} (len {len})")]
    Index {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("carrier frequency is zero; classification undefined")]
    UndefinedCarrier,

    #[error("unsupported frame: {0}")]
    UnsupportedFrame(String),

    #[error("no nonzero virtual components")]
    NoVirtualComponents,
}
