use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("state {state} exceeds the Fock cutoff of {cutoff} photons per mode")]
    CutoffExceeded { state: String, cutoff: u8 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid resonance pattern {pattern:?}: unexpected {found:?} at position {position}")]
    InvalidPattern {
        pattern: String,
        position: usize,
        found: char,
    },

    #[error("basis does not match model: {0}")]
    BasisMismatch(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("eliminated block is singular: state {state} is resonant")]
    SingularBlock { state: String },

    #[error("resonant denominator: {0}")]
    ResonantDenominator(&'static str),

    #[error("effective detuning does not depend on detuning {0}")]
    NoDependence(usize),

    #[error("matrix is not Hermitian (max |H - H^dag| = {0:e})")]
    NotHermitian(f64),

    #[error("overdamped regime (|kappa - 2 gamma| / 4 = {excess:e} > gbar = {gbar:e}); use the numeric propagator")]
    Overdamped { gbar: f64, excess: f64 },

    #[error("defective matrix: eigenvector condition number {0:e}")]
    Defective(f64),

    #[error("integration failed: {0}")]
    Integration(String),

    #[error("basis is not closed under decay: {0}")]
    NotDecayClosed(String),

    #[error("projection onto atomic level {0} has zero weight")]
    ZeroProjection(char),

    #[error("engine mismatch: {0}")]
    EngineMismatch(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularBlock { .. }
                | Error::ResonantDenominator(_)
                | Error::NoDependence(_)
                | Error::Overdamped { .. }
                | Error::Defective(_)
                | Error::Integration(_)
                | Error::ZeroProjection(_)
        )
    }
}
