use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Pre- and postselected qubit states are (numerically) orthogonal; the
    /// weak value diverges.
    #[error(
        "pre- and postselected states are orthogonal (postselection probability {probability:e})"
    )]
    OrthogonalSelection { probability: f64 },

    #[error("Fock truncation insufficient: tail mass {tail_mass:e} at n_max = {n_max}")]
    TruncationInsufficient { n_max: usize, tail_mass: f64 },

    /// The nonpostselected reference shift g sin(phi) cos(delta) vanishes.
    #[error(
        "nonpostselected shift is zero (sin(phi) cos(delta) = {value:e}); SNR ratio undefined"
    )]
    DegenerateReference { value: f64 },

    #[error("finite-difference step {step:e} too coarse: derivative form {derivative} vs fidelity form {fidelity}")]
    StepTooCoarse {
        step: f64,
        derivative: f64,
        fidelity: f64,
    },

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag, used in CSV status columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter { .. } => "InvalidParameter",
            Error::OrthogonalSelection { .. } => "OrthogonalSelection",
            Error::TruncationInsufficient { .. } => "TruncationInsufficient",
            Error::DegenerateReference { .. } => "DegenerateReference",
            Error::StepTooCoarse { .. } => "StepTooCoarse",
            Error::NonFinite(_) => "NonFinite",
        }
    }
}
