use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("factor index {index} out of range for {factors} factors")]
    FactorOutOfRange { index: usize, factors: usize },

    #[error("invalid Hilbert space factorization: {0}")]
    InvalidFactorization(String),

    #[error("invalid measurement for {agent}: {reason}")]
    InvalidMeasurement { agent: String, reason: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("state vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("property of interest is not a projector")]
    InvalidProperty,

    #[error("Hermitian eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_diagonal:e})")]
    EigenNonConvergence { sweeps: usize, off_diagonal: f64 },

    #[error("conditioning event has weight {weight:e}, conditional probability undefined{}", branch_suffix(.branch))]
    ZeroConditioningWeight { weight: f64, branch: Option<String> },

    #[error("certainty product is not a projector at level {level} for {agent}")]
    NonProjectorProduct { level: usize, agent: String },

    #[error("certainty recursion did not stabilize within {cap} iterations")]
    RecursionCap { cap: usize },

    #[error("Alice's and Bob's measurements do not commute (max violation {violation:e})")]
    NonCommutingMeasurements { violation: f64 },

    #[error("invalid epsilon {0}: must lie strictly between 0 and 1")]
    InvalidEpsilon(f64),

    #[error("invalid classical model: {0}")]
    InvalidModel(String),

    #[error("conditioning cell has nonpositive weight {weight}")]
    SignedConditioning { weight: String },

    #[error("invalid no-signaling box: {0}")]
    InvalidBox(String),

    #[error("measurements {0} and {1} are not a compatible context of the box")]
    IncompatibleContext(String, String),

    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    #[error("invalid generator parameters: {0}")]
    InvalidGenerator(String),
}

fn branch_suffix(branch: &Option<String>) -> String {
    branch
        .as_ref()
        .map(|b| format!(" (branch {b})"))
        .unwrap_or_default()
}

impl Error {
    pub(crate) fn zero_weight(weight: f64) -> Self {
        Error::ZeroConditioningWeight {
            weight,
            branch: None,
        }
    }

    /// True for failures of the mathematics rather than of the inputs'
    /// shape (undefined conditionals, solver non-convergence).
    pub fn is_mathematical(&self) -> bool {
        matches!(
            self,
            Error::ZeroConditioningWeight { .. }
                | Error::EigenNonConvergence { .. }
                | Error::NonProjectorProduct { .. }
                | Error::RecursionCap { .. }
                | Error::SignedConditioning { .. }
        )
    }
}
