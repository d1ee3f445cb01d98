use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Where a failure happened: RK4 stage 1..=4, 5 for the check of the
/// combined step output, 0 outside of stepping.
pub type Stage = u8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid grid: {0} nodes (need an even count >= 16)")]
    InvalidGrid(usize),

    #[error("invalid derivative order {0} (expected 1 or 2)")]
    InvalidOrder(u8),

    #[error("hyperbolicity lost: S_θθ + S = {margin:e} at node {node} (stage {stage})")]
    HyperbolicityLost { node: usize, margin: f64, stage: Stage },

    #[error("non-finite value at node {node} (stage {stage})")]
    NumericalFailure { node: usize, stage: Stage },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("too few records: need at least {need}, got {got}")]
    TooFewRecords { need: usize, got: usize },

    #[error("grid mismatch: {left} vs {right} nodes")]
    GridMismatch { left: usize, right: usize },

    #[error("time-like condition violated: |r1| = {0} >= 1")]
    TimelikeViolation(f64),

    #[error("degenerate parametrization: |X_u| = 0 at node {0}")]
    DegenerateParametrization(usize),
}

impl Error {
    pub(crate) fn at_stage(self, stage: Stage) -> Self {
        match self {
            Error::HyperbolicityLost { node, margin, .. } => {
                Error::HyperbolicityLost { node, margin, stage }
            }
            Error::NumericalFailure { node, .. } => Error::NumericalFailure { node, stage },
            other => other,
        }
    }
}
