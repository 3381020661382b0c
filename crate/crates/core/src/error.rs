use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state has no nonzero amplitude")]
    ZeroState,
    #[error("basis index {index:?} out of range for dims {dims:?}")]
    IndexOutOfRange { index: Vec<usize>, dims: Vec<usize> },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("matrix for party {party} is not unitary (deviation {deviation:.3e})")]
    NotUnitary { party: usize, deviation: f64 },
    #[error("probability {value:.3e} is negative beyond roundoff")]
    NegativeProbability { value: f64 },
    #[error("correlation table inconsistent: {0}")]
    InconsistentTable(String),
    #[error("magic-basis residual {residual:.3e} too large")]
    MagicResidualTooLarge { residual: f64 },
    #[error("state is not in a magic basis: {0}")]
    NotMagicBasis(String),
    #[error("state is not fully entangled (party {} has reduced rank {rank})", .party + 1)]
    NotFullyEntangled { party: usize, rank: usize },
    #[error("quadratic for the first setting is identically zero")]
    DegenerateQuadratic,
    #[error("measurement ray {0} vanishes")]
    ZeroRay(&'static str),
    #[error("no candidate passed the test (best positivity {best_p_pos:.3e})")]
    ConstructionFailed { best_p_pos: f64 },
    #[error("condition sets need at least two parties, got {0}")]
    BadArity(usize),
    #[error("linear program failed numerically: {0}")]
    LpNumericalFailure(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
