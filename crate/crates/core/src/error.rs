use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphonError {
    #[error("values are not symmetric at ({i}, {j})")]
    AsymmetricValues { i: usize, j: usize },
    #[error("weights are not normalized: {detail}")]
    WeightsNotNormalized { index: Option<usize>, detail: String },
    #[error("value {value} at ({i}, {j}) is out of range")]
    ValueOutOfRange { i: usize, j: usize, value: f64 },
    #[error("shape mismatch: {0}")]
    DimensionMismatch(String),
    #[error("partition does not match the source blocks: {0}")]
    PartitionMismatch(String),
    #[error("coupling marginals do not match: {0}")]
    MarginalMismatch(String),
    #[error("resolution is incompatible: {0}")]
    ResolutionIncompatible(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("exact cut norm needs at most {limit} blocks, got {blocks}")]
    TooManyBlocksForExact { blocks: usize, limit: usize },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("no block value lies in [{eps}, 1 - {eps}] on positive mass")]
    NoInteriorValues { eps: f64 },
    #[error("point set is empty")]
    EmptySet,
    #[error("marginal scaling did not converge (residual {residual:e})")]
    ScalingDiverged { residual: f64 },
    #[error("unsupported eps {eps}: expected 2^-k with 3 <= k <= 10")]
    UnsupportedEps { eps: f64 },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, GraphonError>;
