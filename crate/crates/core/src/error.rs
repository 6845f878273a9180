use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state space is empty")]
    EmptyStateSpace,
    #[error("duplicate state label {0}")]
    DuplicateState(String),
    #[error("transition references unknown state {0}")]
    UnknownState(String),
    #[error("transition {from} -> {to} has invalid rate {rate}; rates must be positive and finite")]
    InvalidRate { from: String, to: String, rate: f64 },
    #[error("self-loop transition on state {0}")]
    SelfLoop(String),
    #[error("invalid initial distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid reward vector: {0}")]
    InvalidReward(String),
    #[error("chain is not ergodic ({0}); use transient analysis instead")]
    NotErgodic(String),
    #[error("steady-state solver stopped with residual {residual:e} above tolerance {tol:e}")]
    NoConvergence { residual: f64, tol: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid cluster spec: {0}")]
    InvalidSpec(String),
    #[error("invalid rates: {0}")]
    InvalidRates(String),
    #[error("row {row}, column `{column}`: {message}")]
    Csv { row: usize, column: String, message: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("no data rows")]
    NoDataRows,
    #[error("no row has latency at or below {threshold_ms} ms")]
    NoQualifyingRow { threshold_ms: f64 },
    #[error("missing native baseline for {0}")]
    MissingBaseline(String),
    #[error("empty grid")]
    EmptyGrid,
}
