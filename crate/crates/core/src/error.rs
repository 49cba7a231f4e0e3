use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty policy matrix")]
    Empty,
    #[error("entry ({row}, {col}) is negative or not finite: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, more than 1e-9 away from 1")]
    RowSumOutOfTolerance { row: usize, sum: f64 },
    #[error("arm {arm} has zero probability under every policy")]
    UncoveredArm { arm: usize },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("eps must lie in [0, 1], got {0}")]
    EpsOutOfRange(f64),
    #[error("{requested} policies exceeds the cap of {cap}")]
    SizeLimit { requested: u128, cap: usize },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("{what} did not converge after {iterations} iterations (gap {gap:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        gap: f64,
    },
    #[error("degenerate policy set: all policies are identical")]
    DegenerateSet,
    #[error("played arm has zero probability under the policy mixture")]
    ZeroPsi,
    #[error("point is not in the convex hull of the policies (residual {residual:e})")]
    DecompositionInfeasible { residual: f64 },
    #[error("horizon {horizon} is below the threshold {t_min}")]
    HorizonTooShort { horizon: u64, t_min: f64 },
    #[error("the two policies have zero Hellinger distance")]
    ZeroHellinger,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
