use crate::tangle::TxId;

/// Errors surfaced by the simulator, models and detectors.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unknown approvee id {0}")]
    UnknownApprovee(TxId),
    #[error("issue time {issue} is in the past (clock {clock})")]
    IssueTimeInPast { issue: f64, clock: f64 },
    #[error("approvee {approvee} is not revealed at {at}")]
    ApproveeNotVisible { approvee: TxId, at: f64 },
    #[error("transaction {tx} is not revealed at {at}")]
    NotRevealed { tx: TxId, at: f64 },
    #[error("transaction {0} has no revealed approver")]
    NoRevealedApprover(TxId),
    #[error("no revealed tip reachable from {0}")]
    NoReachableTip(TxId),
    #[error("negative rate {0}")]
    NegativeRate(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("sample of size {got} is below the minimum {need}")]
    InsufficientSample { got: usize, need: usize },
    #[error("exit profile has fewer than two points")]
    DegenerateProfile,
    #[error("quadrature failed to reach tolerance {target} (residual {achieved})")]
    QuadratureNonConvergence { target: f64, achieved: f64 },
    #[error("attack root {root} is not revealed at {at}")]
    RootNotRevealed { root: TxId, at: f64 },
    #[error("mimic target distribution with mean {mean} is unreachable (every chained transaction carries at least one in-chain approver)")]
    MimicTargetUnreachable { mean: f64 },
    #[error("mimic attack requires a target distribution")]
    MissingMimicTarget,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("snapshot parse error at line {line}: {reason}")]
    SnapshotParse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
