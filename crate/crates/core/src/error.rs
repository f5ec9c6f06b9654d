use thiserror::Error;

use crate::witness::WitnessHit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Input is valid but exceeds a configured or representable bound.
    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    /// A part of the parameters could not be factored, so values that
    /// depend on its divisor count are unavailable.
    #[error("{0} is too large to factor; value unavailable")]
    Unfactored(&'static str),

    /// Intermediate values for this `x` would reach 2^63.
    #[error("scan bound reached at x = {x}")]
    ScanBound { x: u64 },

    /// A witness whose recomputed ratio disagrees with the prediction.
    #[error("counterexample: {0}")]
    Counterexample(Box<WitnessHit>),
}
