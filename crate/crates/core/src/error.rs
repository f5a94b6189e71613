use thiserror::Error;

/// Errors produced by the pricing engine and its numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PricingError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A function evaluation produced NaN or an infinity.
    #[error("non-finite value {value} at x = {at}")]
    NonFinite { at: f64, value: f64 },

    /// The root-finding interval does not bracket a sign change.
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    Bracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    /// A fixed-point iteration ran out of iterations.
    #[error("no convergence after {iterations} iterations (last iterates {previous} and {last})")]
    Convergence {
        iterations: usize,
        previous: f64,
        last: f64,
    },

    /// The operation does not support this market shape (e.g. K != 1).
    #[error("unsupported market: {0}")]
    UnsupportedMarket(String),

    /// The market parameters violate an invariant.
    #[error("invalid market: {0}")]
    InvalidMarket(String),

    /// No price satisfies eps <= p <= C0.
    #[error("infeasible price interval: reservation utility {reservation} exceeds roaming fee {roaming_fee}")]
    Infeasible { reservation: f64, roaming_fee: f64 },
}

pub type Result<T> = std::result::Result<T, PricingError>;
