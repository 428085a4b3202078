use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("{0} is not a prime power")]
    NotPrimePower(u64),

    #[error("extension degree must be at least 1")]
    ZeroDegree,

    #[error("field GF({p}^{e}) exceeds the supported size of 2^20 elements")]
    FieldTooLarge { p: u32, e: u32 },

    #[error("operands belong to different fields")]
    ContextMismatch,

    #[error("zero has no multiplicative inverse")]
    ZeroInverse,

    #[error("element code {code} is outside the field of order {order}")]
    InvalidElement { code: u32, order: u32 },

    #[error("trace requires a field with a distinguished base subfield")]
    NoBaseField,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// Materialization, enumeration or closure would exceed the configured cap.
    #[error("refused: {what} requires {required}, cap is {cap}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        cap: u128,
    },

    #[error("singular system: {0}")]
    Singular(String),

    #[error("rounding {q} * Gauss-Hermite weights yields an empty node; smallest feasible q is {min_feasible_q}")]
    InfeasibleRounding { q: u64, min_feasible_q: u64 },

    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("block family is not {t_prime}-balanced: subset {subset:?} lies in {count} blocks, expected {expected}")]
    Unbalanced {
        t_prime: usize,
        subset: Vec<usize>,
        count: usize,
        expected: usize,
    },

    #[error("malformed input: {0}")]
    Schema(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for refusals (resource caps, infeasible or non-convergent solves)
    /// as opposed to bad input.
    pub fn is_refusal(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::InfeasibleRounding { .. }
                | Error::NoConvergence { .. }
        )
    }
}
