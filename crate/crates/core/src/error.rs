use thiserror::Error;

/// Errors raised by the toolkit.
///
/// The variants fall into three families that the command-line front end maps
/// onto distinct exit codes: invalid input, exceeded enumeration budgets, and
/// internal invariant violations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid graph limit: {0}")]
    InvalidLimit(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("enumeration budget exceeded: {what} needs {required} evaluations, bound is {bound}")]
    BudgetExceeded {
        what: &'static str,
        required: u128,
        bound: u128,
    },

    #[error("infeasible balance constraint: {0}")]
    Infeasible(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn is_budget(&self) -> bool {
        matches!(self, Error::BudgetExceeded { .. })
    }

    pub fn is_invariant(&self) -> bool {
        matches!(self, Error::Invariant(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Returns `Err(BudgetExceeded)` when `base^exp` exceeds `bound`.
pub(crate) fn check_budget(what: &'static str, base: usize, exp: usize, bound: u128) -> Result<u128> {
    let mut required: u128 = 1;
    for _ in 0..exp {
        required = required.saturating_mul(base as u128);
        if required > bound {
            return Err(Error::BudgetExceeded {
                what,
                required: (base as u128).saturating_pow(exp as u32),
                bound,
            });
        }
    }
    Ok(required)
}
