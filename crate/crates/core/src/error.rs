use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: String, reason: String },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error(
        "bracket [{lo}, {hi}] does not straddle survival threshold {threshold} \
         (survival {survival_lo} at lower end, {survival_hi} at upper end)"
    )]
    Bracket {
        lo: f64,
        hi: f64,
        threshold: f64,
        survival_lo: f64,
        survival_hi: f64,
    },

    #[error("undecidable at height {height}: {reason}")]
    Undecidable { height: u32, reason: String },

    #[error("series diverges at epsilon = {epsilon}: need 3 * epsilon^(1/4) < 1")]
    Divergent { epsilon: f64 },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
