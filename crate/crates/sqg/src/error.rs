use thiserror::Error;

/// Errors surfaced by the solver and the verification operators.
#[derive(Debug, Error)]
pub enum SqgError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parameter `{name}` = {value} outside valid domain {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("numerical blow-up at t = {t}: {detail}")]
    BlowUp { t: f64, detail: String },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("insufficient sampling: {0}")]
    Sampling(String),

    #[error("checkpoint format error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(String),
}

impl SqgError {
    pub(crate) fn domain(name: &'static str, value: f64, domain: &'static str) -> Self {
        SqgError::Domain {
            name,
            value,
            domain,
        }
    }
}

impl From<csv::Error> for SqgError {
    fn from(e: csv::Error) -> Self {
        SqgError::Csv(e.to_string())
    }
}
