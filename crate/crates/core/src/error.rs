use thiserror::Error;

/// Errors raised by the harness.
///
/// Failures of the simulation itself (the `⊥` outcomes) are not errors; they
/// are ordinary values of [`crate::simulate::SimResult`].
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// An input lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exhaustive computation would exceed its configured budget.
    #[error("resource error: {what} needs {required}, budget is {budget}")]
    Resource {
        what: String,
        required: String,
        budget: String,
    },

    /// Malformed textual input.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub(crate) fn resource(
        what: impl Into<String>,
        required: impl ToString,
        budget: impl ToString,
    ) -> Self {
        Error::Resource {
            what: what.into(),
            required: required.to_string(),
            budget: budget.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
