use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{field}`: {reason}")]
    InvalidArgument { field: String, reason: String },

    #[error("stationary distribution is not unique: {0}")]
    NonUniqueStationary(String),

    #[error("resource limit exceeded in `{field}`: needs {required}, cap is {cap}")]
    Resource { field: String, required: u128, cap: u64 },

    #[error("infeasible `{field}`: {reason}")]
    Infeasible { field: String, reason: String },

    #[error("mixing constant is infinite: {0}")]
    InfiniteMixing(String),

    #[error("internal consistency violated: {0}")]
    Consistency(String),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn infeasible(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Infeasible {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn resource(field: impl Into<String>, required: u128, cap: u64) -> Self {
        Error::Resource {
            field: field.into(),
            required,
            cap,
        }
    }
}
