use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller supplied arguments that violate an operation's preconditions.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An ODE flow produced a non-finite state. Inside a scheme step `start`
    /// is the state the step began from.
    #[error("flow of field {field} over time {time} from {start:?} produced a non-finite state")]
    Explosion {
        field: usize,
        time: f64,
        start: Vec<f64>,
    },

    /// No exact solution and no finer grid to build a reference proxy from.
    #[error("no reference available for problem `{0}` at this resolution")]
    ReferenceUnavailable(String),

    /// Not enough usable points to fit a rate.
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    /// Lookup by name failed.
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for failures of the numerics (as opposed to bad arguments).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Explosion { .. } | Error::DegenerateFit(_) | Error::ReferenceUnavailable(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
