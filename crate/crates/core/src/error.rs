use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation was called with arguments that break its preconditions.
    #[error("contract violation: {0}")]
    Contract(String),
    /// A numeric failure such as a non-finite loss or an irreparably singular matrix.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// The Jacobi eigensolver hit its sweep cap.
    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    /// A classifier whose decision boundary is undefined.
    #[error("degenerate classifier: {0}")]
    Degenerate(String),
    /// An error raised inside a named step of an experiment protocol.
    #[error("{step}: {source}")]
    Step {
        step: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    /// Tags an error with the protocol step it came from.
    pub fn in_step(self, step: impl Into<String>) -> Self {
        Error::Step { step: step.into(), source: Box::new(self) }
    }

    /// The innermost error, with all step tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Step { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numeric kind (non-finite values, singular
    /// matrices, solver non-convergence).
    pub fn is_numeric(&self) -> bool {
        matches!(self.root(), Error::Numeric(_) | Error::NoConvergence { .. } | Error::Degenerate(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StepExt<T> {
    fn step(self, step: &str) -> Result<T>;
}

impl<T> StepExt<T> for Result<T> {
    fn step(self, step: &str) -> Result<T> {
        self.map_err(|e| e.in_step(step))
    }
}
