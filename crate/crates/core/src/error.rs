use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("no convergence after {iterations} iterations (last iterate {last}, residual {residual:e})")]
    Convergence {
        iterations: usize,
        last: f64,
        residual: f64,
    },

    #[error("numeric divergence at iteration {iteration}: {detail}")]
    Divergence { iteration: usize, detail: String },

    #[error("exact enumeration supports n <= {max}, got n = {n}")]
    Capacity { n: usize, max: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("internal consistency violated: {0}")]
    Consistency(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Short machine-readable tag for error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter { .. } => "parameter",
            Error::Convergence { .. } => "convergence",
            Error::Divergence { .. } => "divergence",
            Error::Capacity { .. } => "capacity",
            Error::State(_) => "state",
            Error::Consistency(_) => "consistency",
            Error::Io { .. } => "io",
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::param("eps", format!("must lie in [0, 1], got {eps}")));
    }
    Ok(())
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", format!("must be finite and >= 0, got {gamma}")));
    }
    Ok(())
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", format!("must be finite and > 0, got {lambda}")));
    }
    Ok(())
}
