use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Orientation extraction hit the pitch representation singularity.
    #[error("orientation singular: |r13| = {value:.12} is within {guard:.1e} of 1")]
    OrientationSingular { value: f64, guard: f64 },

    /// Configuration or model validation failure; the message names the violated invariant.
    #[error("invalid model: {0}")]
    Config(String),

    /// A linear system's condition estimate exceeded the singularity threshold.
    #[error("singular configuration: condition estimate {condition:.3e} exceeds {limit:.1e}")]
    SingularConfiguration { condition: f64, limit: f64 },

    /// Equilibrium iteration residual grew over several consecutive iterations.
    #[error("equilibrium diverged after {iterations} iterations (residual {residual:.3e})")]
    Diverged { iterations: usize, residual: f64 },

    /// Equilibrium iteration hit the iteration cap without meeting tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Converged state lies outside the modeled elastic range.
    #[error("state outside elastic range: {0}")]
    ElasticRange(String),

    /// Requested target pose lies outside the workspace.
    #[error("target outside workspace: axial coordinate {axial} not in (0, {limit})")]
    Workspace { axial: f64, limit: f64 },

    /// Input matrix does not satisfy the rank-5 positive-semidefinite precondition.
    #[error("not reducible: {0}")]
    NotReducible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable tag for CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OrientationSingular { .. } => "orientation_singular",
            Error::Config(_) => "invalid_model",
            Error::SingularConfiguration { .. } => "singular_configuration",
            Error::Diverged { .. } => "diverged",
            Error::NoConvergence { .. } => "no_convergence",
            Error::ElasticRange(_) => "elastic_range",
            Error::Workspace { .. } => "workspace",
            Error::NotReducible(_) => "not_reducible",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
