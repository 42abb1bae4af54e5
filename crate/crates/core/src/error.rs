//! Error types shared across the pipeline.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by any pipeline stage.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid argument or malformed domain object.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Bad generator or experiment configuration.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// CSV cell or structure could not be parsed.
    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    /// Graph violates a structural invariant; lists the offending edges.
    #[error("invalid graph: {msg} (offending edges: {edges:?})")]
    InvalidGraph { msg: String, edges: Vec<(usize, usize)> },

    /// Not enough time points for the requested window or score.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Training loss became non-finite.
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    /// Numerical integration left the plausible state region.
    #[error("integration diverged at step {step}: |x| = {magnitude:.3e}")]
    Integration { step: usize, magnitude: f64 },

    /// Coefficient tensor describes a non-stationary process.
    #[error("unstable coefficient tensor: spectral radius estimate {rho:.4} >= 1")]
    Unstable { rho: f64 },

    /// Correlation is undefined for the given inputs.
    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    /// Metric cannot be computed for this ground truth.
    #[error("unsupported metric: {0}")]
    UnsupportedMetric(String),

    /// Predictor error annotated with the variable being probed.
    #[error("probe of variable {variable} failed: {source}")]
    Probe {
        variable: usize,
        #[source]
        source: Box<Error>,
    },

    /// Every seed of a run failed.
    #[error("pipeline failed: {0}")]
    Pipeline(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config file error: {0}")]
    Toml(#[from] toml::de::Error),
}
