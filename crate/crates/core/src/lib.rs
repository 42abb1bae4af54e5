//! Post-hoc extraction of directed, time-lagged influence graphs from
//! trained multivariate time-series predictors.
//!
//! The pipeline has two stages. First, a predictor is trained under causal
//! masking so that each variable is forecast from its own past and the past
//! and present of the other variables ([`predictor`]). Second, the frozen
//! predictor is probed by clamping one input variable at a time and
//! recording how predictions deviate ([`probing`]); the deviations are
//! reduced to candidate edges and a sparsity level is selected with a
//! BIC-style score ([`graphsel`]). Synthetic benchmarks with known ground
//! truth live in [`datagen`], evaluation metrics in [`metrics`], and
//! end-to-end experiment orchestration in [`harness`].

pub mod datagen;
pub mod error;
#[cfg(test)]
pub(crate) mod oracles;
pub mod graph;
pub mod graphsel;
pub mod harness;
pub mod metrics;
pub mod predictor;
pub mod probing;
pub mod series;

pub use error::{Error, Result};
pub use graph::{LaggedEdge, TemporalGraph};
pub use series::MultivariateSeries;
