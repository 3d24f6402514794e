//! Sparse phase retrieval from Gaussian magnitude measurements.
//!
//! The crate recovers an `s`-sparse signal `x ∈ ℝⁿ` from `y_i = |⟨a_i, x⟩|`
//! in two stages:
//!
//! 1. an initializer produces an estimate close to `±x`
//!    ([`init::spectral_init`], [`init::modified_spectral_init`] or the
//!    truncated power method [`init::tp_init`]);
//! 2. hard thresholding pursuit ([`refine::htp_run`]) refines it to exact
//!    recovery.
//!
//! [`pipeline`] wires the two stages together (including the multi-restart
//! variant) and [`harness`] runs seeded Monte Carlo experiments over grids of
//! `(s, m)` with CSV output.
//!
//! Everything operates matrix-free on the `m × n` sensing matrix: the
//! weighted covariance surrogates are never materialized except for the small
//! `|S| × |S|` principal blocks the eigen-step needs.

pub mod error;
pub mod harness;
pub mod init;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod refine;

pub use error::{Error, Result};
pub use init::{Band, InitConfig, InitEstimate, PopulationSurrogate, Surrogate};
pub use model::{dist, relative_error, Ensemble, RngStream, SparseSignal};
pub use pipeline::{Method, SolveReport, SolverConfig};
pub use refine::{HtpConfig, RefineResult};
