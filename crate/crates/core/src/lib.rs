//! Posterior inference for generalized odds ratios in contingency tables.
//!
//! A generalized odds ratio is a multiplicative contrast of multinomial cell
//! probabilities, `psi_j = prod_i theta_i^{c_{i,j}}`. This crate provides:
//!
//! - the table/partition/contrast data model and the `(theta^P, nu)`
//!   reparametrization ([`model`]),
//! - complex log-Gamma and closed-form characteristic functions of
//!   `log psi` under Dirichlet priors for both the unconstrained
//!   (multinomial) and margin-constrained sampling schemes ([`specfun`],
//!   [`cf`]),
//! - Fisher's noncentral hypergeometric pmf for doubly-constrained 2x2
//!   tables ([`fnch`]),
//! - exact and importance-weighted posterior samplers ([`samplers`]),
//! - two-sample tests, weighted KDE, CF-grid comparison, and the posterior
//!   concentration study ([`diagnostics`]).

pub mod cf;
pub mod diagnostics;
pub mod fnch;
pub mod model;
pub mod samplers;
pub mod specfun;

pub use cf::{CfGrid, Scheme};
pub use model::{
    ContrastMatrix, CountVector, DecomposedLogOdds, DirichletPrior, Partition, Reparam,
};
pub use samplers::WeightedSample;

/// Errors shared across the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("partition/table mismatch: {0}")]
    PartitionMismatch(String),
    #[error("degenerate parameter: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical error: {0}")]
    Numerics(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("empty input: {0}")]
    Empty(String),
    #[error("unreliable result: {0}")]
    Unreliable(String),
}

pub type Result<T> = std::result::Result<T, Error>;
