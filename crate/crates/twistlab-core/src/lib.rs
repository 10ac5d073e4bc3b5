//! Numerical functional calculus for the twisted Laplacian on C^n ≅ R^{2n}.
//!
//! The central operator is the magnetic Schrödinger operator
//!
//! ```text
//! L = -Σ_j (∂/∂x_j + (i/2) y_j)^2 + (∂/∂y_j - (i/2) x_j)^2
//! ```
//!
//! with discrete spectrum {2k + n}. The crate provides:
//!
//! * uniform cell-centered grids on `[-L/2, L/2]^{2n}` with midpoint quadrature
//!   and finite-difference realizations of `L` and its vector fields ([`grid`]),
//! * Laguerre eigenfunctions and the spectral resolution of the identity
//!   ([`laguerre`]),
//! * twisted convolution, both as a reference quadrature and as a
//!   chirp-factorized fast transform ([`conv`]),
//! * heat, Schrödinger and wave propagators plus general spectral multipliers
//!   ([`propagators`]),
//! * the subordination decomposition of the half-wave symbol and oscillatory
//!   quadrature of its kernels ([`subordination`]),
//! * atoms with twisted moment cancellation, modulated polynomial projections
//!   and the four maximal functions ([`atoms`]),
//! * a registry of named verification experiments with CSV/JSON reporting
//!   ([`harness`]).

pub mod atoms;
pub mod conv;
pub mod grid;
pub mod harness;
pub mod laguerre;
pub mod propagators;
pub mod quadrature;
pub mod subordination;
pub mod taylor;

pub use atoms::{Atom, MaximalProfile, ProjectionBasis, ValidationReport};
pub use conv::ConvPlan;
pub use grid::{Cube, Grid, GridFunction};
pub use harness::{ExperimentConfig, ExperimentReport};
pub use laguerre::LaguerreBasis;
pub use propagators::MultiplierSpec;
pub use subordination::{DecayReport, OscKernel, SubordinationData};

use thiserror::Error;

/// Errors surfaced by the numerical layer.
#[derive(Debug, Error)]
pub enum TwistError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resolution failure: {0}")]
    Resolution(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {msg}")]
    Parse { path: String, msg: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, TwistError>;
