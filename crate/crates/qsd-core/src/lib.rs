//! Numerical laboratory for minimal-information market strategies.
//!
//! The model: market participants hold real, square-integrable amplitudes
//! over log-price whose squares are their buy/sell densities. Minimizing
//! Fisher information at fixed mean and variance turns the equilibrium
//! condition into a Schrodinger-type eigenproblem whose eigenfunctions are
//! Hermite-Gaussian amplitudes with equally spaced risk eigenvalues
//! `n + 1/2`. This crate provides the closed forms, the independent
//! numerical routes to the same objects (finite-difference eigensolver,
//! discrete Fourier duality, phase-space distributions), and the market
//! readouts built on them (supply/demand curves, Giffen-anomaly detection,
//! moment estimation with Cramer-Rao verification).
//!
//! Modules:
//! - [`grid`]: uniform grids, trapezoid quadrature, finite differences
//! - [`strategy`]: Hermite-Gaussian amplitudes and their densities
//! - [`fisher`]: Fisher information, surprisal gradients, Cramer-Rao products
//! - [`solver`]: tridiagonal discretization of the risk-balance operator,
//!   Sturm-bisection eigenvalues, inverse-iteration eigenvectors
//! - [`duality`]: unitary discrete Fourier transform and its invariants
//! - [`wigner`]: phase-space quasidensities, closed form and quadrature
//! - [`curves`]: cumulative supply/demand curves and monotonicity reports
//! - [`estimation`]: transaction parsing, moment fits, seeded sampling,
//!   Monte-Carlo Cramer-Rao checks

pub mod curves;
pub mod duality;
pub mod error;
pub mod estimation;
pub mod fisher;
pub mod grid;
pub mod solver;
pub mod strategy;
pub mod wigner;

pub use error::{CoreError, Result};
pub use grid::{GridFunction, GridSpec};
pub use strategy::{Moments, Strategy};

/// Crate version, recorded in CLI manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
