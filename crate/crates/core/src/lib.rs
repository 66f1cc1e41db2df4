//! Sparse drift estimation for high-dimensional Ornstein-Uhlenbeck processes
//! observed as N i.i.d. paths on a fixed horizon `[0, T]`.
//!
//! The model is `dx(t) = A x(t) dt + dw(t)`. Paths reduce to the pair of
//! sufficient statistics `(C_hat, B_hat)` under which the negative
//! log-likelihood is a quadratic in `A`; the MLE, Lasso and Slope estimators
//! are fitted from those statistics alone.
//!
//! Module map:
//! - [`ou_process`]: path simulation (Euler-Maruyama and exact transitions),
//!   matrix exponential, path containers.
//! - [`suffstats`]: sufficient statistics, loss and gradient.
//! - [`prox`]: l1 and sorted-l1 proximal operators.
//! - [`solvers`]: closed-form MLE and accelerated proximal gradient.
//! - [`model_select`]: hold-out cross-validation over a log-spaced grid.
//! - [`experiments`]: the end-to-end replication study and figure data.
//! - [`theory`]: population quantities and Monte Carlo checks of the rates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod linalg;
pub mod metrics;
pub mod model_select;
pub mod ou_process;
pub mod prox;
pub mod rng;
pub mod solvers;
pub mod suffstats;
pub mod theory;

pub use error::{OuError, Result};
pub use ou_process::{DriftMatrix, InitialLaw, PathBundle};
pub use solvers::{EstimatorResult, PenaltyKind, SolverConfig};
pub use suffstats::SuffStats;
