//! Peaceman–Rachford splitting for nonconvex composite problems `min f + g`.
//!
//! * [`linalg`]: dense matrices, Cholesky, power iteration, seeded Gaussians.
//! * [`functions`]: smooth/prox oracles, projections, closed-form proxes and
//!   the quadratic shift that manufactures strong convexity.
//! * [`splitting`]: PR and DR engines, merit functions, step-size threshold,
//!   termination, the γ heuristic and convergence diagnostics.
//! * [`problems`]: sparse feasibility and constrained least squares.
//! * [`bench`]: the randomized PR-vs-DR comparison and its tables.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod functions;
pub mod linalg;
pub mod problems;
pub mod splitting;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, Vector};
pub use splitting::{Method, SolverConfig, SolverReport, SplitProblem};
