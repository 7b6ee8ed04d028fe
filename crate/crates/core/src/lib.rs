//! Periodic solutions of singular φ-Laplacian equations
//!
//! ```text
//! (phi(u'))' = f(t, u) + h(t),   u(0) = u(T),  u'(0) = u'(T),  |u'| < a
//! ```
//!
//! found as critical points of the nonsmooth energy
//! `I(u) = int [Phi(u') + h u + F(t, u)]` on a fixed periodic grid. The
//! pipeline minimizes the convex part over zero-mean paths, compares the
//! minimum of `I` on that subspace with the asymptotic level `m + alpha T`,
//! and then either minimizes `I` or runs a string-method mountain-pass
//! search. Candidates are certified by their Euler-Lagrange residual and by
//! the critical-point inequality against probe paths.

// `!(x > y)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod error;
pub mod expr;
pub mod functional;
pub mod grid;
pub mod mountainpass;
pub mod optimize;
pub mod pipeline;
pub mod problem;
pub mod quadrature;
pub mod verify;

pub use error::{Result, SolverError};
