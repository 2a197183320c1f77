//! Numerical construction of entire solutions of -Laplace(u) = rho(x) f(u)
//! on R^N (N >= 3) with u(x) -> ell at infinity, for nonnegative potentials
//! rho with fast decay and sublinear nonlinearities f.
//!
//! The pipeline mirrors the constructive existence argument: certify the
//! decay and sublinearity hypotheses on a concrete instance, build an
//! explicit radial supersolution pair (w, v), solve Dirichlet problems on
//! expanding balls by a shifted monotone fixed-point iteration, and certify
//! the monotone sandwich ell <= u_k <= u_{k+1} <= v together with uniqueness
//! and decay diagnostics.

pub mod ball;
pub mod ball3d;
pub mod barrier;
pub mod conditions;
pub mod config;
pub mod entire;
pub mod error;
pub mod interp;
pub mod problem;
pub mod quad;
pub mod report;
pub mod tridiag;

pub use error::{Error, Result};
