//! Sparse tight-frame denoising with convexity-preserving non-convex
//! penalties.
//!
//! The estimate minimizes
//!
//! ```text
//! F(x) = 0.5 ||y - x||^2 + sum_i lambda_i phi([A x]_i; a_i)
//! ```
//!
//! over a tight frame `A^T A = r I`. With `a_i < 1 / (r lambda_i)` the
//! objective stays strictly convex even though `phi` is not, and ADMM with
//! `mu > 1/r` reaches its global minimizer.
//!
//! - [`penalty`]: penalty functions and their property checks
//! - [`prox`]: scalar threshold functions
//! - [`frame`]: identity, dense and undecimated wavelet frames
//! - [`solver`]: objective, convexity guard and ADMM
//! - [`baselines`]: l1, direct thresholding and reweighted l1
//! - [`signals`]: test signals, noise, metrics, schedules, PGM I/O
//! - [`experiment`]: the benchmark harness behind the `frameshrink` binary

// `!(x > 0.0)` style guards deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod penalty;
pub mod prox;
pub mod signals;
pub mod solver;

pub use error::{Error, Result};
pub use frame::{Frame, IdentityFrame, MatrixFrame, Udwt1d, Udwt2d, Wavelet};
pub use penalty::{PenaltyKind, PenaltyParam};
pub use solver::{admm_solve, Convexity, ProblemSpec, SolveResult, SolverConfig};
