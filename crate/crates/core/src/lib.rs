//! Nonlinear augmented-Lagrangian primal-proximal method for
//!
//! ```text
//! min G(u, v) + J(u) + H(v)   s.t.  Θ(u) + Bv = 0,  u ∈ U
//! ```
//!
//! with `G`, `H` smooth, `J` block-separable and possibly nonconvex, `Θ = Ω + Φ`
//! a nonlinear constraint map and `B` of full column rank. Each iteration takes
//! one linearized Bregman-proximal step in `u`, one exact step in `v` and one
//! multiplier update, and produces a computable stationarity certificate.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bregman;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod prox;
pub mod solver;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Iterate, ProblemSpec};
pub use solver::{solve, SolveResult, Solver, SolverConfig, Termination};
