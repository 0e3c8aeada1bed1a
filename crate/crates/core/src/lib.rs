//! Proximity operators of weighted sums of composite convex functions,
//! computed by a dual forward-backward splitting.
//!
//! Given `z` and terms `w_i g_i(L_i x - r_i)` with weights summing to one,
//! [`solver::solve`] computes
//! `argmin_x sum_i w_i g_i(L_i x - r_i) + |x - z|^2 / 2` using only the
//! proximity operators of the `g_i` (or their conjugates) and applications
//! of `L_i` and `L_i^*`.
//!
//! Built on the same iteration:
//! * [`best_approx`] projects onto intersections of sets `{x : L_i x - r_i in C_i}`;
//! * [`imaging`] recovers images under a total-variation and sparsity prior.
//!
//! [`oracle`] provides independent reference solutions used for testing.

// Negated comparisons also reject NaN parameters.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod best_approx;
pub mod cli;
pub mod config;
pub mod error;
pub mod imaging;
pub mod io;
pub mod oracle;
pub mod prox;
pub mod solver;
pub mod spaces;

pub use error::{Error, Result};
pub use prox::{ConvexSet, ExtendedReal, ProxFunction};
pub use solver::{solve, CompositeProxProblem, Solution, SolverConfig, Term};
pub use spaces::{LinearOperator, Operator, Vector, WeightVector};
