//! Certified roundoff error bounds for loop-free nonlinear floating-point
//! programs.
//!
//! The pipeline: parse a program over box-and-constraint input domains,
//! apply the `(1+e)` rounding model to obtain an error expression over
//! input variables and bounded error variables, split the error into a
//! part linear in the error variables and a second-order remainder, bound
//! the linear part with sparse sums-of-squares relaxations solved by an
//! embedded semidefinite solver, bound the remainder with interval
//! arithmetic, and optionally extract an exact-rational SOS certificate
//! that a standalone checker verifies without trusting the solver.

pub mod rational;
pub mod interval;
pub mod transcendental;
pub mod polynomial;
pub mod expr;
pub mod parser;
pub mod program;
pub mod rounding;
pub mod sparsity;
pub mod sos;
pub mod sdp;
pub mod certify;
pub mod engine;
pub mod sampling;
pub mod bench;
pub mod analysis;

pub use interval::Interval;
pub use polynomial::{Monomial, Poly};
pub use rational::Rat;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
