//! Solver library for monotone operator equations B(u) + eps*u = 0 and
//! B(u) = 0 in R^n, driven by the Cauchy flow du/dt = -B(u) - eps(t) u.
//!
//! The crate is organized bottom-up: [`hilbert`] provides validated state
//! vectors, [`operator`] the operator catalog machinery and monotonicity
//! probe, [`oracle`] independent minimal-norm root finders, [`schedule`]
//! the regularization schedules, [`integrator`] the explicit flow solvers,
//! [`peano`] the delayed-argument construction, [`diagnostics`] the
//! executable inequality checks, and [`harness`] the experiment
//! configuration, artifact writing, and CLI entry points.

pub mod catalog;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod hilbert;
pub mod integrator;
pub mod operator;
pub mod oracle;
pub mod peano;
pub mod schedule;
