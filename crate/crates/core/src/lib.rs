//! Variance-reduced proximal stochastic optimization.
//!
//! This crate implements ProxSVRG+, SSRGD and the perturbed saddle-escaping
//! variant of SSRGD for composite objectives `Phi(x) = f(x) + h(x)`, where
//! `f` is a smooth (possibly nonconvex) finite sum or online expectation and
//! `h` is a structured convex nonsmooth term with a closed-form prox.
//! Alongside the drivers it provides:
//!
//! - oracle accounting (SFO/PO) under both the raw and the per-iteration
//!   charging conventions, so complexity claims can be audited exactly;
//! - theorem-derived parameter schedules for the sublinear, PL and
//!   local-minimum regimes;
//! - a small problem zoo with analytically known constants;
//! - independent diagnostics: finite-difference gradient checks,
//!   Hessian-vector products, smallest-eigenvalue estimation, variance
//!   estimation, and local-minimum certification.
//!
//! Runs are deterministic: one seeded [`estimators::RunRng`] per run drives
//! every stochastic choice, and identical `(problem, params, seed)` yield
//! bitwise-identical traces.

pub mod algorithms;
pub mod counters;
pub mod diagnostics;
pub mod error;
pub mod estimators;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod trace;
pub mod vector;

pub use counters::OracleCounters;
pub use error::{Result, VrError};
pub use problem::{CompositeProblem, ProblemKind, SmoothOracle};
pub use prox::ProxSpec;
pub use trace::{RunTrace, Termination, TraceRecord};
pub use vector::Vector;
