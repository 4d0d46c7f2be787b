//! Best uniform approximation of `sgn(x)` on `[-1,-a] ∪ [a,1]` by odd
//! rational functions with prescribed real poles.
//!
//! The error is `L = 1/cosh B0*`, where `B0*` is the height of the curve in a
//! comb domain onto which a Herglotz-type integral maps the upper half-disk.
//! [`solver`] finds the accessory parameters of that map, [`extremal`] reads
//! off the extremal function, and [`oracle`] computes the same error by a
//! Remez exchange for cross-checking.
//!
//! ```no_run
//! use combmap::{geometry::ProblemSpec, oracle, solver};
//!
//! let spec = ProblemSpec::origin_only(0.25, 1, 1);
//! let result = solver::solve(&spec, &[8, 16, 32, 64, 128], 1e-5).unwrap();
//! let remez = oracle::remez_solve(&spec, 1e-12, 100).unwrap();
//! println!("L = {}, E = {}", 1.0 / result.b0_star().cosh(), remez.e);
//! ```

pub mod chebyshev;
pub mod exec;
pub mod extremal;
pub mod geometry;
pub mod herglotz;
pub mod oracle;
pub mod quadrature;
pub mod scalar;
pub mod solver;

pub use exec::Execution;
pub use geometry::ProblemSpec;
pub use solver::{solve, solve_with, SolveOptions, SolveResult};
