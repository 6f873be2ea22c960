//! Derivative-free Gauss-Newton solvers for nonlinear least-squares problems
//! that build linear interpolation models in low-dimensional subspaces, plus a
//! benchmarking harness (data and performance profiles) for comparing solver
//! configurations over problem collections.
//!
//! The two solvers are:
//!
//! * [`solver::dfbgn_solve`] — the practical method. The subspace is spanned by
//!   the interpolation set itself; each iteration drops badly-placed points and
//!   appends fresh random directions orthogonal to the current ones, so the
//!   search space rotates while evaluations are reused.
//! * [`solver::rsdfo_gn_solve`] — the reference driver with criticality and
//!   safety steps and an explicitly resampled subspace (orthonormal, Gaussian
//!   or hashing sketch) each iteration.
//!
//! All numerics are generic over the scalar type via [`Scalar`]; `f64` aliases
//! for the main entry points live at the crate root.

pub mod bench;
pub mod error;
pub mod interpolation;
mod num;
pub mod problems;
pub mod solver;
pub mod subspace;
pub mod trust_region;

pub use error::Error;
pub use num::Scalar;

/// Dense column-major matrix used throughout.
pub type Matrix<T> = nalgebra::DMatrix<T>;
/// Dense column vector used throughout.
pub type Vector<T> = nalgebra::DVector<T>;

/// `f64` problem instance.
pub type Problem64 = problems::LeastSquaresProblem<f64>;
/// `f64` solver configuration.
pub type SolverConfig64 = solver::SolverConfig<f64>;
/// `f64` solver result.
pub type SolveResult64 = solver::SolveResult<f64>;
