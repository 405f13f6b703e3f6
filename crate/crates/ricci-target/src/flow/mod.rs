//! Deterministic reference solver for the normalized flow of the conformal
//! exponent on the flat torus. Every stochastic experiment in this crate is
//! cross-validated against this module.

pub mod field;
pub mod interp;
pub mod io;
pub mod solver;

pub use field::{laplacian, normalize_area, rhs, GridField};
pub use interp::Hessian;
pub use solver::{cfl_bound, grid_sup_norms, solve, FlowSolution, SupNorms};
