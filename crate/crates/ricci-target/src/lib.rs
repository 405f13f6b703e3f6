//! Numerical laboratory for the stochastic-target view of normalized Ricci
//! flow on the flat torus.
//!
//! The flow of the conformal exponent `p` (metric `e^{2p} h` on the square
//! torus) is solved deterministically as the reference, and the same object
//! is probed through controlled diffusions: a time-changed Brownian motion
//! carrying a fiber coordinate that the gradient control keeps on the moving
//! solution graph, mirror-coupled particle pairs whose meeting time bounds
//! the oscillation decay, and a three-particle coupling whose middle point
//! exposes second derivatives. Closed-form barrier curves, Bessel and
//! Gaussian hitting-time formulas, and decay-rate fits tie the two routes
//! together.
//!
//! Entry points:
//! - [`flow`]: grid fields, the explicit solver, interpolators, sup-norms.
//! - [`geometry`]: torus distance, mirror map, geodesic interpolation.
//! - [`barriers`]: barrier ODE solutions and a-priori bounds.
//! - [`target`]: controlled paths, the gradient control, representation and
//!   martingale checks.
//! - [`coupling`]: mirror coupling, survival curves, hitting-time formulas.
//! - [`triple`]: Jacobi weights and the three-particle coupling.
//! - [`analysis`]: decay fits, Kolmogorov-Smirnov, Monte Carlo reductions.
//! - [`experiments`]: the registry behind the CLI and the acceptance suite.

pub mod analysis;
pub mod barriers;
pub mod config;
pub mod coupling;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod geometry;
pub mod rng;
pub mod special;
pub mod target;
pub mod triple;

pub use barriers::Curvature;
pub use error::{Error, Result};
pub use flow::{FlowSolution, GridField};
pub use geometry::{TangentVec, TorusPoint};
pub use rng::RngStream;
