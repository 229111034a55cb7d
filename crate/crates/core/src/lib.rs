//! Adaptive Eulerian-Lagrangian finite element method (ELM) for the linear
//! convection-diffusion equation
//!
//! ```text
//!     du/dt + b . grad(u) - eps * lap(u) = f      in Omega x (0, T]
//! ```
//!
//! with Dirichlet boundary data and a divergence-free velocity `b`. One time
//! step traces mesh vertices backward along the characteristics of `b`,
//! transports the previous solution to the feet, and solves the symmetric
//! backward-Euler diffusion system on the current mesh. A posteriori
//! indicators (temporal, spatial residual, coarsening) drive adaptive time
//! stepping and mesh refinement/coarsening.
//!
//! The numerical kernels are generic over the scalar type through the
//! [`Real`] trait; concrete `f64` aliases are exported at the crate root.

pub mod adaptivity;
pub mod benchmarks;
pub mod characteristics;
pub mod elm;
pub mod error;
pub mod estimators;
pub mod fem;
pub mod io;
pub mod mesh;
pub mod scalar;
pub mod special;

pub use error::{Error, Result};
pub use scalar::Real;

/// `f64` aliases for the main domain types.
pub type Mesh64 = mesh::Mesh<f64>;
pub type FeFunction64 = fem::FeFunction<f64>;
pub type SparseSymMatrix64 = fem::SparseSymMatrix<f64>;
pub type VelocityField64 = characteristics::VelocityField<f64>;
pub type TraceResult64 = characteristics::TraceResult<f64>;
pub type BenchmarkProblem64 = benchmarks::BenchmarkProblem<f64>;
pub type Tolerances64 = adaptivity::Tolerances<f64>;
pub type AdaptState64 = adaptivity::AdaptState<f64>;
pub type IndicatorReport64 = estimators::IndicatorReport<f64>;
