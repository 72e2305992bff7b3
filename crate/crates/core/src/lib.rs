//! Relaxation methods for sparse nonsingular linear systems.
//!
//! Cyclic (Gauss-Seidel), greedy (Gauss-Southwell) and randomized relaxation on a
//! relaxed Jacobi splitting, Kaczmarz projections, convergence-rate constants in
//! the energy norm and in weighted l1 norms, the Perron and H-matrix machinery
//! those constants need, convection-diffusion test problems, and multigrid
//! V-cycles with relaxation smoothers.

pub mod bounds;
pub mod error;
pub mod mm;
pub mod multigrid;
pub mod problems;
pub mod solvers;
pub mod sparse;
pub mod spectral;
pub mod splittings;

pub use bounds::{BoundKind, BoundReport, ResidualKind, Selection};
pub use error::{Error, Result};
pub use multigrid::{GridHierarchy, SmootherConfig, SmootherScheme};
pub use problems::{Diffusion, Problem, ProblemSpec};
pub use solvers::{KaczmarzMode, PickRule, RunConfig, RunTrace, Termination, TraceNorm, WeightedSampler};
pub use sparse::{SparseMatrix, WeightVector};
pub use spectral::{HMatrixCertificate, PerronResult};
pub use splittings::{IterationVectors, JacobiSplitting, Splitting};
