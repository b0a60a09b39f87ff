//! Hybridizable interior-penalty discontinuous Galerkin solver for 2D
//! advection-diffusion-reaction problems whose diffusion may vanish on part
//! of the domain.

pub mod assembly;
pub mod error;
pub mod fespace;
pub mod mesh;
pub mod model;
pub mod postprocess;
pub mod solver;
pub mod sparse;
pub mod stabilization;
pub mod study;

pub use assembly::{assemble, assemble_full, Assembler, CondensedSystem, PenaltyReport};
pub use error::{Error, Result};
pub use fespace::FeSpace;
pub use mesh::{Mesh, Point, Region, Shape};
pub use model::ProblemSpec;
pub use solver::{solve, Solution, SolverMethod, SolverOptions};
pub use stabilization::{EllipticScheme, Scheme, StabilizationConfig};
