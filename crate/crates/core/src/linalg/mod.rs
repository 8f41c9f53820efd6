//! Sparse and dense linear algebra used by the solvers.

pub mod dense;
pub mod envelope;
pub mod solver;
pub mod sparse;
pub mod sym2;

pub use solver::{LinearSystemStats, SolverKind, SpdSolver};
pub use sparse::{CsrMatrix, TripletBuilder};
pub use sym2::Sym2;
