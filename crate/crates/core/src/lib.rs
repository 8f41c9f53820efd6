//! Numerical laboratory for the local Calderón problem in two dimensions.
//!
//! The crate assembles local Dirichlet-to-Neumann and Neumann-to-Dirichlet maps
//! for structured anisotropic conductivities, builds singular solutions on an
//! augmented domain, and runs boundary-recovery and stability experiments.

pub mod conductivity;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod linalg;
pub mod maps;
pub mod quadrature;
pub mod recovery;
pub mod singular;
pub mod suite;

pub use conductivity::{Conductivity, ConductivityModel, ScalarCoefficient, SigmaFn};
pub use error::{Error, Result};
pub use fem::{FemField, FieldKind};
pub use geometry::{GammaSpec, MeshDomain, Point, Shape};
pub use linalg::Sym2;
pub use maps::{LocalOperator, MapKind};
pub use recovery::{RecoveryConfig, RecoveryResult, StabilityReport};
pub use singular::SingularSolution;
