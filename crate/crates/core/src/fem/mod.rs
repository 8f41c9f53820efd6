//! P1 finite elements for `div(σ∇u) = 0` with Dirichlet, Neumann or point-source data.

mod assembly;
mod field;
mod problem;

pub use assembly::{
    assemble_stiffness, assemble_stiffness_on, boundary_load, gradient_loads, l2_and_grad_sq, p1_gradient,
    p1_gradients, sigma_on_triangles,
};
pub use field::{grad_lq_norm, h1_norm, l2_norm, FemField, FieldKind};
pub use problem::{DirichletProblem, NeumannProblem, COMPATIBILITY_TOL};

use crate::conductivity::SigmaFn;
use crate::error::Result;
use crate::geometry::{AugmentedDomain, MeshDomain, Point};
use crate::singular::AugmentedProblem;
use std::sync::Arc;

/// Dirichlet solve; only the boundary entries of `g` are read.
pub fn solve_dirichlet(mesh: &Arc<MeshDomain>, sigma: &dyn SigmaFn, g: &[f64]) -> Result<FemField> {
    let st = sigma_on_triangles(mesh, sigma)?;
    let (u, _) = DirichletProblem::new(mesh.clone(), &st)?.solve(g, None)?;
    FemField::new(mesh.clone(), u, FieldKind::Potential)
}

/// Neumann solve for a nodal boundary flux density; the result has zero boundary mean.
pub fn solve_neumann(mesh: &Arc<MeshDomain>, sigma: &dyn SigmaFn, psi: &[f64]) -> Result<FemField> {
    let st = sigma_on_triangles(mesh, sigma)?;
    let (u, _) = NeumannProblem::new(mesh.clone(), &st)?.solve_density(psi)?;
    FemField::new(mesh.clone(), u, FieldKind::Potential)
}

/// Green function on Ω_ρ by singular splitting: returns (nodal total G, remainder R).
pub fn solve_point_source_dirichlet(
    aug: &Arc<AugmentedDomain>,
    sigma: Arc<dyn SigmaFn>,
    z: Point,
) -> Result<(FemField, FemField)> {
    let sol = AugmentedProblem::new(aug.clone(), sigma)?.green_at(z, None)?;
    let mesh = &aug.mesh;
    let total = (0..mesh.n_vertices())
        .map(|i| Ok(sol.leading_value(mesh.vertex(i))? + sol.corrector.values[i]))
        .collect::<Result<Vec<f64>>>()?;
    Ok((FemField::new(mesh.clone(), total, FieldKind::Potential)?, sol.corrector))
}
