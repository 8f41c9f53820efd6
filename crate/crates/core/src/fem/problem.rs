use super::assembly::{assemble_stiffness, boundary_load};
use crate::error::{Error, Result};
use crate::geometry::MeshDomain;
use crate::linalg::{CsrMatrix, LinearSystemStats, SpdSolver, Sym2};
use std::sync::Arc;

/// A factored Dirichlet problem that can be solved for many data sets.
#[derive(Debug, Clone)]
pub struct DirichletProblem {
    mesh: Arc<MeshDomain>,
    stiffness: CsrMatrix,
    fixed: Vec<bool>,
    free: Vec<usize>,
    solver: SpdSolver,
}

impl DirichletProblem {
    /// Dirichlet conditions on every boundary node.
    pub fn new(mesh: Arc<MeshDomain>, sigma_t: &[Sym2]) -> Result<Self> {
        let fixed: Vec<bool> = (0..mesh.n_vertices()).map(|i| mesh.is_boundary(i)).collect();
        Self::with_fixed(mesh, sigma_t, fixed)
    }

    pub fn with_fixed(mesh: Arc<MeshDomain>, sigma_t: &[Sym2], fixed: Vec<bool>) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh, sigma_t);
        let free: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| !fixed[i]).collect();
        let solver = SpdSolver::new(stiffness.submatrix(&free))?;
        Ok(DirichletProblem { mesh, stiffness, fixed, free, solver })
    }

    pub fn mesh(&self) -> &Arc<MeshDomain> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.fixed[i]
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free
    }

    /// Solves with the fixed entries of `g` as data and optional nodal loads on free nodes.
    pub fn solve(&self, g: &[f64], load: Option<&[f64]>) -> Result<(Vec<f64>, LinearSystemStats)> {
        let n = self.mesh.n_vertices();
        let mut u: Vec<f64> = (0..n).map(|i| if self.fixed[i] { g[i] } else { 0.0 }).collect();
        let ku = self.stiffness.mul_vec(&u);
        let rhs: Vec<f64> = self.free.iter().map(|&i| load.map_or(0.0, |f| f[i]) - ku[i]).collect();
        let (x, stats) = self.solver.solve_with_stats(&rhs)?;
        for (&i, v) in self.free.iter().zip(x) {
            u[i] = v;
        }
        Ok((u, stats))
    }

    /// `uᵀ K v`.
    pub fn energy(&self, u: &[f64], v: &[f64]) -> f64 {
        dot(u, &self.stiffness.mul_vec(v))
    }
}

/// A factored pure-Neumann problem; solutions are normalized to zero boundary mean.
#[derive(Debug, Clone)]
pub struct NeumannProblem {
    mesh: Arc<MeshDomain>,
    stiffness: CsrMatrix,
    keep: Vec<usize>,
    weights: Vec<f64>,
    solver: SpdSolver,
}

/// Relative compatibility tolerance `|Σf| ≤ tol·Σ|f|`.
pub const COMPATIBILITY_TOL: f64 = 1e-10;

impl NeumannProblem {
    pub fn new(mesh: Arc<MeshDomain>, sigma_t: &[Sym2]) -> Result<Self> {
        let stiffness = assemble_stiffness(&mesh, sigma_t);
        let pin = mesh.boundary_nodes()[0];
        let keep: Vec<usize> = (0..mesh.n_vertices()).filter(|&i| i != pin).collect();
        let solver = SpdSolver::new(stiffness.submatrix(&keep))?;
        let weights = mesh.boundary_weights();
        Ok(NeumannProblem { mesh, stiffness, keep, weights, solver })
    }

    pub fn mesh(&self) -> &Arc<MeshDomain> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    /// Solves `K u = f` for compatible nodal loads.
    pub fn solve_loads(&self, f: &[f64]) -> Result<(Vec<f64>, LinearSystemStats)> {
        let total: f64 = f.iter().sum();
        let scale: f64 = f.iter().map(|v| v.abs()).sum();
        if total.abs() > COMPATIBILITY_TOL * scale {
            return Err(Error::IncompatibleFlux { integral: total, norm: scale });
        }
        let rhs: Vec<f64> = self.keep.iter().map(|&i| f[i]).collect();
        let (x, stats) = self.solver.solve_with_stats(&rhs)?;
        let mut u = vec![0.0; self.mesh.n_vertices()];
        for (&i, v) in self.keep.iter().zip(x) {
            u[i] = v;
        }
        let mean = dot(&u, &self.weights) / self.weights.iter().sum::<f64>();
        for v in &mut u {
            *v -= mean;
        }
        Ok((u, stats))
    }

    /// Solves for a nodal boundary flux density `σ∇u·ν = ψ`.
    pub fn solve_density(&self, psi: &[f64]) -> Result<(Vec<f64>, LinearSystemStats)> {
        self.solve_loads(&boundary_load(&self.mesh, psi))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::sigma_on_triangles;
    use crate::conductivity::ConstantSigma;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    fn disk(h: f64) -> (Arc<MeshDomain>, Vec<Sym2>) {
        let m = Arc::new(generate_mesh(Shape::UnitDisk, h, GammaSpec::Full).unwrap());
        let st = sigma_on_triangles(&m, &ConstantSigma(Sym2::new(2.0, 0.5, 1.0))).unwrap();
        (m, st)
    }

    #[test]
    fn dirichlet_reproduces_affine_data() {
        let (m, st) = disk(0.1);
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - 3.0 * p[1];
        let g: Vec<f64> = m.vertices().iter().map(|&p| f(p)).collect();
        let (u, stats) = DirichletProblem::new(m.clone(), &st).unwrap().solve(&g, None).unwrap();
        let err = m.vertices().iter().zip(&u).map(|(&p, v)| (v - f(p)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err} {stats:?}");
    }

    #[test]
    fn neumann_recovers_affine_potential_up_to_constant() {
        let (m, st) = disk(0.1);
        let sigma = Sym2::new(2.0, 0.5, 1.0);
        let grad = [1.0, -0.5];
        let flux = sigma.apply(grad);
        let psi: Vec<f64> = m
            .vertices()
            .iter()
            .map(|p| {
                let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
                (flux[0] * p[0] + flux[1] * p[1]) / r
            })
            .collect();
        let p = NeumannProblem::new(m.clone(), &st).unwrap();
        let (u, _) = p.solve_density(&psi).unwrap();
        let exact: Vec<f64> = m.vertices().iter().map(|q| grad[0] * q[0] + grad[1] * q[1]).collect();
        let w = m.boundary_weights();
        let mean = dot(&exact, &w) / w.iter().sum::<f64>();
        let err = u.iter().zip(&exact).map(|(a, b)| (a - b + mean).abs()).fold(0.0, f64::max);
        assert!(err < 2e-2, "{err}");
        assert!(dot(&u, &w).abs() < 1e-10);
    }

    #[test]
    fn incompatible_loads_are_rejected() {
        let (m, st) = disk(0.2);
        let p = NeumannProblem::new(m.clone(), &st).unwrap();
        let mut f = vec![0.0; m.n_vertices()];
        f[m.boundary_nodes()[1]] = 1.0;
        assert!(matches!(p.solve_loads(&f), Err(Error::IncompatibleFlux { .. })));
    }

    #[test]
    fn energy_is_symmetric() {
        let (m, st) = disk(0.15);
        let p = DirichletProblem::new(m.clone(), &st).unwrap();
        let u: Vec<f64> = m.vertices().iter().map(|q| q[0] * q[1]).collect();
        let v: Vec<f64> = m.vertices().iter().map(|q| q[0] - q[1] * q[1]).collect();
        assert!((p.energy(&u, &v) - p.energy(&v, &u)).abs() < 1e-12);
        assert!(p.stiffness().asymmetry() < 1e-12);
    }
}
