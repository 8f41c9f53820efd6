use super::space::{build_trace_space, zero_sum_basis, BoundarySpace, SpaceKind};
use crate::conductivity::SigmaFn;
use crate::error::{Error, Result};
use crate::fem::{sigma_on_triangles, DirichletProblem, NeumannProblem};
use crate::geometry::{fmt17, MeshDomain};
use crate::linalg::dense::{asymmetry, whitened_norm};
use crate::linalg::Sym2;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum MapKind {
    DN,
    ND,
}

impl MapKind {
    pub fn label(self) -> &'static str {
        match self {
            MapKind::DN => "DN",
            MapKind::ND => "ND",
        }
    }
}

/// A discrete local D-N or N-D operator.
#[derive(Debug, Clone)]
pub struct LocalOperator {
    pub kind: MapKind,
    /// Matrix in basis coordinates of `space`.
    pub matrix: DMatrix<f64>,
    /// Matrix acting on nodal vectors over `space.nodes`.
    pub nodal: DMatrix<f64>,
    pub space: Arc<BoundarySpace>,
    pub sigma_tag: String,
}

impl LocalOperator {
    pub fn asymmetry(&self) -> f64 {
        asymmetry(&self.matrix)
    }

    pub fn scaled(&self, s: f64) -> LocalOperator {
        LocalOperator { matrix: &self.matrix * s, nodal: &self.nodal * s, ..self.clone() }
    }

    /// `self − other` on a shared space.
    pub fn difference(&self, other: &LocalOperator) -> Result<LocalOperator> {
        check_same(self, other)?;
        Ok(LocalOperator {
            kind: self.kind,
            matrix: &self.matrix - &other.matrix,
            nodal: &self.nodal - &other.nodal,
            space: self.space.clone(),
            sigma_tag: format!("{}-{}", self.sigma_tag, other.sigma_tag),
        })
    }

    /// CSV with a commented header naming the conductivity, kind, Γ and mesh.
    pub fn to_csv(&self, gamma_label: &str) -> String {
        let mut s = format!(
            "# sigma_tag={} kind={} gamma={} mesh={}\n",
            self.sigma_tag,
            self.kind.label(),
            gamma_label,
            self.space.mesh.hash()
        );
        let header: Vec<String> = self.space.nodes.iter().map(|n| format!("n{n}")).collect();
        let _ = writeln!(s, "node,{}", header.join(","));
        for (r, &node) in self.space.nodes.iter().enumerate() {
            let row: Vec<String> = (0..self.nodal.ncols()).map(|c| fmt17(self.nodal[(r, c)])).collect();
            let _ = writeln!(s, "{node},{}", row.join(","));
        }
        s
    }
}

fn check_same(a: &LocalOperator, b: &LocalOperator) -> Result<()> {
    if a.kind != b.kind {
        return Err(Error::SpaceMismatch(format!("{} vs {}", a.kind.label(), b.kind.label())));
    }
    if !(Arc::ptr_eq(&a.space, &b.space) || a.space.compatible(&b.space)) {
        return Err(Error::SpaceMismatch("different boundary spaces".into()));
    }
    Ok(())
}

/// `‖A − B‖` in the operator norm between the space and its dual.
pub fn op_norm(a: &LocalOperator, b: &LocalOperator) -> Result<f64> {
    check_same(a, b)?;
    let d = &a.matrix - &b.matrix;
    whitened_norm(&d, &a.space.gram).ok_or_else(|| Error::NotAdmissible("Gram matrix is not positive definite".into()))
}

/// Local D-N assembly from a factored Dirichlet problem.
pub fn local_dn_from_problem(problem: &DirichletProblem, space: &Arc<BoundarySpace>, tag: &str) -> Result<LocalOperator> {
    if space.kind != SpaceKind::HHalfCoGamma {
        return Err(Error::SpaceMismatch("D-N map needs the H^{1/2} trace space".into()));
    }
    let mesh = problem.mesh();
    let n = space.nodes.len();
    let cols: Vec<Result<Vec<f64>>> = space
        .nodes
        .par_iter()
        .map(|&j| {
            let mut g = vec![0.0; mesh.n_vertices()];
            g[j] = 1.0;
            let (u, _) = problem.solve(&g, None)?;
            let ku = problem.stiffness().mul_vec(&u);
            Ok(space.nodes.iter().map(|&i| ku[i]).collect())
        })
        .collect();
    let mut m = DMatrix::zeros(n, n);
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(LocalOperator { kind: MapKind::DN, nodal: m.clone(), matrix: m, space: space.clone(), sigma_tag: tag.into() })
}

/// N-D assembly from a factored Neumann problem; `space.nodes` must be boundary nodes.
pub fn nd_from_problem(problem: &NeumannProblem, space: &Arc<BoundarySpace>, tag: &str) -> Result<LocalOperator> {
    if space.kind != SpaceKind::HMinusHalfZeroGamma {
        return Err(Error::SpaceMismatch("N-D map needs the H^{-1/2} current space".into()));
    }
    let mesh = problem.mesh();
    let q = &space.basis;
    let cols: Vec<Result<Vec<f64>>> = (0..q.ncols())
        .into_par_iter()
        .map(|c| {
            let mut f = vec![0.0; mesh.n_vertices()];
            for (r, &i) in space.nodes.iter().enumerate() {
                f[i] = q[(r, c)];
            }
            let (u, _) = problem.solve_loads(&f)?;
            Ok(space.nodes.iter().map(|&i| u[i]).collect())
        })
        .collect();
    let mut u = DMatrix::zeros(space.nodes.len(), q.ncols());
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            u[(r, c)] = v;
        }
    }
    let matrix = q.transpose() * &u;
    let nodal = q * &matrix * q.transpose();
    Ok(LocalOperator { kind: MapKind::ND, matrix, nodal, space: space.clone(), sigma_tag: tag.into() })
}

pub fn assemble_local_dn(mesh: &Arc<MeshDomain>, sigma: &dyn SigmaFn, space: &Arc<BoundarySpace>) -> Result<LocalOperator> {
    let st = sigma_on_triangles(mesh, sigma)?;
    local_dn_from_problem(&DirichletProblem::new(mesh.clone(), &st)?, space, &sigma.tag())
}

pub fn assemble_local_nd(mesh: &Arc<MeshDomain>, sigma: &dyn SigmaFn, space: &Arc<BoundarySpace>) -> Result<LocalOperator> {
    let st = sigma_on_triangles(mesh, sigma)?;
    nd_from_problem(&NeumannProblem::new(mesh.clone(), &st)?, space, &sigma.tag())
}

/// Full D-N matrix on every boundary node (loads from traces).
pub fn assemble_full_dn(mesh: &Arc<MeshDomain>, sigma_t: &[Sym2]) -> Result<(Vec<usize>, DMatrix<f64>)> {
    let problem = DirichletProblem::new(mesh.clone(), sigma_t)?;
    let nodes = mesh.boundary_nodes().to_vec();
    let cols: Vec<Result<Vec<f64>>> = nodes
        .par_iter()
        .map(|&j| {
            let mut g = vec![0.0; mesh.n_vertices()];
            g[j] = 1.0;
            let (u, _) = problem.solve(&g, None)?;
            let ku = problem.stiffness().mul_vec(&u);
            Ok(nodes.iter().map(|&i| ku[i]).collect())
        })
        .collect();
    let mut m = DMatrix::zeros(nodes.len(), nodes.len());
    for (c, col) in cols.into_iter().enumerate() {
        for (r, v) in col?.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok((nodes, m))
}

/// Global N-D on all of ∂Ω: returns the operator and the nodal map `U Qᵀ` from zero-sum loads to traces.
pub fn assemble_global_nd(mesh: &Arc<MeshDomain>, sigma: &dyn SigmaFn) -> Result<LocalOperator> {
    if !mesh.gamma_closed() {
        let full = Arc::new(full_boundary_mesh(mesh)?);
        return assemble_global_nd(&full, sigma);
    }
    let space = Arc::new(build_trace_space(mesh, SpaceKind::HMinusHalfZeroGamma)?);
    let st = sigma_on_triangles(mesh, sigma)?;
    let problem = NeumannProblem::new(mesh.clone(), &st)?;
    let mut op = nd_from_problem(&problem, &space, &sigma.tag())?;
    let q = zero_sum_basis(space.nodes.len());
    let u = &q * &op.matrix;
    op.nodal = u * q.transpose();
    Ok(op)
}

fn full_boundary_mesh(mesh: &MeshDomain) -> Result<MeshDomain> {
    let edges = mesh
        .boundary_edges()
        .iter()
        .map(|e| crate::geometry::BoundaryEdge { nodes: e.nodes, label: crate::geometry::Portion::Gamma })
        .collect();
    MeshDomain::new(mesh.vertices().to_vec(), mesh.triangles().to_vec(), edges, mesh.descriptor(), mesh.shape())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conductivity::ConstantSigma;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    fn setup(kind: SpaceKind) -> (Arc<MeshDomain>, Arc<BoundarySpace>) {
        let m = Arc::new(generate_mesh(Shape::UnitDisk, 0.15, GammaSpec::upper_half_circle()).unwrap());
        let s = Arc::new(build_trace_space(&m, kind).unwrap());
        (m, s)
    }

    #[test]
    fn dn_scales_linearly_with_sigma() {
        let (m, s) = setup(SpaceKind::HHalfCoGamma);
        let base = Sym2::new(1.2, 0.2, 0.9);
        let a = assemble_local_dn(&m, &ConstantSigma(base), &s).unwrap();
        let b = assemble_local_dn(&m, &ConstantSigma(base * 3.0), &s).unwrap();
        assert!(a.asymmetry() < 1e-12);
        let zero = a.scaled(0.0);
        let lhs = op_norm(&b, &a).unwrap();
        let rhs = 2.0 * op_norm(&a, &zero).unwrap();
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
        assert!(op_norm(&a, &a).unwrap() < 1e-14);
    }

    #[test]
    fn nd_scales_inversely_with_sigma() {
        let (m, s) = setup(SpaceKind::HMinusHalfZeroGamma);
        let a = assemble_local_nd(&m, &ConstantSigma(Sym2::IDENTITY), &s).unwrap();
        let b = assemble_local_nd(&m, &ConstantSigma(Sym2::IDENTITY * 4.0), &s).unwrap();
        let d = (&a.matrix * 0.25 - &b.matrix).abs().max();
        assert!(d < 1e-10 * a.matrix.abs().max(), "{d}");
        let ones = DMatrix::from_element(1, s.nodes.len(), 1.0);
        assert!((ones * &a.nodal).abs().max() < 1e-10);
    }

    #[test]
    fn mixed_kinds_do_not_combine() {
        let (m, s) = setup(SpaceKind::HHalfCoGamma);
        let (_, t) = setup(SpaceKind::HMinusHalfZeroGamma);
        let dn = assemble_local_dn(&m, &ConstantSigma(Sym2::IDENTITY), &s).unwrap();
        let nd = assemble_local_nd(&m, &ConstantSigma(Sym2::IDENTITY), &t).unwrap();
        assert!(matches!(dn.difference(&nd), Err(Error::SpaceMismatch(_))));
        assert!(matches!(op_norm(&dn, &nd), Err(Error::SpaceMismatch(_))));
    }

    #[test]
    fn full_dn_annihilates_constants() {
        let m = Arc::new(generate_mesh(Shape::UnitDisk, 0.2, GammaSpec::Full).unwrap());
        let st = vec![Sym2::new(2.0, -0.3, 1.0); m.n_triangles()];
        let (nodes, d) = assemble_full_dn(&m, &st).unwrap();
        assert_eq!(nodes.len(), d.nrows());
        let rows = d.column_sum();
        assert!(rows.abs().max() < 1e-10);
    }

    #[test]
    fn csv_lists_each_node() {
        let (m, s) = setup(SpaceKind::HHalfCoGamma);
        let op = assemble_local_dn(&m, &ConstantSigma(Sym2::IDENTITY), &s).unwrap();
        let csv = op.to_csv("upper");
        assert!(csv.starts_with("# sigma_tag="));
        assert_eq!(csv.lines().count(), s.nodes.len() + 2);
    }
}
