use crate::error::{Error, Result};
use crate::geometry::{dist, MeshDomain};
use crate::linalg::dense::{sym_fn, sym_inv_sqrt};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    /// Traces supported in Γ, one hat function per interior Γ node.
    HHalfCoGamma,
    /// Zero-sum nodal loads on the closed portion Γ̄.
    HMinusHalfZeroGamma,
}

/// Discrete trace or current space on Γ with its norm-realizing Gram matrix.
#[derive(Debug, Clone)]
pub struct BoundarySpace {
    pub kind: SpaceKind,
    pub mesh: Arc<MeshDomain>,
    /// Mesh vertices carrying the nodal coordinates.
    pub nodes: Vec<usize>,
    /// Columns are basis vectors in nodal coordinates.
    pub basis: DMatrix<f64>,
    /// Gram matrix in basis coordinates.
    pub gram: DMatrix<f64>,
}

impl BoundarySpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Same mesh, kind and node set.
    pub fn compatible(&self, other: &BoundarySpace) -> bool {
        self.kind == other.kind && self.nodes == other.nodes && self.mesh.hash() == other.mesh.hash()
    }

    /// Restricts a full-length nodal vector to the space's nodes.
    pub fn restrict(&self, full: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.nodes.len(), self.nodes.iter().map(|&i| full[i]))
    }

    /// Norm of a nodal vector that lies in the span of the basis.
    pub fn norm_of_nodal(&self, v: &DVector<f64>) -> f64 {
        let c = self.basis.transpose() * v;
        (c.transpose() * &self.gram * &c)[(0, 0)].max(0.0).sqrt()
    }
}

/// Lumped boundary mass and boundary stiffness on all ∂Ω nodes (in `boundary_nodes` order).
pub fn boundary_mass_stiffness(mesh: &MeshDomain) -> (DVector<f64>, DMatrix<f64>) {
    let nodes = mesh.boundary_nodes();
    let mut index = vec![usize::MAX; mesh.n_vertices()];
    for (k, &i) in nodes.iter().enumerate() {
        index[i] = k;
    }
    let n = nodes.len();
    let mut b0 = DVector::zeros(n);
    let mut b1 = DMatrix::zeros(n, n);
    for e in mesh.boundary_edges() {
        let (a, b) = (index[e.nodes[0]], index[e.nodes[1]]);
        let l = dist(mesh.vertex(e.nodes[0]), mesh.vertex(e.nodes[1]));
        b0[a] += 0.5 * l;
        b0[b] += 0.5 * l;
        b1[(a, a)] += 1.0 / l;
        b1[(b, b)] += 1.0 / l;
        b1[(a, b)] -= 1.0 / l;
        b1[(b, a)] -= 1.0 / l;
    }
    (b0, b1)
}

/// `B0^{1/2} (I + B0^{-1/2} B1 B0^{-1/2})^{1/2} B0^{1/2}` on all ∂Ω nodes.
pub fn h_half_gram_full(mesh: &MeshDomain) -> DMatrix<f64> {
    let (b0, b1) = boundary_mass_stiffness(mesh);
    let n = b0.len();
    let s = DMatrix::from_diagonal(&b0.map(f64::sqrt));
    let si = DMatrix::from_diagonal(&b0.map(|v| 1.0 / v.sqrt()));
    let inner = &si * &b1 * &si;
    let w = sym_fn(&(inner + DMatrix::identity(n, n)), |l| l.max(0.0).sqrt());
    let g = &s * w * &s;
    (&g + g.transpose()) * 0.5
}

/// Orthonormal basis of the zero-sum subspace of `R^n` (columns 2..n of a Householder reflector).
pub fn zero_sum_basis(n: usize) -> DMatrix<f64> {
    let mut v = DVector::from_element(n, -1.0 / (n as f64).sqrt());
    v[0] += 1.0;
    let vn = v.norm_squared();
    let h = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vn);
    h.columns(1, n - 1).into_owned()
}

pub fn build_trace_space(mesh: &Arc<MeshDomain>, kind: SpaceKind) -> Result<BoundarySpace> {
    let full = h_half_gram_full(mesh);
    let bnodes = mesh.boundary_nodes();
    let pos = |i: usize| bnodes.binary_search(&i).expect("boundary node");
    match kind {
        SpaceKind::HHalfCoGamma => {
            let nodes = mesh.gamma_interior_nodes();
            if nodes.len() < 3 {
                return Err(Error::DegenerateGamma { nodes: nodes.len() });
            }
            let idx: Vec<usize> = nodes.iter().map(|&i| pos(i)).collect();
            let gram = full.select_rows(&idx).select_columns(&idx);
            let n = nodes.len();
            Ok(BoundarySpace { kind, mesh: mesh.clone(), nodes, basis: DMatrix::identity(n, n), gram })
        }
        SpaceKind::HMinusHalfZeroGamma => {
            let nodes = mesh.gamma_path().to_vec();
            if nodes.len() < 3 {
                return Err(Error::DegenerateGamma { nodes: nodes.len() });
            }
            let idx: Vec<usize> = nodes.iter().map(|&i| pos(i)).collect();
            let inv = full
                .clone()
                .cholesky()
                .ok_or_else(|| Error::NotAdmissible("boundary Gram is not positive definite".into()))?
                .inverse();
            let sub = inv.select_rows(&idx).select_columns(&idx);
            let q = zero_sum_basis(nodes.len());
            let gram = q.transpose() * sub * &q;
            let gram = (&gram + gram.transpose()) * 0.5;
            Ok(BoundarySpace { kind, mesh: mesh.clone(), nodes, basis: q, gram })
        }
    }
}

/// `Gram^{-1/2}` helper used for whitening.
pub fn inverse_sqrt_gram(space: &BoundarySpace) -> DMatrix<f64> {
    sym_inv_sqrt(&space.gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    #[test]
    fn zero_sum_basis_is_orthonormal() {
        let q = zero_sum_basis(7);
        assert!((q.transpose() * &q - DMatrix::identity(6, 6)).norm() < 1e-14);
        for c in q.column_iter() {
            assert!(c.sum().abs() < 1e-14);
        }
    }

    #[test]
    fn circle_gram_follows_fourier_symbol() {
        let mesh = Arc::new(generate_mesh(Shape::UnitDisk, 0.1, GammaSpec::Full).unwrap());
        let space = build_trace_space(&mesh, SpaceKind::HHalfCoGamma).unwrap();
        let n = space.nodes.len();
        let w = mesh.boundary_weights();
        for k in 1..=n / 4 {
            let v = DVector::from_iterator(n, space.nodes.iter().map(|&i| {
                let p = mesh.vertex(i);
                (k as f64 * p[1].atan2(p[0])).cos()
            }));
            let mass: f64 = space.nodes.iter().zip(v.iter()).map(|(&i, x)| w[i] * x * x).sum();
            let ray = (v.transpose() * &space.gram * &v)[(0, 0)] / mass;
            let sym = (1.0 + (k * k) as f64).sqrt();
            assert!((ray / sym - 1.0).abs() < 0.1, "k={k} ratio {}", ray / sym);
        }
    }

    #[test]
    fn h_half_dominates_l2_and_currents_sum_to_zero() {
        let mesh = Arc::new(generate_mesh(Shape::UnitDisk, 0.1, GammaSpec::upper_half_circle()).unwrap());
        let s = build_trace_space(&mesh, SpaceKind::HHalfCoGamma).unwrap();
        let one = DVector::from_element(s.dim(), 1.0);
        let w = mesh.boundary_weights();
        let l2: f64 = s.nodes.iter().map(|&i| w[i]).sum();
        assert!((one.transpose() * &s.gram * &one)[(0, 0)] >= l2);
        let m = build_trace_space(&mesh, SpaceKind::HMinusHalfZeroGamma).unwrap();
        for c in m.basis.column_iter() {
            assert!(c.sum().abs() < 1e-12);
        }
        assert!(crate::linalg::dense::sym_eigenvalues(&m.gram)[0] > 0.0);
    }
}
