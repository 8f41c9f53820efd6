use crate::conductivity::SigmaFn;
use crate::error::Result;
use crate::geometry::{MeshDomain, Point};
use crate::linalg::{CsrMatrix, Sym2, TripletBuilder};

/// Gradients of the three barycentric hat functions and the triangle area.
pub fn p1_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let d = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = |a: Point, b: Point| [(a[1] - b[1]) / d, (b[0] - a[0]) / d];
    ([g(p[1], p[2]), g(p[2], p[0]), g(p[0], p[1])], 0.5 * d.abs())
}

/// Gradient of the P1 interpolant of `v` on a triangle.
pub fn p1_gradient(p: [Point; 3], v: [f64; 3]) -> [f64; 2] {
    let (g, _) = p1_gradients(p);
    [
        v[0] * g[0][0] + v[1] * g[1][0] + v[2] * g[2][0],
        v[0] * g[0][1] + v[1] * g[1][1] + v[2] * g[2][1],
    ]
}

/// σ at every triangle centroid.
pub fn sigma_on_triangles(mesh: &MeshDomain, sigma: &dyn SigmaFn) -> Result<Vec<Sym2>> {
    (0..mesh.n_triangles()).map(|t| sigma.sigma(mesh.centroid(t))).collect()
}

/// Stiffness matrix `∫ σ_T ∇φ_i·∇φ_j` over the listed triangles.
pub fn assemble_stiffness_on(
    mesh: &MeshDomain,
    sigma_t: &[Sym2],
    triangles: impl IntoIterator<Item = usize>,
) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.n_vertices(), 9 * mesh.n_triangles());
    for t in triangles {
        let tri = mesh.triangles()[t];
        let (g, area) = p1_gradients(mesh.triangle_points(t));
        let s = sigma_t[t];
        for i in 0..3 {
            let sg = s.apply(g[i]);
            for j in 0..3 {
                b.add(tri[i], tri[j], area * (sg[0] * g[j][0] + sg[1] * g[j][1]));
            }
        }
    }
    b.build()
}

pub fn assemble_stiffness(mesh: &MeshDomain, sigma_t: &[Sym2]) -> CsrMatrix {
    assemble_stiffness_on(mesh, sigma_t, 0..mesh.n_triangles())
}

/// Nodal loads `∫_{∂Ω} ψ φ_i` of a nodal boundary density (consistent edge mass).
pub fn boundary_load(mesh: &MeshDomain, density: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_vertices()];
    for e in mesh.boundary_edges() {
        let [i, j] = e.nodes;
        let len = crate::geometry::dist(mesh.vertex(i), mesh.vertex(j));
        f[i] += len * (2.0 * density[i] + density[j]) / 6.0;
        f[j] += len * (density[i] + 2.0 * density[j]) / 6.0;
    }
    f
}

/// Loads `Σ_T v_T·∇φ_i` for one vector per listed triangle.
pub fn gradient_loads(mesh: &MeshDomain, triangles: &[usize], vectors: &[[f64; 2]]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_vertices()];
    for (&t, v) in triangles.iter().zip(vectors) {
        let tri = mesh.triangles()[t];
        let (g, _) = p1_gradients(mesh.triangle_points(t));
        for k in 0..3 {
            f[tri[k]] += v[0] * g[k][0] + v[1] * g[k][1];
        }
    }
    f
}

/// `∫ u²` and `∫ |∇u|²` of a P1 field over the listed triangles (exact).
pub fn l2_and_grad_sq(mesh: &MeshDomain, values: &[f64], triangles: impl IntoIterator<Item = usize>) -> (f64, f64) {
    let (mut m, mut k) = (0.0, 0.0);
    for t in triangles {
        let tri = mesh.triangles()[t];
        let v = [values[tri[0]], values[tri[1]], values[tri[2]]];
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        let s = v[0] + v[1] + v[2];
        m += area / 12.0 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + s * s);
        let g = p1_gradient(p, v);
        k += area * (g[0] * g[0] + g[1] * g[1]);
    }
    (m, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_square, GammaSpec};

    #[test]
    fn stiffness_annihilates_constants_and_is_symmetric() {
        let mesh = generate_square(0.25, GammaSpec::square_top()).unwrap();
        let s = vec![Sym2::new(2.0, 0.3, 1.0); mesh.n_triangles()];
        let k = assemble_stiffness(&mesh, &s);
        assert!(k.asymmetry() < 1e-14);
        let r = k.mul_vec(&vec![1.0; mesh.n_vertices()]);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn boundary_load_integrates_density() {
        let mesh = generate_square(0.25, GammaSpec::square_top()).unwrap();
        let f = boundary_load(&mesh, &vec![1.0; mesh.n_vertices()]);
        assert!((f.iter().sum::<f64>() - 4.0).abs() < 1e-13);
    }
}
