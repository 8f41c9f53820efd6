use crate::fem::{grad_lq_norm, h1_norm, p1_gradient, FemField};
use crate::geometry::{MeshDomain, RhoSets};
use crate::linalg::Sym2;

/// `∫ D∇u·∇v` split into triangles flagged `inside` and the rest.
pub fn energy_split(mesh: &MeshDomain, diff_t: &[Sym2], u: &[f64], v: &[f64], inside: &[bool]) -> (f64, f64) {
    let (mut a, mut b) = (0.0, 0.0);
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let p = mesh.triangle_points(t);
        let gu = p1_gradient(p, [u[tri[0]], u[tri[1]], u[tri[2]]]);
        let gv = p1_gradient(p, [v[tri[0]], v[tri[1]], v[tri[2]]]);
        let e = mesh.triangle_area(t) * diff_t[t].form(gu, gv);
        if inside[t] {
            a += e;
        } else {
            b += e;
        }
    }
    (a, b)
}

/// Triangles whose centroid lies in `U_{factor·ρ}` and in Ω.
pub fn triangles_in_scaled_u(mesh: &MeshDomain, sets: &RhoSets, factor: f64) -> Vec<bool> {
    (0..mesh.n_triangles()).map(|t| sets.in_scaled(mesh.centroid(t), factor)).collect()
}

/// Ratio `‖∇u‖_{L^q(Ω∖U_ρ)} / ‖u‖_{H¹(Ω)}` used as a higher-integrability diagnostic.
pub fn meyers_ratio(field: &FemField, sets: &RhoSets, q: f64) -> f64 {
    let outside: Vec<usize> =
        (0..field.mesh.n_triangles()).filter(|&t| !sets.in_u_rho(field.mesh.centroid(t))).collect();
    let h1 = h1_norm(field, None);
    if h1 == 0.0 {
        0.0
    } else {
        grad_lq_norm(field, &outside, q) / h1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};

    #[test]
    fn energy_split_partitions_the_total() {
        let m = generate_mesh(Shape::UnitSquare, 0.1, GammaSpec::square_top()).unwrap();
        let d = vec![Sym2::new(1.0, 0.5, 2.0); m.n_triangles()];
        let u: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        let v: Vec<f64> = m.vertices().iter().map(|p| p[1]).collect();
        let inside: Vec<bool> = (0..m.n_triangles()).map(|t| m.centroid(t)[0] < 0.5).collect();
        let (a, b) = energy_split(&m, &d, &u, &v, &inside);
        assert!((a + b - 0.5).abs() < 1e-12);
        assert!((a - 0.25).abs() < 1e-12);
    }
}
