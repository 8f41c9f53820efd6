use super::mesh::{dist, segment_distance, segment_param, MeshDomain, Point};
use super::rho::RhoSets;
use crate::error::{Error, Result};

/// Singularity `z_τ = x⁰ + τ ν̃(x⁰)` placed outside Ω.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SingularityPlacement {
    pub x0: Point,
    pub nu_tilde: Point,
    pub tau: f64,
    pub z_tau: Point,
    pub tau0: f64,
    pub c_lower: f64,
    /// Measured `dist(z_τ, ∂Ω)`.
    pub distance: f64,
}

/// Largest admissible offset for a given ρ (exclusive).
pub fn tau0(rho: f64) -> f64 {
    0.25 * rho
}

/// Projects `x` onto the Γ polyline, returning the point and its arclength.
pub fn project_to_gamma(mesh: &MeshDomain, x: Point) -> (Point, f64, f64) {
    let arc = mesh.gamma_arclength();
    let mut best = (f64::INFINITY, x, 0.0);
    for (k, &e) in mesh.gamma_edges().iter().enumerate() {
        let [a, b] = mesh.boundary_edges()[e].nodes;
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let (d, p) = segment_distance(x, pa, pb);
        if d < best.0 {
            let s = arc[k] + segment_param(x, pa, pb) * dist(pa, pb);
            best = (d, p, s);
        }
    }
    (best.1, best.2, best.0)
}

pub fn place_singularity(mesh: &MeshDomain, sets: &RhoSets, x0: Point, tau: f64) -> Result<SingularityPlacement> {
    let t0 = tau0(sets.rho);
    if !(tau > 0.0) {
        return Err(Error::TauTooLarge { tau, reason: "z_tau lies on the boundary".into() });
    }
    if tau >= t0 {
        return Err(Error::TauTooLarge { tau, reason: format!("tau must be below tau0 = {t0}") });
    }
    let (x0p, s, off) = project_to_gamma(mesh, x0);
    if off > 1e-6 * mesh.mesh_size().max(1.0) + mesh.mesh_size() * mesh.mesh_size() {
        return Err(Error::InvalidInput(format!("x0 {x0:?} is not on Gamma (distance {off:e})")));
    }
    if !sets.contains_arclength(s) {
        return Err(Error::InvalidInput(format!("x0 {x0:?} is outside the closure of Gamma_rho")));
    }
    let nu = mesh.nontangential_field(x0p);
    let z = [x0p[0] + tau * nu[0], x0p[1] + tau * nu[1]];
    if mesh.contains(z) {
        return Err(Error::TauTooLarge { tau, reason: "z_tau falls inside the closed domain".into() });
    }
    if !sets.in_u_rho(z) {
        return Err(Error::TauTooLarge { tau, reason: "z_tau leaves U_rho".into() });
    }
    let c = mesh.descriptor().c_lower();
    let d = mesh.boundary_distance(z).0;
    if d > tau * (1.0 + 1e-12) || d < c * tau * (1.0 - 1e-12) {
        return Err(Error::TauTooLarge {
            tau,
            reason: format!("nontangential bound violated: dist {d} not in [{}, {tau}]", c * tau),
        });
    }
    Ok(SingularityPlacement { x0: x0p, nu_tilde: nu, tau, z_tau: z, tau0: t0, c_lower: c, distance: d })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_rho_sets, generate_mesh, GammaSpec, Shape};

    #[test]
    fn radial_offset_on_disk() {
        let m = generate_mesh(Shape::UnitDisk, 0.05, GammaSpec::Arc { start: -1.5, end: 1.5 }).unwrap();
        let s = compute_rho_sets(&m, 1.0).unwrap();
        let p = place_singularity(&m, &s, [1.0, 0.0], 0.1).unwrap();
        assert!((p.z_tau[0] - 1.1).abs() < 1e-12 && p.z_tau[1].abs() < 1e-12);
        assert!((p.distance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn flat_side_of_square() {
        let m = generate_mesh(Shape::UnitSquare, 0.05, GammaSpec::square_top()).unwrap();
        let s = compute_rho_sets(&m, 0.3).unwrap();
        let p = place_singularity(&m, &s, [0.5, 1.0], 0.05).unwrap();
        assert!((p.distance - 0.05).abs() < 1e-14);
        assert_eq!(p.nu_tilde, [0.0, 1.0]);
    }

    #[test]
    fn zero_offset_is_rejected() {
        let m = generate_mesh(Shape::UnitSquare, 0.05, GammaSpec::square_top()).unwrap();
        let s = compute_rho_sets(&m, 0.3).unwrap();
        assert!(matches!(place_singularity(&m, &s, [0.5, 1.0], 0.0), Err(Error::TauTooLarge { .. })));
        assert!(matches!(place_singularity(&m, &s, [0.5, 1.0], 0.2), Err(Error::TauTooLarge { .. })));
    }
}
