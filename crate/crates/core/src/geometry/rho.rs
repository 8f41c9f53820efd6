use super::mesh::{segment_distance, MeshDomain, Point};
use crate::error::{Error, Result};

/// Γ_ρ, its ρ/4-neighbourhood U_ρ, and their traces on the mesh.
#[derive(Debug, Clone)]
pub struct RhoSets {
    pub rho: f64,
    pub rho0: f64,
    /// Arclength window `(lo, hi)` of Γ_ρ along Γ.
    pub interval: (f64, f64),
    /// Boundary-edge indices of Γ meeting Γ_ρ.
    pub gamma_rho: Vec<usize>,
    /// Γ vertices lying in Γ̄_ρ.
    pub gamma_rho_nodes: Vec<usize>,
    /// Ω triangles whose centroid lies in U_ρ.
    pub u_rho: Vec<usize>,
    /// Ω triangles with all vertices in U_ρ.
    pub u_rho_interior: Vec<usize>,
    segments: Vec<(Point, Point)>,
}

/// Half the arclength of Γ.
pub fn rho0(mesh: &MeshDomain) -> f64 {
    0.5 * mesh.gamma_length()
}

pub fn compute_rho_sets(mesh: &MeshDomain, rho: f64) -> Result<RhoSets> {
    let r0 = rho0(mesh);
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    if rho >= r0 {
        return Err(Error::EmptyGammaRho { rho, rho0: r0 });
    }
    let len = mesh.gamma_length();
    let (lo, hi) = if mesh.gamma_closed() { (0.0, len) } else { (rho, len - rho) };
    let arc = mesh.gamma_arclength();
    let path = mesh.gamma_path();
    let mut gamma_rho = Vec::new();
    let mut segments = Vec::new();
    for (k, &e) in mesh.gamma_edges().iter().enumerate() {
        let s0 = arc[k];
        let s1 = if k + 1 < arc.len() { arc[k + 1] } else { len };
        let (c0, c1) = (s0.max(lo), s1.min(hi));
        if c1 < c0 || (c1 == c0 && !(s0..=s1).contains(&c0)) {
            continue;
        }
        let [a, b] = mesh.boundary_edges()[e].nodes;
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        let lerp = |s: f64| {
            let t = ((s - s0) / (s1 - s0)).clamp(0.0, 1.0);
            [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
        };
        gamma_rho.push(e);
        segments.push((lerp(c0), lerp(c1)));
    }
    if segments.is_empty() {
        return Err(Error::EmptyGammaRho { rho, rho0: r0 });
    }
    let tol = 1e-12 * len;
    let gamma_rho_nodes: Vec<usize> = path
        .iter()
        .zip(arc)
        .filter(|(_, &s)| s >= lo - tol && s <= hi + tol)
        .map(|(&i, _)| i)
        .collect();
    let mut sets = RhoSets {
        rho,
        rho0: r0,
        interval: (lo, hi),
        gamma_rho,
        gamma_rho_nodes,
        u_rho: Vec::new(),
        u_rho_interior: Vec::new(),
        segments,
    };
    let inside: Vec<bool> = mesh.vertices().iter().map(|&v| sets.in_u_rho(v)).collect();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        if sets.in_u_rho(mesh.centroid(t)) {
            sets.u_rho.push(t);
        }
        if tri.iter().all(|&i| inside[i]) {
            sets.u_rho_interior.push(t);
        }
    }
    Ok(sets)
}

impl RhoSets {
    /// Euclidean distance from `x` to Γ_ρ.
    pub fn distance_to_gamma_rho(&self, x: Point) -> f64 {
        self.segments.iter().map(|&(a, b)| segment_distance(x, a, b).0).fold(f64::INFINITY, f64::min)
    }

    /// Membership in U_ρ = {dist(·, Γ_ρ) < ρ/4}.
    pub fn in_u_rho(&self, x: Point) -> bool {
        self.distance_to_gamma_rho(x) < 0.25 * self.rho
    }

    /// Membership in U_{ρ'} for a smaller radius sharing this Γ.
    pub fn in_scaled(&self, x: Point, factor: f64) -> bool {
        self.distance_to_gamma_rho(x) < 0.25 * self.rho * factor
    }

    /// Whether an arclength position on Γ lies in Γ̄_ρ.
    pub fn contains_arclength(&self, s: f64) -> bool {
        let tol = 1e-9 * (self.interval.1 - self.interval.0).abs().max(1.0);
        s >= self.interval.0 - tol && s <= self.interval.1 + tol
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segments
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_mesh, GammaSpec, Shape};
    use std::f64::consts::PI;

    #[test]
    fn quarter_disk_window() {
        let m = generate_mesh(Shape::UnitDisk, 0.05, GammaSpec::upper_half_circle()).unwrap();
        let s = compute_rho_sets(&m, PI / 4.0).unwrap();
        for &i in &s.gamma_rho_nodes {
            let v = m.vertex(i);
            let th = v[1].atan2(v[0]);
            assert!(th > PI / 4.0 - 0.01 && th < 3.0 * PI / 4.0 + 0.01);
        }
        assert!(!s.u_rho_interior.is_empty());
    }

    #[test]
    fn near_rho0_leaves_the_midpoint_edge() {
        let m = generate_mesh(Shape::UnitDisk, 0.05, GammaSpec::upper_half_circle()).unwrap();
        let r0 = rho0(&m);
        let s = compute_rho_sets(&m, r0 - 1e-3).unwrap();
        assert!(s.gamma_rho.len() <= 2);
        for (a, b) in s.segments() {
            assert!(a[0].abs() < 0.03 && b[0].abs() < 0.03);
        }
        assert!(matches!(compute_rho_sets(&m, r0 + 0.01), Err(Error::EmptyGammaRho { .. })));
    }
}
