use super::generate::{delaunay_flips, key, merge_closed, merge_open, orient};
use super::mesh::{dist, segment_distance, BoundaryEdge, BoundaryShape, MeshDomain, Point, Portion};
use super::rho::RhoSets;
use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;
use std::sync::Arc;

/// Bump thickness as a multiple of ρ.
pub const BUMP_THICKNESS: f64 = 0.8;
/// The bump is attached over Γ_{ρ·ATTACH_FRACTION}.
pub const ATTACH_FRACTION: f64 = 0.125;
const GROWTH: f64 = 1.15;
const MAX_STRETCH: f64 = 4.0;

/// Ω_ρ ⊃ Ω, conforming with Ω: vertices and triangles of Ω keep their indices.
#[derive(Debug, Clone)]
pub struct AugmentedDomain {
    pub mesh: Arc<MeshDomain>,
    pub original: Arc<MeshDomain>,
    /// Boundary-edge indices (in `original`) of ∂Ω lying inside Ω_ρ.
    pub shared_interface: Vec<usize>,
    /// Boundary-edge indices (in `mesh`) of the patch S ⊂ ∂Ω_ρ.
    pub s_patch: Vec<usize>,
    pub rho: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AugmentationReport {
    /// min dist(x, ∂Ω_ρ) over sampled x ∈ U_ρ.
    pub u_rho_boundary_distance: f64,
    /// min dist(S, ∂Ω) over patch vertices.
    pub s_patch_distance: f64,
    /// min arclength from the shared interface to ∂Γ.
    pub interface_margin: f64,
    pub shared_in_gamma: bool,
    pub rho: f64,
}

impl AugmentationReport {
    pub fn passes(&self) -> bool {
        self.u_rho_boundary_distance >= 0.5 * self.rho
            && self.s_patch_distance >= 0.25 * self.rho
            && self.shared_in_gamma
            && self.interface_margin > 0.0
    }
}

#[derive(Debug, Clone, Copy)]
enum Frame {
    Arc { center: Point, radius: f64 },
    Line { origin: Point, t: Point, n: Point },
}

impl Frame {
    fn point(&self, u: f64, d: f64) -> Point {
        match *self {
            Frame::Arc { center, radius } => [center[0] + (radius + d) * u.cos(), center[1] + (radius + d) * u.sin()],
            Frame::Line { origin, t, n } => [origin[0] + u * t[0] + d * n[0], origin[1] + u * t[1] + d * n[1]],
        }
    }

    fn param(&self, x: Point) -> f64 {
        match *self {
            Frame::Arc { center, .. } => (x[1] - center[1]).atan2(x[0] - center[0]),
            Frame::Line { origin, t, .. } => (x[0] - origin[0]) * t[0] + (x[1] - origin[1]) * t[1],
        }
    }

    fn layer_length(&self, du: f64, d: f64) -> f64 {
        match *self {
            Frame::Arc { radius, .. } => (radius + d) * du,
            Frame::Line { .. } => du,
        }
    }
}

impl AugmentedDomain {
    /// Ω_ρ = Ω, used for interior point sources.
    pub fn identity(mesh: Arc<MeshDomain>) -> Self {
        let s_patch = mesh.gamma_edges().to_vec();
        AugmentedDomain { mesh: mesh.clone(), original: mesh, shared_interface: Vec::new(), s_patch, rho: 0.0 }
    }

    pub fn is_identity(&self) -> bool {
        Arc::ptr_eq(&self.mesh, &self.original)
    }

    pub fn s_measure(&self) -> f64 {
        self.s_patch
            .iter()
            .map(|&e| {
                let [a, b] = self.mesh.boundary_edges()[e].nodes;
                dist(self.mesh.vertex(a), self.mesh.vertex(b))
            })
            .sum()
    }

    /// Numerical check of the containment and distance requirements.
    pub fn check_invariants(&self, sets: &RhoSets) -> AugmentationReport {
        let m = &self.mesh;
        let mut samples: Vec<Point> = m.vertices().to_vec();
        samples.extend((0..m.n_triangles()).map(|t| m.centroid(t)));
        for &(a, b) in sets.segments() {
            for k in 0..=8 {
                let s = k as f64 / 8.0;
                let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
                let nu = self.original.nontangential_field(p);
                let r = 0.25 * sets.rho * (1.0 - 1e-9);
                samples.push([p[0] + r * nu[0], p[1] + r * nu[1]]);
            }
        }
        let u_rho_boundary_distance = samples
            .iter()
            .filter(|&&x| sets.in_u_rho(x) && m.contains(x))
            .map(|&x| m.boundary_distance(x).0)
            .fold(f64::INFINITY, f64::min);
        let s_patch_distance = self
            .s_patch
            .iter()
            .flat_map(|&e| m.boundary_edges()[e].nodes)
            .map(|v| self.original.boundary_distance(m.vertex(v)).0)
            .fold(f64::INFINITY, f64::min);
        let gamma: HashSet<usize> = self.original.gamma_edges().iter().copied().collect();
        let shared_in_gamma = self.shared_interface.iter().all(|e| gamma.contains(e));
        let interface_margin = if self.original.gamma_closed() {
            f64::INFINITY
        } else {
            let arc = self.original.gamma_arclength();
            let len = self.original.gamma_length();
            let pos: HashMap<usize, f64> =
                self.original.gamma_path().iter().copied().zip(arc.iter().copied()).collect();
            self.shared_interface
                .iter()
                .flat_map(|&e| self.original.boundary_edges()[e].nodes)
                .map(|v| {
                    let s = pos[&v];
                    s.min(len - s)
                })
                .fold(f64::INFINITY, f64::min)
        };
        AugmentationReport {
            u_rho_boundary_distance,
            s_patch_distance,
            interface_margin,
            shared_in_gamma,
            rho: sets.rho,
        }
    }
}

pub fn augment_domain(mesh: &Arc<MeshDomain>, sets: &RhoSets) -> Result<AugmentedDomain> {
    let rho = sets.rho;
    let closed = mesh.gamma_closed();
    let path = mesh.gamma_path();
    let arc = mesh.gamma_arclength();
    let len = mesh.gamma_length();
    let margin = ATTACH_FRACTION * rho;
    let attach: Vec<usize> = if closed {
        path.to_vec()
    } else {
        path.iter().zip(arc).filter(|(_, &s)| s >= margin && s <= len - margin).map(|(&i, _)| i).collect()
    };
    if attach.len() < 2 {
        return Err(Error::Augmentation("attach arc has fewer than two vertices".into()));
    }
    let frame = match mesh.shape() {
        BoundaryShape::Disk { center, radius } => Frame::Arc { center, radius },
        _ if closed => return Err(Error::Augmentation("closed Gamma needs a disk boundary".into())),
        _ => {
            let (a, b) = (mesh.vertex(attach[0]), mesh.vertex(*attach.last().unwrap()));
            let l = dist(a, b);
            let t = [(b[0] - a[0]) / l, (b[1] - a[1]) / l];
            for &i in &attach {
                let (d, _) = segment_distance(mesh.vertex(i), a, b);
                let p = mesh.vertex(i);
                let off = (p[0] - a[0]) * t[1] - (p[1] - a[1]) * t[0];
                if d > 1e-9 * l || off.abs() > 1e-9 * l {
                    return Err(Error::Augmentation("attach arc is not a straight segment".into()));
                }
            }
            Frame::Line { origin: a, t, n: [t[1], -t[0]] }
        }
    };
    let mut u0: Vec<f64> = attach.iter().map(|&i| frame.param(mesh.vertex(i))).collect();
    if matches!(frame, Frame::Arc { .. }) {
        for k in 1..u0.len() {
            while u0[k] <= u0[k - 1] {
                u0[k] += TAU;
            }
        }
    }
    let mean_edge = {
        let n = attach.len();
        let segs = if closed { n } else { n - 1 };
        (0..segs).map(|k| dist(mesh.vertex(attach[k]), mesh.vertex(attach[(k + 1) % n]))).sum::<f64>() / segs as f64
    };
    let thickness = BUMP_THICKNESS * rho;
    let mut incs = Vec::new();
    let mut total = 0.0;
    while total < thickness {
        let s = (mean_edge * GROWTH.powi(incs.len() as i32)).min(MAX_STRETCH * mean_edge);
        incs.push(s);
        total += s;
    }
    if incs.len() > 1 && total - thickness > 0.5 * incs.last().unwrap() {
        total -= incs.pop().unwrap();
    }
    let scale = thickness / total;
    for s in &mut incs {
        *s *= scale;
    }
    let mut vertices = mesh.vertices().to_vec();
    let n_orig_v = vertices.len();
    let mut bump = Vec::new();
    let (us, ue) = (u0[0], *u0.last().unwrap());
    let mut prev_ids = attach.clone();
    let mut prev_u = u0.clone();
    let mut d = 0.0;
    for &s in &incs {
        d += s;
        let (ids, us_l) = if closed {
            let m = ((frame.layer_length(TAU, d) / s).round() as usize).max(6);
            let off = if prev_ids.len().is_multiple_of(2) { 0.5 } else { 0.0 };
            let u: Vec<f64> = (0..m).map(|i| us + TAU * (i as f64 + off) / m as f64).collect();
            (push_layer(&mut vertices, &frame, &u, d), u)
        } else {
            let m = ((frame.layer_length(ue - us, d) / s).round() as usize).max(1);
            let u: Vec<f64> = (0..=m).map(|i| us + (ue - us) * i as f64 / m as f64).collect();
            (push_layer(&mut vertices, &frame, &u, d), u)
        };
        if closed {
            merge_closed(&(prev_ids.clone(), prev_u.clone()), &(ids.clone(), us_l.clone()), &mut bump);
        } else {
            merge_open(&prev_ids, &prev_u, &ids, &us_l, &mut bump);
        }
        prev_ids = ids;
        prev_u = us_l;
    }
    for v in &vertices[n_orig_v..] {
        if mesh.contains(*v) {
            return Err(Error::Augmentation(format!("bump vertex {v:?} falls inside the domain")));
        }
    }
    let mut triangles = mesh.triangles().to_vec();
    let n_orig_t = triangles.len();
    orient(&vertices, &mut bump);
    triangles.extend(bump);
    let eligible: Vec<bool> = (0..triangles.len()).map(|t| t >= n_orig_t).collect();
    delaunay_flips(&vertices, &mut triangles, &HashSet::new(), &eligible);

    let orig_edges: HashMap<(usize, usize), usize> = mesh
        .boundary_edges()
        .iter()
        .enumerate()
        .map(|(k, e)| (key(e.nodes[0], e.nodes[1]), k))
        .collect();
    let mut count: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
    for tri in &triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            count.entry(key(a, b)).or_insert((0, [a, b])).0 += 1;
        }
    }
    let mut boundary: Vec<BoundaryEdge> = count
        .values()
        .filter(|(c, _)| *c == 1)
        .map(|&(_, nodes)| {
            let label = if orig_edges.contains_key(&key(nodes[0], nodes[1])) { Portion::Delta } else { Portion::Gamma };
            BoundaryEdge { nodes, label }
        })
        .collect();
    boundary.sort_by_key(|e| (e.nodes[0], e.nodes[1]));
    let shared_interface: Vec<usize> = orig_edges
        .iter()
        .filter(|(k, _)| count.get(k).is_some_and(|(c, _)| *c == 2))
        .map(|(_, &e)| e)
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let outer: HashSet<usize> = prev_ids.iter().copied().collect();
    let (w0, w1) = if closed { (us + 0.375 * TAU, us + 0.625 * TAU) } else { (us + 0.25 * (ue - us), ue - 0.25 * (ue - us)) };
    let s_patch: Vec<usize> = boundary
        .iter()
        .enumerate()
        .filter(|(_, e)| e.nodes.iter().all(|v| outer.contains(v)))
        .filter(|(_, e)| {
            let (a, b) = (vertices[e.nodes[0]], vertices[e.nodes[1]]);
            let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
            let mut u = frame.param(mid);
            if matches!(frame, Frame::Arc { .. }) {
                u = us + (u - us).rem_euclid(TAU);
            }
            u > w0 && u < w1
        })
        .map(|(k, _)| k)
        .collect();
    if s_patch.is_empty() {
        return Err(Error::Augmentation("empty S patch".into()));
    }
    let aug_mesh = MeshDomain::new(vertices, triangles, boundary, mesh.descriptor(), BoundaryShape::Polygonal)?;
    Ok(AugmentedDomain {
        mesh: Arc::new(aug_mesh),
        original: mesh.clone(),
        shared_interface,
        s_patch,
        rho,
    })
}

fn push_layer(vertices: &mut Vec<Point>, frame: &Frame, u: &[f64], d: f64) -> Vec<usize> {
    u.iter()
        .map(|&ui| {
            vertices.push(frame.point(ui, d));
            vertices.len() - 1
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{compute_rho_sets, generate_mesh, GammaSpec, Shape};
    use std::f64::consts::PI;

    #[test]
    fn disk_bump_satisfies_distance_requirements() {
        let m = Arc::new(generate_mesh(Shape::UnitDisk, 0.05, GammaSpec::upper_half_circle()).unwrap());
        let s = compute_rho_sets(&m, PI / 4.0).unwrap();
        let aug = augment_domain(&m, &s).unwrap();
        let r = aug.check_invariants(&s);
        assert!(r.passes(), "{r:?}");
        assert!(r.u_rho_boundary_distance >= PI / 8.0);
        for i in 0..m.n_vertices() {
            assert_eq!(aug.mesh.vertex(i), m.vertex(i));
        }
        assert_eq!(&aug.mesh.triangles()[..m.n_triangles()], m.triangles());
        assert!(aug.mesh.total_area() > m.total_area());
    }

    #[test]
    fn square_bump_and_full_circle_annulus() {
        let m = Arc::new(generate_mesh(Shape::UnitSquare, 0.05, GammaSpec::square_top()).unwrap());
        let s = compute_rho_sets(&m, 0.3).unwrap();
        let aug = augment_domain(&m, &s).unwrap();
        assert!(aug.check_invariants(&s).passes());

        let m = Arc::new(generate_mesh(Shape::UnitDisk, 0.1, GammaSpec::Full).unwrap());
        let s = compute_rho_sets(&m, 0.5).unwrap();
        let aug = augment_domain(&m, &s).unwrap();
        let outer = 1.0 + BUMP_THICKNESS * 0.5;
        let area = aug.mesh.total_area();
        assert!((area - PI * outer * outer).abs() < 0.03 * area);
        assert_eq!(aug.shared_interface.len(), m.boundary_edges().len());
    }
}
