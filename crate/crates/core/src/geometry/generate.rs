use super::mesh::{
    dist, signed_area, BoundaryEdge, BoundaryShape, LipschitzDescriptor, MeshDomain, Point, Portion,
};
use crate::error::{Error, Result};
use std::collections::{HashMap, HashSet};
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    UnitDisk,
    UnitSquare,
}

/// Boundary arc Γ in the shape's boundary parameter: the polar angle for the disk,
/// the counterclockwise perimeter coordinate in `[0,4)` (starting at the origin) for the square.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum GammaSpec {
    Full,
    Arc { start: f64, end: f64 },
}

impl GammaSpec {
    pub fn upper_half_circle() -> Self {
        GammaSpec::Arc { start: 0.0, end: PI }
    }

    pub fn square_top() -> Self {
        GammaSpec::Arc { start: 2.0, end: 3.0 }
    }
}

pub const DISK_DESCRIPTOR: LipschitzDescriptor = LipschitzDescriptor { l: 0.75, r: 0.6, h: 0.45 };
pub const SQUARE_DESCRIPTOR: LipschitzDescriptor = LipschitzDescriptor { l: 1.0, r: 0.5, h: 0.5 };

pub fn generate_mesh(shape: Shape, h_mesh: f64, gamma: GammaSpec) -> Result<MeshDomain> {
    match shape {
        Shape::UnitDisk => generate_disk([0.0, 0.0], 1.0, h_mesh, gamma),
        Shape::UnitSquare => generate_square(h_mesh, gamma),
    }
}

fn check_arc(total: f64, h: f64, gamma: GammaSpec) -> Result<(f64, f64)> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidInput(format!("h_mesh must be positive, got {h}")));
    }
    let (start, len) = match gamma {
        GammaSpec::Full => (0.0, total),
        GammaSpec::Arc { start, end } => {
            let len = end - start;
            if !(len > 0.0) || len >= total || !start.is_finite() {
                return Err(Error::InvalidInput(format!("Gamma arc ({start}, {end}) is not a proper open arc")));
            }
            (start.rem_euclid(total), len)
        }
    };
    if h > 0.5 * len {
        return Err(Error::UnresolvedGamma { h, arc: len });
    }
    Ok((start, len))
}

/// Ring mesh of a disk, Delaunay-improved by edge flips.
pub fn generate_disk(center: Point, radius: f64, h: f64, gamma: GammaSpec) -> Result<MeshDomain> {
    let (g0, g_len_param) = check_arc(TAU, h / radius, gamma)?;
    let full = matches!(gamma, GammaSpec::Full);
    let mut angles: Vec<f64> = Vec::new();
    let mut labels: Vec<Portion> = Vec::new();
    if full {
        let n = ((TAU * radius / h).ceil() as usize).max(6);
        for i in 0..n {
            angles.push(g0 + TAU * i as f64 / n as f64);
            labels.push(Portion::Gamma);
        }
    } else {
        let lg = g_len_param;
        let ld = TAU - lg;
        let ng = ((lg * radius / h).ceil() as usize).max(2);
        let nd = ((ld * radius / h).ceil() as usize).max(2);
        for i in 0..ng {
            angles.push(g0 + lg * i as f64 / ng as f64);
            labels.push(Portion::Gamma);
        }
        for i in 0..nd {
            angles.push(g0 + lg + ld * i as f64 / nd as f64);
            labels.push(Portion::Delta);
        }
    }
    let dr_target = h * 3f64.sqrt() / 2.0;
    let n_rings = ((radius / dr_target).round() as usize).max(1);
    let mut vertices: Vec<Point> = vec![center];
    let mut rings: Vec<(Vec<usize>, Vec<f64>)> = vec![(vec![0], vec![g0])];
    for k in 1..n_rings {
        let r = radius * k as f64 / n_rings as f64;
        let m = ((TAU * r / h).round() as usize).max(6);
        let off = if k % 2 == 1 { 0.5 * TAU / m as f64 } else { 0.0 };
        let mut ids = Vec::with_capacity(m);
        let mut ang = Vec::with_capacity(m);
        for i in 0..m {
            let a = g0 + off + TAU * i as f64 / m as f64;
            ids.push(vertices.len());
            ang.push(a);
            vertices.push([center[0] + r * a.cos(), center[1] + r * a.sin()]);
        }
        rings.push((ids, ang));
    }
    let mut ids = Vec::with_capacity(angles.len());
    for &a in &angles {
        ids.push(vertices.len());
        vertices.push([center[0] + radius * a.cos(), center[1] + radius * a.sin()]);
    }
    let outer = ids.clone();
    rings.push((ids, angles.clone()));
    let mut triangles = Vec::new();
    for k in 1..rings.len() {
        merge_closed(&rings[k - 1], &rings[k], &mut triangles);
    }
    orient(&vertices, &mut triangles);
    let nb = outer.len();
    let boundary: Vec<BoundaryEdge> = (0..nb)
        .map(|i| BoundaryEdge { nodes: [outer[i], outer[(i + 1) % nb]], label: labels[i] })
        .collect();
    let constrained: HashSet<(usize, usize)> = boundary.iter().map(|e| key(e.nodes[0], e.nodes[1])).collect();
    let all: Vec<bool> = vec![true; triangles.len()];
    delaunay_flips(&vertices, &mut triangles, &constrained, &all);
    MeshDomain::new(vertices, triangles, boundary, DISK_DESCRIPTOR, BoundaryShape::Disk { center, radius })
}

/// Structured right-triangle mesh of the unit square.
pub fn generate_square(h: f64, gamma: GammaSpec) -> Result<MeshDomain> {
    check_arc(4.0, h, gamma)?;
    let n = ((1.0 / h).ceil() as usize).max(1);
    let nf = n as f64;
    let (s0, s1) = match gamma {
        GammaSpec::Full => (0.0, 4.0),
        GammaSpec::Arc { start, end } => {
            let s0 = (start.rem_euclid(4.0) * nf).round() / nf;
            let s1 = s0 + ((end - start) * nf).round() / nf;
            if s1 <= s0 {
                return Err(Error::UnresolvedGamma { h, arc: end - start });
            }
            (s0, s1)
        }
    };
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut loop_nodes = Vec::with_capacity(4 * n);
    for i in 0..n {
        loop_nodes.push(id(i, 0));
    }
    for j in 0..n {
        loop_nodes.push(id(n, j));
    }
    for i in (1..=n).rev() {
        loop_nodes.push(id(i, n));
    }
    for j in (1..=n).rev() {
        loop_nodes.push(id(0, j));
    }
    let m = loop_nodes.len();
    let boundary = (0..m)
        .map(|k| {
            let mid = (k as f64 + 0.5) / nf;
            let inside = (mid - s0).rem_euclid(4.0) < s1 - s0;
            let label = if inside { Portion::Gamma } else { Portion::Delta };
            BoundaryEdge { nodes: [loop_nodes[k], loop_nodes[(k + 1) % m]], label }
        })
        .collect();
    MeshDomain::new(
        vertices,
        triangles,
        boundary,
        SQUARE_DESCRIPTOR,
        BoundaryShape::Square { origin: [0.0, 0.0], side: 1.0 },
    )
}

/// Triangulates the band between two closed angle-sorted rings.
pub(crate) fn merge_closed(inner: &(Vec<usize>, Vec<f64>), outer: &(Vec<usize>, Vec<f64>), out: &mut Vec<[usize; 3]>) {
    let (a_ids, a_ang) = inner;
    let (b_ids, b_ang) = outer;
    let (na, nb) = (a_ids.len(), b_ids.len());
    if na == 1 {
        for j in 0..nb {
            out.push([a_ids[0], b_ids[j], b_ids[(j + 1) % nb]]);
        }
        return;
    }
    let a0 = a_ang[0];
    let unwrap = |x: f64| a0 + (x - a0 + PI).rem_euclid(TAU) - PI;
    let j0 = (0..nb)
        .min_by(|&p, &q| (unwrap(b_ang[p]) - a0).abs().total_cmp(&(unwrap(b_ang[q]) - a0).abs()))
        .unwrap();
    let ua: Vec<f64> = (0..=na).map(|i| a0 + (a_ang[i % na] - a0).rem_euclid(TAU) + if i == na { TAU } else { 0.0 }).collect();
    let bstart = unwrap(b_ang[j0]);
    let ub: Vec<f64> = (0..=nb)
        .map(|j| bstart + (b_ang[(j0 + j) % nb] - bstart).rem_euclid(TAU) + if j == nb { TAU } else { 0.0 })
        .collect();
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let step_b = if i == na {
            true
        } else if j == nb {
            false
        } else {
            ub[j + 1] < ua[i + 1]
        };
        let a = a_ids[i % na];
        let b = b_ids[(j0 + j) % nb];
        if step_b {
            out.push([a, b, b_ids[(j0 + j + 1) % nb]]);
            j += 1;
        } else {
            out.push([a, b, a_ids[(i + 1) % na]]);
            i += 1;
        }
    }
}

/// Triangulates the band between two open polylines sharing the parameter range.
pub(crate) fn merge_open(a_ids: &[usize], ua: &[f64], b_ids: &[usize], ub: &[f64], out: &mut Vec<[usize; 3]>) {
    let (na, nb) = (a_ids.len() - 1, b_ids.len() - 1);
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let step_b = if i == na {
            true
        } else if j == nb {
            false
        } else {
            ub[j + 1] < ua[i + 1]
        };
        if step_b {
            out.push([a_ids[i], b_ids[j], b_ids[j + 1]]);
            j += 1;
        } else {
            out.push([a_ids[i], b_ids[j], a_ids[i + 1]]);
            i += 1;
        }
    }
}

pub(crate) fn orient(vertices: &[Point], triangles: &mut [[usize; 3]]) {
    for t in triangles.iter_mut() {
        if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) < 0.0 {
            t.swap(1, 2);
        }
    }
}

pub(crate) fn key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

/// Lawson flips toward the Delaunay condition on edges shared by two eligible triangles.
pub(crate) fn delaunay_flips(
    vertices: &[Point],
    triangles: &mut [[usize; 3]],
    constrained: &HashSet<(usize, usize)>,
    eligible: &[bool],
) -> usize {
    let mut flips = 0;
    for _sweep in 0..100 {
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if !eligible[t] {
                continue;
            }
            for k in 0..3 {
                edge_tris.entry(key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        let mut touched = vec![false; triangles.len()];
        let mut changed = false;
        let mut keys: Vec<_> = edge_tris.keys().copied().collect();
        keys.sort_unstable();
        for e in keys {
            let ts = &edge_tris[&e];
            if ts.len() != 2 || constrained.contains(&e) {
                continue;
            }
            let (t1, t2) = (ts[0], ts[1]);
            if touched[t1] || touched[t2] {
                continue;
            }
            let opp = |t: usize| triangles[t].iter().copied().find(|&v| v != e.0 && v != e.1).unwrap();
            let (p, q) = (opp(t1), opp(t2));
            let angle = |o: usize| {
                let (u, v) = (vertices[e.0], vertices[e.1]);
                let w = vertices[o];
                let a = [u[0] - w[0], u[1] - w[1]];
                let b = [v[0] - w[0], v[1] - w[1]];
                (a[0] * b[1] - a[1] * b[0]).abs().atan2(a[0] * b[0] + a[1] * b[1])
            };
            if angle(p) + angle(q) <= PI + 1e-12 {
                continue;
            }
            let n1 = [p, q, e.0];
            let n2 = [q, p, e.1];
            let a1 = signed_area(vertices[n1[0]], vertices[n1[1]], vertices[n1[2]]).abs();
            let a2 = signed_area(vertices[n2[0]], vertices[n2[1]], vertices[n2[2]]).abs();
            let d = dist(vertices[p], vertices[q]);
            if a1 <= 1e-12 * d * d || a2 <= 1e-12 * d * d {
                continue;
            }
            triangles[t1] = n1;
            triangles[t2] = n2;
            touched[t1] = true;
            touched[t2] = true;
            changed = true;
            flips += 1;
        }
        orient(vertices, triangles);
        if !changed {
            break;
        }
    }
    flips
}
