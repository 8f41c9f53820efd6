use crate::error::{Error, Result};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

pub type Point = [f64; 2];

/// Lipschitz character `(L, r, h)` of the boundary.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LipschitzDescriptor {
    pub l: f64,
    pub r: f64,
    pub h: f64,
}

impl LipschitzDescriptor {
    pub fn new(l: f64, r: f64, h: f64) -> Result<Self> {
        let d = LipschitzDescriptor { l, r, h };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l > 0.0 && self.r > 0.0 && self.h > 0.0) {
            return Err(Error::InvalidMesh(format!("descriptor entries must be positive: {self:?}")));
        }
        if self.h < self.l * self.r * (1.0 - 1e-12) {
            return Err(Error::InvalidMesh(format!("descriptor needs h >= L r: {self:?}")));
        }
        Ok(())
    }

    /// The nontangentiality constant `1/√(1+L²)`.
    pub fn c_lower(&self) -> f64 {
        1.0 / (1.0 + self.l * self.l).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Portion {
    Gamma,
    Delta,
}

impl Portion {
    pub fn letter(self) -> char {
        match self {
            Portion::Gamma => 'G',
            Portion::Delta => 'D',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Oriented so that the domain lies on the left.
    pub nodes: [usize; 2],
    pub label: Portion,
}

/// Analytic description of the boundary, when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryShape {
    Disk { center: Point, radius: f64 },
    Square { origin: Point, side: f64 },
    Polygonal,
}

/// A 2D P1 triangulation with boundary portions Γ and Δ.
#[derive(Debug, Clone)]
pub struct MeshDomain {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    descriptor: LipschitzDescriptor,
    shape: BoundaryShape,
    mesh_size: f64,
    topo: Topology,
    locator: OnceLock<Locator>,
}

#[derive(Debug, Clone)]
struct Topology {
    is_boundary: Vec<bool>,
    boundary_nodes: Vec<usize>,
    gamma_path: Vec<usize>,
    gamma_edges: Vec<usize>,
    gamma_arclength: Vec<f64>,
    gamma_closed: bool,
}

impl MeshDomain {
    pub fn new(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary_edges: Vec<BoundaryEdge>,
        descriptor: LipschitzDescriptor,
        shape: BoundaryShape,
    ) -> Result<Self> {
        descriptor.validate()?;
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh needs at least one triangle".into()));
        }
        if vertices.iter().any(|v| !v[0].is_finite() || !v[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite vertex coordinate".into()));
        }
        let mut mesh_size = 0.0f64;
        let mut edge_count: HashMap<(usize, usize), (usize, bool)> = HashMap::new();
        for t in &triangles {
            if t.iter().any(|&i| i >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("bad triangle {t:?}")));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                mesh_size = mesh_size.max(dist(vertices[a], vertices[b]));
                let key = (a.min(b), a.max(b));
                let e = edge_count.entry(key).or_insert((0, a < b));
                e.0 += 1;
            }
        }
        for t in &triangles {
            let area = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if area <= 1e-14 * mesh_size * mesh_size {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t:?} is not positively oriented (area {area:e})"
                )));
            }
        }
        let mut is_boundary = vec![false; nv];
        let mut seen = HashMap::new();
        for (k, e) in boundary_edges.iter().enumerate() {
            let [a, b] = e.nodes;
            if a >= nv || b >= nv {
                return Err(Error::InvalidMesh(format!("boundary edge {:?} out of range", e.nodes)));
            }
            let key = (a.min(b), a.max(b));
            match edge_count.get(&key) {
                Some((1, forward)) => {
                    if *forward != (a < b) {
                        return Err(Error::InvalidMesh(format!(
                            "boundary edge {:?} has the domain on its right",
                            e.nodes
                        )));
                    }
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "boundary edge {:?} does not belong to exactly one triangle",
                        e.nodes
                    )))
                }
            }
            if seen.insert(key, k).is_some() {
                return Err(Error::InvalidMesh(format!("duplicate boundary edge {:?}", e.nodes)));
            }
            is_boundary[a] = true;
            is_boundary[b] = true;
        }
        for (key, (count, _)) in &edge_count {
            if *count > 2 {
                return Err(Error::InvalidMesh(format!("edge {key:?} shared by {count} triangles")));
            }
            if *count == 1 && !seen.contains_key(key) {
                return Err(Error::InvalidMesh(format!("unlabeled boundary edge {key:?}")));
            }
        }
        let topo = build_topology(&vertices, &boundary_edges, is_boundary)?;
        Ok(MeshDomain {
            vertices,
            triangles,
            boundary_edges,
            descriptor,
            shape,
            mesh_size,
            topo,
            locator: OnceLock::new(),
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn descriptor(&self) -> LipschitzDescriptor {
        self.descriptor
    }

    pub fn shape(&self) -> BoundaryShape {
        self.shape
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.mesh_size
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.topo.is_boundary[i]
    }

    /// Sorted boundary vertex indices.
    pub fn boundary_nodes(&self) -> &[usize] {
        &self.topo.boundary_nodes
    }

    pub fn interior_nodes(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&i| !self.topo.is_boundary[i]).collect()
    }

    /// Γ̄ vertices ordered along Γ (for a closed Γ the loop, without repetition).
    pub fn gamma_path(&self) -> &[usize] {
        &self.topo.gamma_path
    }

    /// Boundary-edge indices of Γ in path order.
    pub fn gamma_edges(&self) -> &[usize] {
        &self.topo.gamma_edges
    }

    /// Arclength of each `gamma_path` vertex measured from the start of Γ.
    pub fn gamma_arclength(&self) -> &[f64] {
        &self.topo.gamma_arclength
    }

    pub fn gamma_closed(&self) -> bool {
        self.topo.gamma_closed
    }

    pub fn gamma_length(&self) -> f64 {
        let e = self.topo.gamma_edges.len();
        if e == 0 {
            return 0.0;
        }
        let [a, b] = self.boundary_edges[self.topo.gamma_edges[e - 1]].nodes;
        let last = *self.topo.gamma_arclength.last().unwrap();
        if self.topo.gamma_closed {
            last + dist(self.vertices[a], self.vertices[b])
        } else {
            last
        }
    }

    /// Vertices of Γ with no Δ-edge attached (the H^{1/2}_co degrees of freedom).
    pub fn gamma_interior_nodes(&self) -> Vec<usize> {
        let p = &self.topo.gamma_path;
        if self.topo.gamma_closed {
            p.clone()
        } else if p.len() <= 2 {
            Vec::new()
        } else {
            p[1..p.len() - 1].to_vec()
        }
    }

    /// Boundary vertices not on Γ̄.
    pub fn delta_nodes(&self) -> Vec<usize> {
        let mut on_gamma = vec![false; self.n_vertices()];
        for &i in &self.topo.gamma_path {
            on_gamma[i] = true;
        }
        self.boundary_nodes().iter().copied().filter(|&i| !on_gamma[i]).collect()
    }

    /// Lumped boundary mass weight of each vertex (zero off the boundary).
    pub fn boundary_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n_vertices()];
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            let l = dist(self.vertices[a], self.vertices[b]);
            w[a] += 0.5 * l;
            w[b] += 0.5 * l;
        }
        w
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| dist(self.vertices[e.nodes[0]], self.vertices[e.nodes[1]])).sum()
    }

    /// Outward unit normal of a boundary edge.
    pub fn edge_normal(&self, e: &BoundaryEdge) -> Point {
        let (a, b) = (self.vertices[e.nodes[0]], self.vertices[e.nodes[1]]);
        let t = [b[0] - a[0], b[1] - a[1]];
        let l = norm(t);
        [t[1] / l, -t[0] / l]
    }

    /// Euclidean distance from `x` to the polygonal boundary, and the nearest boundary point.
    pub fn boundary_distance(&self, x: Point) -> (f64, Point) {
        let mut best = (f64::INFINITY, x);
        for e in &self.boundary_edges {
            let (d, p) = segment_distance(x, self.vertices[e.nodes[0]], self.vertices[e.nodes[1]]);
            if d < best.0 {
                best = (d, p);
            }
        }
        best
    }

    /// Smooth nontangential unit field at a boundary point.
    pub fn nontangential_field(&self, x: Point) -> Point {
        match self.shape {
            BoundaryShape::Disk { center, .. } => normalize([x[0] - center[0], x[1] - center[1]]),
            BoundaryShape::Square { origin, side } => {
                let tol = 1e-9 * side;
                let mut n = [0.0, 0.0];
                if (x[0] - origin[0]).abs() <= tol {
                    n[0] -= 1.0;
                }
                if (x[0] - origin[0] - side).abs() <= tol {
                    n[0] += 1.0;
                }
                if (x[1] - origin[1]).abs() <= tol {
                    n[1] -= 1.0;
                }
                if (x[1] - origin[1] - side).abs() <= tol {
                    n[1] += 1.0;
                }
                if n == [0.0, 0.0] {
                    self.polygonal_normal(x)
                } else {
                    normalize(n)
                }
            }
            BoundaryShape::Polygonal => self.polygonal_normal(x),
        }
    }

    fn vertex_normals(&self) -> HashMap<usize, Point> {
        let mut acc: HashMap<usize, Point> = HashMap::new();
        for e in &self.boundary_edges {
            let n = self.edge_normal(e);
            for &v in &e.nodes {
                let s = acc.entry(v).or_insert([0.0, 0.0]);
                s[0] += n[0];
                s[1] += n[1];
            }
        }
        acc.into_iter().map(|(k, v)| (k, normalize(v))).collect()
    }

    fn polygonal_normal(&self, x: Point) -> Point {
        let mut best = (f64::INFINITY, 0usize, 0.0);
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let (a, b) = (self.vertices[e.nodes[0]], self.vertices[e.nodes[1]]);
            let (d, _) = segment_distance(x, a, b);
            if d < best.0 {
                best = (d, k, segment_param(x, a, b));
            }
        }
        let e = self.boundary_edges[best.1];
        let vn = self.vertex_normals();
        let (na, nb) = (vn[&e.nodes[0]], vn[&e.nodes[1]]);
        let s = best.2;
        normalize([(1.0 - s) * na[0] + s * nb[0], (1.0 - s) * na[1] + s * nb[1]])
    }

    /// Locates the triangle containing `x` and its barycentric coordinates.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        self.locator.get_or_init(|| Locator::new(self)).locate(self, x)
    }

    pub fn contains(&self, x: Point) -> bool {
        self.locate(x).is_some()
    }

    /// P1 interpolation of nodal values at `x`.
    pub fn interpolate(&self, values: &[f64], x: Point) -> Option<f64> {
        self.locate(x).map(|(t, l)| {
            let tri = self.triangles[t];
            l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]]
        })
    }

    /// Mesh text serialization.
    pub fn to_text(&self) -> String {
        let d = self.descriptor;
        let mut s = String::new();
        let _ = writeln!(s, "meshdomain 1 {} {} {}", fmt17(d.l), fmt17(d.r), fmt17(d.h));
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {}", fmt17(v[0]), fmt17(v[1]));
        }
        for t in &self.triangles {
            let _ = writeln!(s, "t {} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary_edges {
            let _ = writeln!(s, "be {} {} {}", e.nodes[0], e.nodes[1], e.label.letter());
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |n: usize, msg: &str| Error::Parse(format!("mesh line {}: {msg}", n + 1));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (n0, header) = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 5 || h[0] != "meshdomain" || h[1] != "1" {
            return Err(bad(n0, "expected `meshdomain 1 L r h`"));
        }
        let num = |n: usize, s: &str| s.parse::<f64>().map_err(|_| bad(n, "bad number"));
        let idx = |n: usize, s: &str| s.parse::<usize>().map_err(|_| bad(n, "bad index"));
        let descriptor = LipschitzDescriptor { l: num(n0, h[2])?, r: num(n0, h[3])?, h: num(n0, h[4])? };
        let (mut vs, mut ts, mut bes) = (Vec::new(), Vec::new(), Vec::new());
        for (n, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            match (f[0], f.len()) {
                ("v", 3) => vs.push([num(n, f[1])?, num(n, f[2])?]),
                ("t", 4) => ts.push([idx(n, f[1])?, idx(n, f[2])?, idx(n, f[3])?]),
                ("be", 4) => {
                    let label = match f[3] {
                        "G" => Portion::Gamma,
                        "D" => Portion::Delta,
                        _ => return Err(bad(n, "label must be G or D")),
                    };
                    bes.push(BoundaryEdge { nodes: [idx(n, f[1])?, idx(n, f[2])?], label });
                }
                _ => return Err(bad(n, "unknown record")),
            }
        }
        MeshDomain::new(vs, ts, bes, descriptor, BoundaryShape::Polygonal)
    }

    /// Short SHA-256 digest of the text serialization.
    pub fn hash(&self) -> String {
        short_hash(self.to_text().as_bytes())
    }

    /// Rebuilds the mesh with a different analytic shape tag.
    pub fn with_shape(mut self, shape: BoundaryShape) -> Self {
        self.shape = shape;
        self
    }
}

pub fn short_hash(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// 17 significant digits, round-trip exact.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn build_topology(vertices: &[Point], edges: &[BoundaryEdge], is_boundary: Vec<bool>) -> Result<Topology> {
    let boundary_nodes: Vec<usize> = (0..vertices.len()).filter(|&i| is_boundary[i]).collect();
    let mut next: HashMap<usize, usize> = HashMap::new();
    for (k, e) in edges.iter().enumerate() {
        if next.insert(e.nodes[0], k).is_some() {
            return Err(Error::InvalidMesh(format!("boundary vertex {} is not manifold", e.nodes[0])));
        }
    }
    for e in edges {
        if !next.contains_key(&e.nodes[1]) {
            return Err(Error::InvalidMesh("boundary edges do not form closed loops".into()));
        }
    }
    let gamma: Vec<usize> = (0..edges.len()).filter(|&k| edges[k].label == Portion::Gamma).collect();
    if gamma.is_empty() {
        return Err(Error::InvalidMesh("no Gamma edges".into()));
    }
    let mut is_gamma_start = vec![false; edges.len()];
    let mut prev_label: HashMap<usize, Portion> = HashMap::new();
    for e in edges {
        prev_label.insert(e.nodes[1], e.label);
    }
    let mut starts = Vec::new();
    for &k in &gamma {
        if prev_label[&edges[k].nodes[0]] != Portion::Gamma {
            is_gamma_start[k] = true;
            starts.push(k);
        }
    }
    let (first, closed) = match starts.len() {
        0 => (gamma[0], true),
        1 => (starts[0], false),
        n => return Err(Error::InvalidMesh(format!("Gamma consists of {n} disconnected arcs"))),
    };
    let mut gamma_edges = vec![first];
    let mut path = vec![edges[first].nodes[0]];
    let mut arc = vec![0.0];
    let mut cur = first;
    loop {
        let [a, b] = edges[cur].nodes;
        let s = arc.last().unwrap() + dist(vertices[a], vertices[b]);
        let k = next[&b];
        if closed && k == first {
            break;
        }
        path.push(b);
        arc.push(s);
        if edges[k].label != Portion::Gamma {
            break;
        }
        gamma_edges.push(k);
        cur = k;
    }
    if gamma_edges.len() != gamma.len() {
        return Err(Error::InvalidMesh("Gamma edges are not a single connected arc".into()));
    }
    Ok(Topology {
        is_boundary,
        boundary_nodes,
        gamma_path: path,
        gamma_edges,
        gamma_arclength: arc,
        gamma_closed: closed,
    })
}

/// Uniform bucket grid over triangle bounding boxes.
#[derive(Debug, Clone)]
struct Locator {
    origin: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl Locator {
    fn new(mesh: &MeshDomain) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let area = ((hi[0] - lo[0]) * (hi[1] - lo[1])).max(1e-300);
        let cell = (area / mesh.n_triangles() as f64).sqrt().max(1e-12) * 1.5;
        let nx = (((hi[0] - lo[0]) / cell) as usize + 1).min(4096);
        let ny = (((hi[1] - lo[1]) / cell) as usize + 1).min(4096);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let p = tri.map(|i| mesh.vertices[i]);
            let bx0 = p.iter().map(|q| q[0]).fold(f64::INFINITY, f64::min);
            let bx1 = p.iter().map(|q| q[0]).fold(f64::NEG_INFINITY, f64::max);
            let by0 = p.iter().map(|q| q[1]).fold(f64::INFINITY, f64::min);
            let by1 = p.iter().map(|q| q[1]).fold(f64::NEG_INFINITY, f64::max);
            let (i0, i1) = (Self::idx(bx0, lo[0], cell, nx), Self::idx(bx1, lo[0], cell, nx));
            let (j0, j1) = (Self::idx(by0, lo[1], cell, ny), Self::idx(by1, lo[1], cell, ny));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t as u32);
                }
            }
        }
        Locator { origin: lo, cell, nx, ny, buckets }
    }

    fn idx(x: f64, lo: f64, cell: f64, n: usize) -> usize {
        (((x - lo) / cell).floor().max(0.0) as usize).min(n - 1)
    }

    fn locate(&self, mesh: &MeshDomain, x: Point) -> Option<(usize, [f64; 3])> {
        let fx = (x[0] - self.origin[0]) / self.cell;
        let fy = (x[1] - self.origin[1]) / self.cell;
        if fx < -1e-9 || fy < -1e-9 || fx > self.nx as f64 + 1e-9 || fy > self.ny as f64 + 1e-9 {
            return None;
        }
        let i = (fx.floor().max(0.0) as usize).min(self.nx - 1);
        let j = (fy.floor().max(0.0) as usize).min(self.ny - 1);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let t = t as usize;
            let [a, b, c] = mesh.triangle_points(t);
            let l = barycentric(x, a, b, c);
            let worst = l[0].min(l[1]).min(l[2]);
            if worst >= 0.0 {
                return Some((t, l));
            }
            if best.as_ref().is_none_or(|bst| worst > bst.2) {
                best = Some((t, l, worst));
            }
        }
        match best {
            Some((t, l, w)) if w > -1e-11 => Some((t, l.map(|v| v.max(0.0)))),
            _ => None,
        }
    }
}

pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub fn barycentric(x: Point, a: Point, b: Point, c: Point) -> [f64; 3] {
    let area = signed_area(a, b, c);
    let l0 = signed_area(x, b, c) / area;
    let l1 = signed_area(a, x, c) / area;
    [l0, l1, 1.0 - l0 - l1]
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn norm(v: Point) -> f64 {
    (v[0] * v[0] + v[1] * v[1]).sqrt()
}

pub fn normalize(v: Point) -> Point {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// Parameter in `[0,1]` of the point of segment `ab` nearest to `x`.
pub fn segment_param(x: Point, a: Point, b: Point) -> f64 {
    let e = [b[0] - a[0], b[1] - a[1]];
    let l2 = e[0] * e[0] + e[1] * e[1];
    if l2 == 0.0 {
        return 0.0;
    }
    (((x[0] - a[0]) * e[0] + (x[1] - a[1]) * e[1]) / l2).clamp(0.0, 1.0)
}

pub fn segment_distance(x: Point, a: Point, b: Point) -> (f64, Point) {
    let s = segment_param(x, a, b);
    let p = [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])];
    (dist(x, p), p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_triangles() -> MeshDomain {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let t = vec![[0, 1, 2], [0, 2, 3]];
        let e = |a, b, l| BoundaryEdge { nodes: [a, b], label: l };
        let be = vec![
            e(0, 1, Portion::Delta),
            e(1, 2, Portion::Delta),
            e(2, 3, Portion::Gamma),
            e(3, 0, Portion::Delta),
        ];
        MeshDomain::new(v, t, be, LipschitzDescriptor::new(1.0, 0.5, 0.5).unwrap(), BoundaryShape::Polygonal)
            .unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = two_triangles();
        let back = MeshDomain::from_text(&m.to_text()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
        assert_eq!(back.hash(), m.hash());
    }

    #[test]
    fn rejects_clockwise_triangles() {
        let v = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        let be = vec![
            BoundaryEdge { nodes: [0, 1], label: Portion::Gamma },
            BoundaryEdge { nodes: [1, 2], label: Portion::Delta },
            BoundaryEdge { nodes: [2, 0], label: Portion::Delta },
        ];
        let d = LipschitzDescriptor::new(1.0, 0.5, 0.5).unwrap();
        assert!(MeshDomain::new(v, vec![[0, 1, 2]], be, d, BoundaryShape::Polygonal).is_err());
    }

    #[test]
    fn gamma_path_and_location() {
        let m = two_triangles();
        assert_eq!(m.gamma_path(), &[2, 3]);
        assert!(m.gamma_interior_nodes().is_empty());
        assert_eq!(m.delta_nodes(), vec![0, 1]);
        let (t, l) = m.locate([0.75, 0.25]).unwrap();
        assert_eq!(t, 0);
        assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(m.locate([1.5, 0.5]).is_none());
    }

    #[test]
    fn descriptor_requires_h_above_lr() {
        assert!(LipschitzDescriptor::new(1.0, 1.0, 0.5).is_err());
        assert!(LipschitzDescriptor::new(0.0, 1.0, 0.5).is_err());
    }
}
