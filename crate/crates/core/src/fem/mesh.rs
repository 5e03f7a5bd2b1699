//! Triangle meshes with boundary tags and periodic node identifications.

use std::collections::HashMap;

use nalgebra::Vector2;

use crate::geometry::Shape2;

pub type Point2 = Vector2<f64>;

/// Region tag of pore-space triangles.
pub const REGION_PORE: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeTag {
    Outer,
    Interface,
}

impl EdgeTag {
    pub fn code(self) -> u32 {
        match self {
            EdgeTag::Outer => 0,
            EdgeTag::Interface => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(EdgeTag::Outer),
            1 => Some(EdgeTag::Interface),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: EdgeTag,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<u32>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// `(master, slave)` identifications across opposite faces of the cell.
    pub periodic_pairs: Vec<(usize, usize)>,
    /// Nominal mesh size used at generation.
    pub mesh_size: f64,
}

/// Summary of [`Mesh::check`].
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MeshReport {
    pub nodes: usize,
    pub triangles: usize,
    pub boundary_edges: usize,
    pub periodic_pairs: usize,
    pub area: f64,
    pub min_angle_deg: f64,
    pub min_signed_area: f64,
    pub interface_length: f64,
    /// Largest level-set residual of interface nodes (0 without a shape).
    pub interface_residual: f64,
    /// Largest distance from an interface edge midpoint to Γ.
    pub chord_error: f64,
    pub unmatched_periodic_nodes: usize,
}

impl MeshReport {
    pub fn is_valid(&self) -> bool {
        self.min_signed_area > 0.0 && self.min_angle_deg >= 15.0 && self.unmatched_periodic_nodes == 0
    }
}

impl Mesh {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn corners(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corners(t);
        0.5 * ((b - a).perp(&(c - a)))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }

    /// Indices into `boundary_edges` of the interface edges, in storage order.
    pub fn interface_edges(&self) -> Vec<usize> {
        self.edges_with(EdgeTag::Interface)
    }

    pub fn outer_edges(&self) -> Vec<usize> {
        self.edges_with(EdgeTag::Outer)
    }

    fn edges_with(&self, tag: EdgeTag) -> Vec<usize> {
        self.boundary_edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tag == tag)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.boundary_edges[e].nodes;
        (self.nodes[b] - self.nodes[a]).norm()
    }

    pub fn interface_length(&self) -> f64 {
        self.interface_edges().iter().map(|&e| self.edge_length(e)).sum()
    }

    /// Nodes lying on an outer-boundary edge.
    pub fn outer_nodes(&self) -> Vec<bool> {
        let mut flag = vec![false; self.num_nodes()];
        for e in &self.boundary_edges {
            if e.tag == EdgeTag::Outer {
                flag[e.nodes[0]] = true;
                flag[e.nodes[1]] = true;
            }
        }
        flag
    }

    pub fn min_angle_deg(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.num_triangles() {
            let p = self.corners(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                let ang = (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos();
                best = best.min(ang.to_degrees());
            }
        }
        best
    }

    /// Identifies nodes on opposite faces of the unit cell that coincide
    /// modulo 1. The master of each class is the node with the smallest
    /// coordinates (left/bottom faces, corner `(0,0)`).
    pub fn compute_periodic_pairs(&mut self) {
        let on_face = |v: f64| v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12;
        let key = |p: &Point2| {
            let w = |v: f64| {
                let m = if (v - 1.0).abs() < 1e-12 { 0.0 } else { v };
                (m * 1e10).round() as i64
            };
            (w(p[0]), w(p[1]))
        };
        let mut classes: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in self.nodes.iter().enumerate() {
            if on_face(p[0]) || on_face(p[1]) {
                classes.entry(key(p)).or_default().push(i);
            }
        }
        let mut pairs = Vec::new();
        for members in classes.values() {
            if members.len() < 2 {
                continue;
            }
            let master = *members
                .iter()
                .min_by(|&&a, &&b| {
                    let (pa, pb) = (self.nodes[a], self.nodes[b]);
                    (pa[0] + pa[1]).total_cmp(&(pb[0] + pb[1]))
                })
                .unwrap();
            for &m in members {
                if m != master {
                    pairs.push((master, m));
                }
            }
        }
        pairs.sort_unstable();
        self.periodic_pairs = pairs;
    }

    /// Quality and consistency diagnostics. Pass the inclusion shape to also
    /// measure how well interface edges resolve Γ.
    pub fn check(&self, shape: Option<&Shape2>) -> MeshReport {
        let min_signed_area = (0..self.num_triangles())
            .map(|t| self.signed_area(t))
            .fold(f64::INFINITY, f64::min);
        let mut interface_residual: f64 = 0.0;
        let mut chord_error: f64 = 0.0;
        if let Some(shape) = shape {
            for &e in &self.interface_edges() {
                let [a, b] = self.boundary_edges[e].nodes;
                for n in [a, b] {
                    interface_residual = interface_residual.max(shape.level_set(&self.nodes[n]).abs());
                }
                let mid = (self.nodes[a] + self.nodes[b]) * 0.5;
                if let Ok(p) = shape.project(&mid) {
                    chord_error = chord_error.max(p.distance.abs());
                }
            }
        }
        MeshReport {
            nodes: self.num_nodes(),
            triangles: self.num_triangles(),
            boundary_edges: self.boundary_edges.len(),
            periodic_pairs: self.periodic_pairs.len(),
            area: self.total_area(),
            min_angle_deg: self.min_angle_deg(),
            min_signed_area,
            interface_length: self.interface_length(),
            interface_residual,
            chord_error,
            unmatched_periodic_nodes: self.unmatched_periodic_nodes(),
        }
    }

    /// Nodes on the periodic faces `x = 1` / `y = 1` without a partner.
    fn unmatched_periodic_nodes(&self) -> usize {
        if self.periodic_pairs.is_empty() {
            return 0;
        }
        let mut has_partner = vec![false; self.num_nodes()];
        for &(m, s) in &self.periodic_pairs {
            has_partner[m] = true;
            has_partner[s] = true;
        }
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, p)| {
                p[0].abs() < 1e-12 || (p[0] - 1.0).abs() < 1e-12 || p[1].abs() < 1e-12 || (p[1] - 1.0).abs() < 1e-12
            })
            .filter(|(i, _)| !has_partner[*i])
            .count()
    }
}

/// Bucket grid for locating points in a mesh.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Point2,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = Point2::repeat(f64::INFINITY);
        let mut hi = Point2::repeat(f64::NEG_INFINITY);
        for p in &mesh.nodes {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let n = ((mesh.num_triangles() as f64).sqrt().ceil() as usize).max(1);
        let ext = hi - lo;
        let cell = (ext.max() / n as f64).max(1e-12);
        let nx = ((ext[0] / cell).ceil() as usize).max(1);
        let ny = ((ext[1] / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for t in 0..mesh.num_triangles() {
            let p = mesh.corners(t);
            let tlo = p[0].inf(&p[1]).inf(&p[2]);
            let thi = p[0].sup(&p[1]).sup(&p[2]);
            let (i0, j0) = Self::bucket_of(lo, cell, nx, ny, &tlo);
            let (i1, j1) = Self::bucket_of(lo, cell, nx, ny, &thi);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Self { mesh, origin: lo, cell, nx, ny, buckets }
    }

    fn bucket_of(origin: Point2, cell: f64, nx: usize, ny: usize, p: &Point2) -> (usize, usize) {
        let i = (((p[0] - origin[0]) / cell).floor().max(0.0) as usize).min(nx - 1);
        let j = (((p[1] - origin[1]) / cell).floor().max(0.0) as usize).min(ny - 1);
        (i, j)
    }

    /// Triangle containing `p` and its barycentric coordinates.
    pub fn locate(&self, p: &Point2) -> Option<(usize, [f64; 3])> {
        let (i, j) = Self::bucket_of(self.origin, self.cell, self.nx, self.ny, p);
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.nx + i] {
            let bary = barycentric(&self.mesh.corners(t), p);
            let worst = bary.iter().copied().fold(f64::INFINITY, f64::min);
            if worst >= -1e-12 {
                return Some((t, bary));
            }
            if best.is_none_or(|b| worst > b.2) {
                best = Some((t, bary, worst));
            }
        }
        best.filter(|b| b.2 > -1e-9).map(|b| (b.0, b.1))
    }

    /// Evaluates a nodal P1 field at `p`.
    pub fn eval(&self, field: &[f64], p: &Point2) -> Option<f64> {
        self.locate(p).map(|(t, b)| {
            let tri = self.mesh.triangles[t];
            (0..3).map(|k| b[k] * field[tri[k]]).sum()
        })
    }
}

pub fn barycentric(tri: &[Point2; 3], p: &Point2) -> [f64; 3] {
    let [a, b, c] = *tri;
    let det = (b - a).perp(&(c - a));
    let l1 = (p - a).perp(&(c - a)) / det;
    let l2 = (b - a).perp(&(p - a)) / det;
    [1.0 - l1 - l2, l1, l2]
}
