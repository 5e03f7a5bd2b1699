//! Tiling of the reference cell mesh over the unit square.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::fem::{BoundaryEdge, EdgeTag, Mesh, Point2, QP_PER_EDGE, QP_PER_TRIANGLE};

/// Perforated mesh of Ω_ε, `ε = 2⁻ⁿ`, built from `2ⁿ × 2ⁿ` copies of a cell
/// mesh. Triangles and interface edges are stored cell by cell in the cell's
/// own order, so quadrature index `i` of cell `k` is global index
/// `k · (per-cell count) + i`.
#[derive(Debug, Clone)]
pub struct EpsMesh {
    pub level: u32,
    pub eps: f64,
    pub mesh: Mesh,
    cells_per_side: usize,
    cell_triangles: usize,
    cell_interface_edges: usize,
}

impl EpsMesh {
    pub fn cells_per_side(&self) -> usize {
        self.cells_per_side
    }

    pub fn num_cells(&self) -> usize {
        self.cells_per_side * self.cells_per_side
    }

    /// `(kx, ky)` of cell `k = ky · m + kx`.
    pub fn cell_index(&self, k: usize) -> (usize, usize) {
        (k % self.cells_per_side, k / self.cells_per_side)
    }

    pub fn cell_center(&self, k: usize) -> Point2 {
        let (kx, ky) = self.cell_index(k);
        Point2::new((kx as f64 + 0.5) * self.eps, (ky as f64 + 0.5) * self.eps)
    }

    pub fn cell_of_triangle(&self, t: usize) -> usize {
        t / self.cell_triangles
    }

    pub fn cell_triangles(&self) -> usize {
        self.cell_triangles
    }

    /// Global interior quadrature indices of cell `k`.
    pub fn cell_qp_range(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.cell_triangles * QP_PER_TRIANGLE;
        k * n..(k + 1) * n
    }

    /// Global interface quadrature indices of cell `k`.
    pub fn cell_interface_range(&self, k: usize) -> std::ops::Range<usize> {
        let n = self.cell_interface_edges * QP_PER_EDGE;
        k * n..(k + 1) * n
    }

    /// Reference interface length of cell `k`.
    pub fn cell_interface_length(&self, k: usize) -> f64 {
        let iface = self.mesh.interface_edges();
        let n = self.cell_interface_edges;
        iface[k * n..(k + 1) * n].iter().map(|&e| self.mesh.edge_length(e)).sum()
    }
}

fn on_unit_face(v: f64) -> bool {
    v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12
}

/// Tiles `cell` (a mesh of the unit cell) into `2ⁿ × 2ⁿ` copies scaled by
/// `ε = 2⁻ⁿ`, merging coincident face nodes.
pub fn build_eps_mesh(cell: &Mesh, n: u32) -> Result<EpsMesh> {
    if n > 10 {
        return Err(Error::Invalid(format!("level {n} is too fine")));
    }
    let m = 1usize << n;
    let eps = 1.0 / m as f64;
    let iface: Vec<BoundaryEdge> =
        cell.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Interface).copied().collect();
    let outer: Vec<BoundaryEdge> = cell.boundary_edges.iter().filter(|e| e.tag == EdgeTag::Outer).copied().collect();

    let mut nodes: Vec<Point2> = Vec::with_capacity(m * m * cell.num_nodes());
    let mut face_nodes: HashMap<(i64, i64), usize> = HashMap::new();
    let mut triangles = Vec::with_capacity(m * m * cell.num_triangles());
    let mut regions = Vec::with_capacity(triangles.capacity());
    let mut iface_edges = Vec::new();
    let mut outer_edges = Vec::new();
    let key = |p: &Point2| ((p[0] * 1e10).round() as i64, (p[1] * 1e10).round() as i64);

    for ky in 0..m {
        for kx in 0..m {
            let map: Vec<usize> = cell
                .nodes
                .iter()
                .map(|y| {
                    let x = Point2::new((kx as f64 + y[0]) * eps, (ky as f64 + y[1]) * eps);
                    if on_unit_face(y[0]) || on_unit_face(y[1]) {
                        *face_nodes.entry(key(&x)).or_insert_with(|| {
                            nodes.push(x);
                            nodes.len() - 1
                        })
                    } else {
                        nodes.push(x);
                        nodes.len() - 1
                    }
                })
                .collect();
            for (t, tri) in cell.triangles.iter().enumerate() {
                triangles.push([map[tri[0]], map[tri[1]], map[tri[2]]]);
                regions.push(cell.regions[t]);
            }
            for e in &iface {
                iface_edges.push(BoundaryEdge { nodes: [map[e.nodes[0]], map[e.nodes[1]]], tag: EdgeTag::Interface });
            }
            for e in &outer {
                let [a, b] = [map[e.nodes[0]], map[e.nodes[1]]];
                let (pa, pb) = (nodes[a], nodes[b]);
                let same_line = (0..2).any(|c| on_unit_face(pa[c]) && (pa[c] - pb[c]).abs() < 1e-12);
                if same_line {
                    outer_edges.push(BoundaryEdge { nodes: [a, b], tag: EdgeTag::Outer });
                }
            }
        }
    }
    let mut boundary_edges = iface_edges;
    boundary_edges.extend(outer_edges);
    let mesh = Mesh {
        nodes,
        triangles,
        regions,
        boundary_edges,
        periodic_pairs: Vec::new(),
        mesh_size: cell.mesh_size * eps,
    };
    let outer_len: f64 = mesh.outer_edges().iter().map(|&e| mesh.edge_length(e)).sum();
    if (outer_len - 4.0).abs() > 1e-9 {
        return Err(Error::Meshing {
            region: "eps".into(),
            reason: format!("outer boundary length {outer_len} after tiling, expected 4"),
        });
    }
    let mut uses = vec![0u8; mesh.num_nodes()];
    for tri in &mesh.triangles {
        for &v in tri {
            uses[v] = 1;
        }
    }
    if uses.contains(&0) {
        return Err(Error::Meshing { region: "eps".into(), reason: "unreferenced node after merge".into() });
    }
    Ok(EpsMesh {
        level: n,
        eps,
        mesh,
        cells_per_side: m,
        cell_triangles: cell.num_triangles(),
        cell_interface_edges: iface.len(),
    })
}
