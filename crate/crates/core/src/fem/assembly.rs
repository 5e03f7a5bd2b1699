//! P1 assembly of bilinear forms and load vectors.
//!
//! Per-quadrature fields are indexed `3 t + q` for triangle `t` and
//! [`TRI3`] point `q`; interface fields are indexed `2 k + q` for the `k`-th
//! entry of [`Mesh::interface_edges`] and [`EDGE2`] point `q`.

use nalgebra::{Matrix2, Matrix4, Vector2};
use rayon::prelude::*;

use super::dofs::DofMap;
use super::mesh::{Mesh, Point2};
use super::quadrature::{EDGE2, QP_PER_EDGE, QP_PER_TRIANGLE, TRI3};
use super::sparse::{CsrMatrix, TripletBuilder};
use super::tensor::Tensor4;
use crate::error::{Error, Result};

const CHUNK: usize = 1024;

/// Gradients of the three hat functions and the area of triangle `t`.
pub fn hat_gradients(mesh: &Mesh, t: usize) -> ([Vector2<f64>; 3], f64) {
    let [a, b, c] = mesh.corners(t);
    let det = (b - a).perp(&(c - a));
    let rot = |v: Vector2<f64>| Vector2::new(v[1], -v[0]) / det;
    ([rot(b - c), rot(c - a), rot(a - b)], 0.5 * det.abs())
}

/// Physical coordinates of every interior quadrature point.
pub fn quadrature_points(mesh: &Mesh) -> Vec<Point2> {
    let mut out = Vec::with_capacity(mesh.num_triangles() * QP_PER_TRIANGLE);
    for t in 0..mesh.num_triangles() {
        let p = mesh.corners(t);
        for b in TRI3.points {
            out.push(p[0] * b[0] + p[1] * b[1] + p[2] * b[2]);
        }
    }
    out
}

/// Interface quadrature point, its weight (length × rule weight) and the
/// owning interface edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgePoint {
    pub point: Point2,
    pub weight: f64,
    pub edge: usize,
    /// Parameter along the edge from its first node.
    pub t: f64,
}

pub fn interface_points(mesh: &Mesh) -> Vec<EdgePoint> {
    let mut out = Vec::new();
    for e in mesh.interface_edges() {
        let [a, b] = mesh.boundary_edges[e].nodes;
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let len = (pb - pa).norm();
        for &(t, w) in &EDGE2 {
            out.push(EdgePoint { point: pa + (pb - pa) * t, weight: w * len, edge: e, t });
        }
    }
    out
}

/// Fields for [`assemble_scalar`]; absent parts contribute nothing.
#[derive(Default, Clone, Copy)]
pub struct ScalarFields<'a> {
    pub coeff: Option<&'a [Matrix2<f64>]>,
    pub mass: Option<&'a [f64]>,
    pub surface: Option<&'a [f64]>,
}

fn check_len(name: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::Invalid(format!("{name}: expected {want} quadrature values, got {got}")));
    }
    Ok(())
}

/// `∫ A∇φ_j·∇φ_i + ∫ m φ_jφ_i + ∫_Γ b φ_jφ_i`.
pub fn assemble_scalar(mesh: &Mesh, dofs: &DofMap, fields: ScalarFields) -> Result<CsrMatrix> {
    let nt = mesh.num_triangles();
    if let Some(a) = fields.coeff {
        check_len("coefficient field", a.len(), nt * QP_PER_TRIANGLE)?;
        for (i, m) in a.iter().enumerate() {
            if (m[(0, 1)] - m[(1, 0)]).abs() > 1e-12 * m.norm().max(1e-300) {
                return Err(Error::NonSymmetric { index: i });
            }
        }
    }
    if let Some(m) = fields.mass {
        check_len("mass field", m.len(), nt * QP_PER_TRIANGLE)?;
    }
    let iface = mesh.interface_edges();
    if let Some(s) = fields.surface {
        check_len("surface field", s.len(), iface.len() * QP_PER_EDGE)?;
    }
    let n = dofs.num_dofs();
    let chunks: Vec<TripletBuilder> = (0..nt)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|ts| {
            let mut b = TripletBuilder::with_capacity(n, ts.len() * 9);
            for &t in ts {
                let k = element_scalar(mesh, t, fields);
                scatter3(&mut b, dofs, &mesh.triangles[t], &k);
            }
            b
        })
        .collect();
    let mut b = TripletBuilder::with_capacity(n, nt * 9 + iface.len() * 4);
    for c in chunks {
        b.extend(c);
    }
    if let Some(s) = fields.surface {
        for (k, &e) in iface.iter().enumerate() {
            let nodes = mesh.boundary_edges[e].nodes;
            let len = mesh.edge_length(e);
            let mut m = [[0.0; 2]; 2];
            for (q, &(t, w)) in EDGE2.iter().enumerate() {
                let phi = [1.0 - t, t];
                for i in 0..2 {
                    for j in 0..2 {
                        m[i][j] += w * len * s[2 * k + q] * phi[i] * phi[j];
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    if let (Some(di), Some(dj)) = (dofs.dof(nodes[i], 0), dofs.dof(nodes[j], 0)) {
                        b.push(di, dj, m[i][j]);
                    }
                }
            }
        }
    }
    Ok(b.build())
}

fn element_scalar(mesh: &Mesh, t: usize, fields: ScalarFields) -> [[f64; 3]; 3] {
    let (g, area) = hat_gradients(mesh, t);
    let mut k = [[0.0; 3]; 3];
    for (q, (bary, w)) in TRI3.points.iter().zip(TRI3.weights).enumerate() {
        let wq = w * area;
        let idx = 3 * t + q;
        if let Some(a) = fields.coeff {
            let a = a[idx];
            for i in 0..3 {
                let ag = a.transpose() * g[i];
                for j in 0..3 {
                    k[i][j] += wq * ag.dot(&g[j]);
                }
            }
        }
        if let Some(m) = fields.mass {
            for i in 0..3 {
                for j in 0..3 {
                    k[i][j] += wq * m[idx] * bary[i] * bary[j];
                }
            }
        }
    }
    k
}

fn scatter3(b: &mut TripletBuilder, dofs: &DofMap, tri: &[usize; 3], k: &[[f64; 3]; 3]) {
    for i in 0..3 {
        let Some(di) = dofs.dof(tri[i], 0) else { continue };
        for j in 0..3 {
            if let Some(dj) = dofs.dof(tri[j], 0) {
                b.push(di, dj, k[i][j]);
            }
        }
    }
}

/// Row-summed (lumped) mass matrix `diag(Σ_j ∫ m φ_iφ_j)`.
pub fn assemble_lumped_mass(mesh: &Mesh, dofs: &DofMap, mass: &[f64]) -> Result<CsrMatrix> {
    let lumped = load_scalar(mesh, dofs, mass)?;
    let mut b = TripletBuilder::new(dofs.num_dofs());
    for (i, v) in lumped.into_iter().enumerate() {
        b.push(i, i, v);
    }
    Ok(b.build())
}

/// `∫ D vec(∇u) · vec(∇v)` for a per-quadrature 4×4 operator on
/// `vec(G) = (G00, G01, G10, G11)`, `G_ab = ∂_b u_a`.
pub fn assemble_gradient_operator(mesh: &Mesh, dofs: &DofMap, d: &[Matrix4<f64>]) -> Result<CsrMatrix> {
    if dofs.components() != 2 {
        return Err(Error::Invalid("vector assembly needs a 2-component dof map".into()));
    }
    let nt = mesh.num_triangles();
    check_len("stiffness field", d.len(), nt * QP_PER_TRIANGLE)?;
    let n = dofs.num_dofs();
    let chunks: Vec<TripletBuilder> = (0..nt)
        .collect::<Vec<_>>()
        .par_chunks(CHUNK)
        .map(|ts| {
            let mut b = TripletBuilder::with_capacity(n, ts.len() * 36);
            for &t in ts {
                let k = element_vector(mesh, t, d);
                let tri = mesh.triangles[t];
                for i in 0..3 {
                    for a in 0..2 {
                        let Some(di) = dofs.dof(tri[i], a) else { continue };
                        for j in 0..3 {
                            for c in 0..2 {
                                if let Some(dj) = dofs.dof(tri[j], c) {
                                    b.push(di, dj, k[2 * i + a][2 * j + c]);
                                }
                            }
                        }
                    }
                }
            }
            b
        })
        .collect();
    let mut b = TripletBuilder::with_capacity(n, nt * 36);
    for c in chunks {
        b.extend(c);
    }
    Ok(b.build())
}

/// Element matrix indexed `[2 i + a][2 j + c]` (node, component).
fn element_vector(mesh: &Mesh, t: usize, d: &[Matrix4<f64>]) -> [[f64; 6]; 6] {
    let (g, area) = hat_gradients(mesh, t);
    let mut k = [[0.0; 6]; 6];
    for (q, w) in TRI3.weights.iter().enumerate() {
        let dq = &d[3 * t + q];
        let wq = w * area;
        for i in 0..3 {
            for a in 0..2 {
                for j in 0..3 {
                    for c in 0..2 {
                        let mut s = 0.0;
                        for b in 0..2 {
                            for e in 0..2 {
                                s += dq[(2 * a + b, 2 * c + e)] * g[i][b] * g[j][e];
                            }
                        }
                        k[2 * i + a][2 * j + c] += wq * s;
                    }
                }
            }
        }
    }
    k
}

/// `∫ C e(u) : e(v)`; rejects tensors without minor/major symmetry.
pub fn assemble_elastic(mesh: &Mesh, dofs: &DofMap, c: &[Tensor4]) -> Result<CsrMatrix> {
    for (i, ci) in c.iter().enumerate() {
        if ci.symmetry_defect() > 1e-12 {
            return Err(Error::NonSymmetric { index: i });
        }
    }
    let d: Vec<Matrix4<f64>> = c.iter().map(Tensor4::gradient_operator).collect();
    assemble_gradient_operator(mesh, dofs, &d)
}

/// `∫ f φ_i`.
pub fn load_scalar(mesh: &Mesh, dofs: &DofMap, f: &[f64]) -> Result<Vec<f64>> {
    check_len("source", f.len(), mesh.num_triangles() * QP_PER_TRIANGLE)?;
    let mut out = vec![0.0; dofs.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for (q, (bary, w)) in TRI3.points.iter().zip(TRI3.weights).enumerate() {
            for i in 0..3 {
                if let Some(d) = dofs.dof(tri[i], 0) {
                    out[d] += w * area * f[3 * t + q] * bary[i];
                }
            }
        }
    }
    Ok(out)
}

/// `∫ b·∇φ_i`.
pub fn load_scalar_flux(mesh: &Mesh, dofs: &DofMap, b: &[Vector2<f64>]) -> Result<Vec<f64>> {
    check_len("flux", b.len(), mesh.num_triangles() * QP_PER_TRIANGLE)?;
    let mut out = vec![0.0; dofs.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let (g, area) = hat_gradients(mesh, t);
        let tri = mesh.triangles[t];
        for (q, w) in TRI3.weights.iter().enumerate() {
            for i in 0..3 {
                if let Some(d) = dofs.dof(tri[i], 0) {
                    out[d] += w * area * b[3 * t + q].dot(&g[i]);
                }
            }
        }
    }
    Ok(out)
}

/// `∫_Γ s φ_i` over interface edges.
pub fn load_scalar_interface(mesh: &Mesh, dofs: &DofMap, s: &[f64]) -> Result<Vec<f64>> {
    let iface = mesh.interface_edges();
    check_len("interface source", s.len(), iface.len() * QP_PER_EDGE)?;
    let mut out = vec![0.0; dofs.num_dofs()];
    for (k, &e) in iface.iter().enumerate() {
        let nodes = mesh.boundary_edges[e].nodes;
        let len = mesh.edge_length(e);
        for (q, &(t, w)) in EDGE2.iter().enumerate() {
            let phi = [1.0 - t, t];
            for i in 0..2 {
                if let Some(d) = dofs.dof(nodes[i], 0) {
                    out[d] += w * len * s[2 * k + q] * phi[i];
                }
            }
        }
    }
    Ok(out)
}

/// `∫ f·v` for vector test functions.
pub fn load_vector(mesh: &Mesh, dofs: &DofMap, f: &[Vector2<f64>]) -> Result<Vec<f64>> {
    check_len("body force", f.len(), mesh.num_triangles() * QP_PER_TRIANGLE)?;
    let mut out = vec![0.0; dofs.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for (q, (bary, w)) in TRI3.points.iter().zip(TRI3.weights).enumerate() {
            for i in 0..3 {
                for a in 0..2 {
                    if let Some(d) = dofs.dof(tri[i], a) {
                        out[d] += w * area * f[3 * t + q][a] * bary[i];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `∫ S : ∇v` with `(∇v)_ab = ∂_b v_a`.
pub fn load_vector_stress(mesh: &Mesh, dofs: &DofMap, s: &[Matrix2<f64>]) -> Result<Vec<f64>> {
    check_len("stress", s.len(), mesh.num_triangles() * QP_PER_TRIANGLE)?;
    let mut out = vec![0.0; dofs.num_dofs()];
    for t in 0..mesh.num_triangles() {
        let (g, area) = hat_gradients(mesh, t);
        let tri = mesh.triangles[t];
        for (q, w) in TRI3.weights.iter().enumerate() {
            let sq = s[3 * t + q];
            for i in 0..3 {
                for a in 0..2 {
                    if let Some(d) = dofs.dof(tri[i], a) {
                        out[d] += w * area * (sq[(a, 0)] * g[i][0] + sq[(a, 1)] * g[i][1]);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// `∫_Γ t·v` over interface edges.
pub fn load_vector_interface(mesh: &Mesh, dofs: &DofMap, traction: &[Vector2<f64>]) -> Result<Vec<f64>> {
    let iface = mesh.interface_edges();
    check_len("interface traction", traction.len(), iface.len() * QP_PER_EDGE)?;
    let mut out = vec![0.0; dofs.num_dofs()];
    for (k, &e) in iface.iter().enumerate() {
        let nodes = mesh.boundary_edges[e].nodes;
        let len = mesh.edge_length(e);
        for (q, &(t, w)) in EDGE2.iter().enumerate() {
            let phi = [1.0 - t, t];
            for i in 0..2 {
                for a in 0..2 {
                    if let Some(d) = dofs.dof(nodes[i], a) {
                        out[d] += w * len * traction[2 * k + q][a] * phi[i];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Values of a nodal P1 field at every interior quadrature point.
pub fn field_at_quadrature(mesh: &Mesh, nodal: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.num_triangles() * QP_PER_TRIANGLE);
    for tri in &mesh.triangles {
        for b in TRI3.points {
            out.push(b[0] * nodal[tri[0]] + b[1] * nodal[tri[1]] + b[2] * nodal[tri[2]]);
        }
    }
    out
}

/// Values of a nodal P1 field at interface quadrature points.
pub fn field_at_interface(mesh: &Mesh, nodal: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for e in mesh.interface_edges() {
        let [a, b] = mesh.boundary_edges[e].nodes;
        for &(t, _) in &EDGE2 {
            out.push((1.0 - t) * nodal[a] + t * nodal[b]);
        }
    }
    out
}

/// Gradient of a nodal P1 field on each triangle.
pub fn field_gradients(mesh: &Mesh, nodal: &[f64]) -> Vec<Vector2<f64>> {
    (0..mesh.num_triangles())
        .map(|t| {
            let (g, _) = hat_gradients(mesh, t);
            let tri = mesh.triangles[t];
            g[0] * nodal[tri[0]] + g[1] * nodal[tri[1]] + g[2] * nodal[tri[2]]
        })
        .collect()
}

/// `∫ w u` for a nodal field `u` and per-quadrature weight `w`.
pub fn integrate(mesh: &Mesh, nodal: &[f64], weight: Option<&[f64]>) -> f64 {
    let vals = field_at_quadrature(mesh, nodal);
    let mut s = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.area(t);
        for (q, w) in TRI3.weights.iter().enumerate() {
            let wt = weight.map_or(1.0, |w| w[3 * t + q]);
            s += w * area * wt * vals[3 * t + q];
        }
    }
    s
}
