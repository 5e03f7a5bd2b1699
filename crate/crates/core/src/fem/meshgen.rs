//! Structured mesh generators for the perforated cell and the macro square.

use crate::error::{Error, Result};
use crate::geometry::Shape2;

use super::mesh::{BoundaryEdge, EdgeTag, Mesh, Point2, REGION_PORE};

/// Boundary-fitted mesh of `Y* = Y \ Z̄`, or of the full cell when `shape` is
/// `None`.
///
/// With an inclusion the mesh is an O-grid: `N` (a multiple of 8) nodes on Γ
/// at uniform polar angle about the shape center are joined by straight lines
/// to `N` nodes spaced uniformly along `∂Y`, and each quadrilateral is split
/// into four triangles through its centroid. The result is mirror-symmetric
/// for centered symmetric shapes, nested under halving of `target_h`, and
/// periodic-conforming on `∂Y`.
pub fn generate_cell_mesh(shape: Option<&Shape2>, target_h: f64) -> Result<Mesh> {
    if !(target_h > 0.0 && target_h <= 1.0) {
        return Err(Error::Invalid(format!("target mesh size must be in (0, 1], got {target_h}")));
    }
    let mut mesh = match shape {
        None => structured_square(target_h),
        Some(shape) => o_grid(shape, target_h)?,
    };
    mesh.compute_periodic_pairs();
    mesh.mesh_size = target_h;
    Ok(mesh)
}

fn structured_square(target_h: f64) -> Mesh {
    let m = (1.0 / target_h - 1e-9).ceil().max(1.0) as usize;
    let id = |i: usize, j: usize| j * (m + 1) + i;
    let mut nodes = Vec::with_capacity((m + 1) * (m + 1));
    for j in 0..=m {
        for i in 0..=m {
            nodes.push(Point2::new(i as f64 / m as f64, j as f64 / m as f64));
        }
    }
    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut boundary_edges = Vec::new();
    for i in 0..m {
        boundary_edges.push(BoundaryEdge { nodes: [id(i, 0), id(i + 1, 0)], tag: EdgeTag::Outer });
        boundary_edges.push(BoundaryEdge { nodes: [id(m, i), id(m, i + 1)], tag: EdgeTag::Outer });
        boundary_edges.push(BoundaryEdge { nodes: [id(i + 1, m), id(i, m)], tag: EdgeTag::Outer });
        boundary_edges.push(BoundaryEdge { nodes: [id(0, i + 1), id(0, i)], tag: EdgeTag::Outer });
    }
    let regions = vec![REGION_PORE; triangles.len()];
    Mesh { nodes, triangles, regions, boundary_edges, periodic_pairs: Vec::new(), mesh_size: target_h }
}

/// Point number `i` of `n` on the boundary of the unit square, counter-
/// clockwise from `(1, 1/2)`. Coordinates come from integer ratios so that
/// periodic partners are bit-identical.
fn square_point(i: usize, n: usize) -> Point2 {
    let q = n / 4;
    let shifted = (i + q / 2) % n;
    let face = shifted / q;
    let o = shifted % q;
    let r = |a: usize| a as f64 / q as f64;
    match face {
        0 => Point2::new(1.0, r(o)),
        1 => Point2::new(r(q - o), 1.0),
        2 => Point2::new(0.0, r(q - o)),
        _ => Point2::new(r(o), 0.0),
    }
}

fn o_grid(shape: &Shape2, target_h: f64) -> Result<Mesh> {
    let n = 8 * (0.5 / target_h - 1e-9).ceil().max(1.0) as usize;
    let center = shape.center();
    let inner: Vec<Point2> = (0..n)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            shape.radial_point(&Point2::new(a.cos(), a.sin()))
        })
        .collect();
    let outer: Vec<Point2> = (0..n).map(|i| square_point(i, n)).collect();

    let perimeter: f64 = (0..n).map(|i| (inner[(i + 1) % n] - inner[i]).norm()).sum();
    let mean_ray = (0..n).map(|i| (outer[i] - inner[i]).norm()).sum::<f64>() / n as f64;
    // Layers per 8 angular divisions, chosen so that radial and tangential
    // spacings match on average; independent of n to keep refinement nested.
    let per8 = (16.0 * mean_ray / (perimeter + 4.0)).round().max(1.0) as usize;
    let layers = (per8 * n / 8).max(2);

    let ring = |i: usize, j: usize| j * n + (i % n);
    let mut nodes = Vec::with_capacity((2 * layers + 1) * n);
    for j in 0..=layers {
        let xi = j as f64 / layers as f64;
        for i in 0..n {
            let p = if j == layers { outer[i] } else { inner[i] + (outer[i] - inner[i]) * xi };
            nodes.push(p);
        }
    }
    let centers_start = nodes.len();
    let mut triangles = Vec::with_capacity(4 * n * layers);
    for j in 0..layers {
        for i in 0..n {
            let quad = [ring(i, j), ring(i + 1, j), ring(i + 1, j + 1), ring(i, j + 1)];
            let c = quad.iter().map(|&k| nodes[k]).sum::<Point2>() * 0.25;
            let m = nodes.len();
            nodes.push(c);
            for k in 0..4 {
                triangles.push([quad[k], quad[(k + 1) % 4], m]);
            }
        }
    }
    debug_assert_eq!(nodes.len(), centers_start + n * layers);

    // Fix orientation; a structurally folded grid shows up as mixed signs.
    let mut mesh = Mesh {
        nodes,
        triangles,
        regions: Vec::new(),
        boundary_edges: Vec::new(),
        periodic_pairs: Vec::new(),
        mesh_size: target_h,
    };
    let mut flipped = 0usize;
    for t in 0..mesh.num_triangles() {
        let a = mesh.signed_area(t);
        if a.abs() < 1e-14 {
            return Err(Error::Meshing { region: "pore".into(), reason: format!("degenerate triangle {t}") });
        }
        if a < 0.0 {
            mesh.triangles[t].swap(1, 2);
            flipped += 1;
        }
    }
    if flipped != 0 && flipped != mesh.num_triangles() {
        return Err(Error::Meshing {
            region: "pore".into(),
            reason: format!("inclusion is not star-shaped about {:?}: folded O-grid", center.as_slice()),
        });
    }
    mesh.regions = vec![REGION_PORE; mesh.num_triangles()];
    for i in 0..n {
        mesh.boundary_edges.push(BoundaryEdge { nodes: [ring(i, 0), ring(i + 1, 0)], tag: EdgeTag::Interface });
    }
    for i in 0..n {
        mesh.boundary_edges.push(BoundaryEdge { nodes: [ring(i, layers), ring(i + 1, layers)], tag: EdgeTag::Outer });
    }
    Ok(mesh)
}

/// Crossed triangulation of `(0,1)²`: each of the `nx × ny` squares is split
/// into four triangles through its center.
pub fn generate_macro_mesh(nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::Invalid("macro mesh needs nx, ny >= 1".into()));
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push(Point2::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    let mut triangles = Vec::with_capacity(4 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let c = nodes.len();
            nodes.push(Point2::new((i as f64 + 0.5) / nx as f64, (j as f64 + 0.5) / ny as f64));
            let q = [vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)];
            for k in 0..4 {
                triangles.push([q[k], q[(k + 1) % 4], c]);
            }
        }
    }
    let mut boundary_edges = Vec::new();
    for i in 0..nx {
        boundary_edges.push(BoundaryEdge { nodes: [vid(i, 0), vid(i + 1, 0)], tag: EdgeTag::Outer });
        boundary_edges.push(BoundaryEdge { nodes: [vid(i + 1, ny), vid(i, ny)], tag: EdgeTag::Outer });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge { nodes: [vid(nx, j), vid(nx, j + 1)], tag: EdgeTag::Outer });
        boundary_edges.push(BoundaryEdge { nodes: [vid(0, j + 1), vid(0, j)], tag: EdgeTag::Outer });
    }
    let regions = vec![REGION_PORE; triangles.len()];
    Ok(Mesh {
        nodes,
        triangles,
        regions,
        boundary_edges,
        periodic_pairs: Vec::new(),
        mesh_size: 1.0 / nx.max(ny) as f64,
    })
}
