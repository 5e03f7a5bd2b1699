//! Plain-text mesh format.
//!
//! ```text
//! dim nv nt nbe np
//! x y                 (nv lines)
//! i j k region        (nt lines)
//! i j tag             (nbe lines; 0 = outer, 1 = interface)
//! master slave        (np lines)
//! ```
//! Indices are 0-based.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{BoundaryEdge, EdgeTag, Mesh, Point2};
use crate::error::{Error, Result};

pub fn write_mesh_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "2 {} {} {} {}",
        mesh.num_nodes(),
        mesh.num_triangles(),
        mesh.boundary_edges.len(),
        mesh.periodic_pairs.len()
    );
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:e} {:e}", p[0], p[1]);
    }
    for (t, r) in mesh.triangles.iter().zip(&mesh.regions) {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], r);
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.code());
    }
    for (m, sl) in &mesh.periodic_pairs {
        let _ = writeln!(s, "{m} {sl}");
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty()).enumerate();
    let mut next = |what: &str| -> Result<Vec<String>> {
        let (no, l) = lines.next().ok_or_else(|| Error::Parse(format!("unexpected end of mesh file reading {what}")))?;
        let _ = no;
        Ok(l.split_whitespace().map(str::to_owned).collect())
    };
    fn num<T: std::str::FromStr>(tok: &[String], i: usize, what: &str) -> Result<T> {
        tok.get(i)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad {what}: {:?}", tok)))
    }
    let header = next("header")?;
    let dim: usize = num(&header, 0, "dimension")?;
    if dim != 2 {
        return Err(Error::Parse(format!("only 2D meshes are supported, got dim {dim}")));
    }
    let (nv, nt, nbe, np): (usize, usize, usize, usize) =
        (num(&header, 1, "nv")?, num(&header, 2, "nt")?, num(&header, 3, "nbe")?, num(&header, 4, "np")?);
    let mut mesh = Mesh::default();
    for _ in 0..nv {
        let t = next("node")?;
        mesh.nodes.push(Point2::new(num(&t, 0, "x")?, num(&t, 1, "y")?));
    }
    let idx = |t: &[String], i: usize, what: &str| -> Result<usize> {
        let v: usize = num(t, i, what)?;
        if v >= nv {
            return Err(Error::Parse(format!("{what} index {v} out of range")));
        }
        Ok(v)
    };
    for _ in 0..nt {
        let t = next("triangle")?;
        mesh.triangles.push([idx(&t, 0, "triangle")?, idx(&t, 1, "triangle")?, idx(&t, 2, "triangle")?]);
        mesh.regions.push(num(&t, 3, "region")?);
    }
    for _ in 0..nbe {
        let t = next("boundary edge")?;
        let code: u32 = num(&t, 2, "edge tag")?;
        let tag = EdgeTag::from_code(code).ok_or_else(|| Error::Parse(format!("unknown edge tag {code}")))?;
        mesh.boundary_edges.push(BoundaryEdge { nodes: [idx(&t, 0, "edge")?, idx(&t, 1, "edge")?], tag });
    }
    for _ in 0..np {
        let t = next("periodic pair")?;
        mesh.periodic_pairs.push((idx(&t, 0, "master")?, idx(&t, 1, "slave")?));
    }
    mesh.mesh_size = crate::fem::mesh_size_estimate(&mesh);
    Ok(mesh)
}
