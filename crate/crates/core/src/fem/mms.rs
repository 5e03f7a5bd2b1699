//! Manufactured-solution convergence study for the P1 heat operator.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::Serialize;

use super::{
    assemble_scalar, generate_macro_mesh, load_scalar, quadrature_points, solve, DofMap, ScalarFields,
    SolverOptions, SparseSystem, QP_PER_TRIANGLE, TRI7,
};
use crate::error::Result;

#[derive(Debug, Clone, Serialize)]
pub struct MmsLevel {
    pub n: usize,
    pub h: f64,
    pub l2_error: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
}

fn exact(x: f64, y: f64) -> f64 {
    (PI * x).sin() * (PI * y).sin()
}

/// L² error of `-Δu = 2π² sin(πx) sin(πy)`, `u = 0` on ∂Ω, on an `n × n` mesh.
pub fn mms_error(n: usize) -> Result<f64> {
    let mesh = generate_macro_mesh(n, n)?;
    let dofs = DofMap::dirichlet(&mesh, 1);
    let coeff = vec![Matrix2::identity(); mesh.num_triangles() * QP_PER_TRIANGLE];
    let a = assemble_scalar(&mesh, &dofs, ScalarFields { coeff: Some(&coeff), ..Default::default() })?;
    let f: Vec<f64> = quadrature_points(&mesh).iter().map(|p| 2.0 * PI * PI * exact(p[0], p[1])).collect();
    let b = load_scalar(&mesh, &dofs, &f)?;
    let (x, _) = solve(&SparseSystem::new(a, b, dofs.mode()), &SolverOptions::default())?;
    let u = dofs.expand(&x);
    let mut err = 0.0;
    for t in 0..mesh.num_triangles() {
        let p = mesh.corners(t);
        let tri = mesh.triangles[t];
        for (bary, w) in TRI7.points.iter().zip(TRI7.weights) {
            let q = p[0] * bary[0] + p[1] * bary[1] + p[2] * bary[2];
            let uh: f64 = (0..3).map(|k| bary[k] * u[tri[k]]).sum();
            err += w * mesh.area(t) * (uh - exact(q[0], q[1])).powi(2);
        }
    }
    Ok(err.sqrt())
}

pub fn mms_study(levels: &[usize]) -> Result<Vec<MmsLevel>> {
    let mut out: Vec<MmsLevel> = Vec::with_capacity(levels.len());
    for &n in levels {
        let l2_error = mms_error(n)?;
        let order = out.last().map(|prev| (prev.l2_error / l2_error).ln() / (n as f64 / prev.n as f64).ln());
        out.push(MmsLevel { n, h: 1.0 / n as f64, l2_error, order });
    }
    Ok(out)
}
