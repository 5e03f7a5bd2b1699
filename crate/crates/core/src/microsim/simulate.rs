//! Reference-coordinate heat problem on Ω_ε and the fixed-point iteration on
//! per-cell velocity trajectories.

use nalgebra::{Matrix2, Matrix4, Vector2};
use rayon::prelude::*;
use serde::Serialize;

use super::epsmesh::EpsMesh;
use crate::cellhomog::{pullback_coefficients, CellGeometry, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_gradient_operator, assemble_scalar, field_at_interface, field_at_quadrature, load_scalar,
    load_scalar_flux, load_scalar_interface, load_vector, load_vector_interface, load_vector_stress,
    quadrature_points, solve, DofMap, Point2, ScalarFields, SolverOptions, SparseSystem, EDGE2, TRI3,
};
use crate::macrosolver::step_count;
use crate::params::PhysicalParams;

#[derive(Debug, Clone, PartialEq)]
pub struct MicroOptions {
    /// Stop when `sup_{t,k} |v⁽ᵐ⁺¹⁾ - v⁽ᵐ⁾| ≤ tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub solver: SolverOptions,
}

impl Default for MicroOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, solver: SolverOptions { tol: 1e-13, ..SolverOptions::default() } }
    }
}

/// Temperature trajectory for prescribed per-cell velocities.
#[derive(Debug, Clone)]
pub struct HeatTrajectory {
    /// Nodal `θ_r` at `t_0 = 0, …, t_N`.
    pub theta: Vec<Vec<f64>>,
    /// Per-cell heights at `t_0, …, t_N`.
    pub h: Vec<Vec<f64>>,
    /// Largest `|J w_r·n - v_r|` over interface points and steps, in cell
    /// units (the common factor ε removed).
    pub identity_defect: f64,
}

/// Converged moving-boundary solution.
#[derive(Debug, Clone, Serialize)]
pub struct MicroState {
    pub level: u32,
    pub eps: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub theta: Vec<Vec<f64>>,
    /// `v[n][k]`; row 0 is the interface average of the initial data.
    pub v: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
    /// Sup-norm velocity increments, one per iteration.
    pub increments: Vec<f64>,
    pub max_velocity: f64,
    /// `a*/(10 M)` for the converged velocity bound (infinite for `M = 0`).
    pub horizon: f64,
    pub identity_defect: f64,
    /// `sup |v - avg_Γ θ|` of the returned state.
    pub self_consistency: f64,
}

impl MicroState {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }
}

/// Rectangle-rule heights `h[n] = h[n-1] + Δt v[n]`; `v` holds steps `1..=N`.
pub fn cell_heights(v: &[Vec<f64>], cells: usize, dt: f64) -> Vec<Vec<f64>> {
    let mut h = vec![vec![0.0; cells]];
    for row in v {
        let last = h.last().unwrap();
        h.push(last.iter().zip(row).map(|(a, b)| a + dt * b).collect());
    }
    h
}

/// Unweighted mean of the trace of `θ_r` over the reference interface of
/// cell `k`.
pub fn cell_average_velocity(theta: &[f64], eps: &EpsMesh, k: usize) -> f64 {
    let vals = field_at_interface(&eps.mesh, theta);
    cell_interface_mean(&vals, eps, k)
}

fn cell_interface_mean(trace: &[f64], eps: &EpsMesh, k: usize) -> f64 {
    let iface = eps.mesh.interface_edges();
    let range = eps.cell_interface_range(k);
    if range.is_empty() {
        return 0.0;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for i in range {
        let len = eps.mesh.edge_length(iface[i / 2]);
        let w = EDGE2[i % 2].1 * len;
        num += w * trace[i];
        den += w;
    }
    num / den
}

/// Interface averages of `θ_r` for every cell.
pub fn cell_velocities(theta: &[f64], eps: &EpsMesh) -> Vec<f64> {
    let trace = field_at_interface(&eps.mesh, theta);
    (0..eps.num_cells()).map(|k| cell_interface_mean(&trace, eps, k)).collect()
}

/// Physical mean `∫ J θ_r / ∫ J` of every ε-cell at heights `h`.
pub fn cell_mean_temperature(theta: &[f64], eps: &EpsMesh, geom: &CellGeometry, h: &[f64]) -> Vec<f64> {
    let mesh = &eps.mesh;
    let vals = field_at_quadrature(mesh, theta);
    let nt = eps.cell_triangles();
    (0..eps.num_cells())
        .map(|k| {
            let (mut num, mut den) = (0.0, 0.0);
            for lt in 0..nt {
                let t = k * nt + lt;
                let area = mesh.area(t);
                for (q, w) in TRI3.weights.iter().enumerate() {
                    let j = geom.frames()[3 * lt + q].jacobian(h[k]).determinant();
                    num += w * area * j * vals[3 * t + q];
                    den += w * area * j;
                }
            }
            num / den
        })
        .collect()
}

fn check_band(geom: &CellGeometry, h: &[f64], time: f64) -> Result<()> {
    let (lo, hi) = geom.height_band();
    match h.iter().position(|v| !(lo <= *v && *v <= hi)) {
        Some(cell) => Err(Error::CellHeightBand { cell, time, h: h[cell], lo, hi }),
        None => Ok(()),
    }
}

/// Per-cell pulled-back coefficients at one step.
fn cell_coefficients(
    geom: &CellGeometry,
    params: &PhysicalParams,
    h: &[f64],
    v: Option<&[f64]>,
) -> Result<Vec<TransformedCoefficients>> {
    (0..h.len())
        .into_par_iter()
        .map(|k| pullback_coefficients(geom, params, h[k], v.map(|v| v[k])))
        .collect()
}

/// Image `s_ε(x) = x + ε h χ n` of every interior quadrature point.
fn deformed_points(eps: &EpsMesh, geom: &CellGeometry, qp: &[Point2], h: &[f64]) -> Vec<Point2> {
    let n = geom.frames().len();
    qp.iter()
        .enumerate()
        .map(|(i, x)| x + geom.frames()[i % n].direction() * (eps.eps * h[i / n]))
        .collect()
}

/// Implicit Euler for `θ_r` with the velocity trajectory `v` (rows are
/// steps `1..=N`) held fixed. Convection uses the previous temperature.
pub fn micro_heat_solve(
    eps: &EpsMesh,
    geom: &CellGeometry,
    params: &PhysicalParams,
    v: &[Vec<f64>],
    dt: f64,
    solver: &SolverOptions,
) -> Result<HeatTrajectory> {
    let mesh = &eps.mesh;
    let cells = eps.num_cells();
    if v.iter().any(|row| row.len() != cells) {
        return Err(Error::Invalid(format!("velocity rows must have {cells} entries")));
    }
    let h = cell_heights(v, cells, dt);
    for (n, row) in h.iter().enumerate() {
        check_band(geom, row, n as f64 * dt)?;
    }
    let dofs = DofMap::free(mesh, 1);
    let qp = quadrature_points(mesh);
    let theta0: Vec<f64> = mesh.nodes.iter().map(|p| params.theta0.eval(p)).collect();
    let mut theta = vec![theta0];
    let mut old_capacity: Vec<f64> = flatten(&cell_coefficients(geom, params, &h[0], None)?, |c| &c.heat_capacity);
    let mut defect: f64 = 0.0;

    for n in 1..h.len() {
        let coeffs = cell_coefficients(geom, params, &h[n], Some(&v[n - 1]))?;
        for c in &coeffs {
            for ic in &c.interface {
                defect = defect.max((ic.transport_flux - ic.velocity).abs());
            }
        }
        let conductivity = flatten(&coeffs, |c| &c.conductivity);
        let capacity = flatten(&coeffs, |c| &c.heat_capacity);
        let det = flatten(&coeffs, |c| &c.det);
        let transport = flatten(&coeffs, |c| &c.transport);
        let latent: Vec<f64> = coeffs
            .iter()
            .flat_map(|c| c.interface.iter().map(|ic| eps.eps * params.latent_heat * ic.velocity))
            .collect();

        let mass: Vec<f64> = capacity.iter().map(|c| c / dt).collect();
        let matrix = assemble_scalar(mesh, &dofs, ScalarFields { coeff: Some(&conductivity), mass: Some(&mass), ..Default::default() })?;

        let prev = theta.last().unwrap();
        let tq = field_at_quadrature(mesh, prev);
        let stored: Vec<f64> = old_capacity.iter().zip(&tq).map(|(c, t)| c * t / dt).collect();
        let flux: Vec<Vector2<f64>> =
            (0..tq.len()).map(|i| transport[i] * (eps.eps * capacity[i] * tq[i])).collect();
        let xs = deformed_points(eps, geom, &qp, &h[n]);
        let source: Vec<f64> = xs.iter().zip(&det).map(|(x, j)| j * params.g.eval(x)).collect();

        let mut rhs = load_scalar(mesh, &dofs, &stored)?;
        for (r, s) in rhs.iter_mut().zip(load_scalar(mesh, &dofs, &source)?) {
            *r += s;
        }
        for (r, s) in rhs.iter_mut().zip(load_scalar_flux(mesh, &dofs, &flux)?) {
            *r -= s;
        }
        if !latent.is_empty() {
            for (r, s) in rhs.iter_mut().zip(load_scalar_interface(mesh, &dofs, &latent)?) {
                *r -= s;
            }
        }
        let (x, _) = solve(&SparseSystem::new(matrix, rhs, dofs.mode()), solver)?;
        theta.push(x);
        old_capacity = capacity;
    }
    Ok(HeatTrajectory { theta, h, identity_defect: defect })
}

fn flatten<T: Copy>(coeffs: &[TransformedCoefficients], f: impl Fn(&TransformedCoefficients) -> &Vec<T>) -> Vec<T> {
    coeffs.iter().flat_map(|c| f(c).iter().copied()).collect()
}

/// Whole-interval successive substitution `v ↦ avg_Γ θ_r[v]` from `v ≡ 0`.
pub fn fixed_point_solve(
    eps: &EpsMesh,
    geom: &CellGeometry,
    params: &PhysicalParams,
    dt: f64,
    t_end: f64,
    opts: &MicroOptions,
) -> Result<MicroState> {
    params.validate()?;
    if !(dt > 0.0) {
        return Err(Error::Invalid(format!("dt must be positive, got {dt}")));
    }
    let steps = step_count(t_end, dt)?;
    let cells = eps.num_cells();
    let a_star = geom.shape().map(|s| s.a_star());
    let mut v = vec![vec![0.0; cells]; steps];
    let mut increments = Vec::new();
    for _ in 0..opts.max_iter {
        let traj = micro_heat_solve(eps, geom, params, &v, dt, &opts.solver)?;
        let next: Vec<Vec<f64>> = traj.theta[1..].iter().map(|th| cell_velocities(th, eps)).collect();
        let inc = next
            .iter()
            .zip(&v)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        increments.push(inc);
        log::debug!("fixed point iteration {}: increment {inc:.3e}", increments.len());
        let max_velocity = next.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        let horizon = match a_star {
            Some(a) if max_velocity > 0.0 => a / (10.0 * max_velocity),
            _ => f64::INFINITY,
        };
        if t_end > horizon {
            return Err(Error::Horizon { t_end, horizon, max_velocity });
        }
        if inc <= opts.tol {
            let mut vrows = vec![cell_velocities(&traj.theta[0], eps)];
            vrows.extend(v);
            return Ok(MicroState {
                level: eps.level,
                eps: eps.eps,
                dt,
                times: (0..=steps).map(|n| n as f64 * dt).collect(),
                theta: traj.theta,
                v: vrows,
                h: traj.h,
                increments,
                max_velocity,
                horizon,
                identity_defect: traj.identity_defect,
                self_consistency: inc,
            });
        }
        v = next;
    }
    Err(Error::FixedPointFailure { iterations: opts.max_iter, history: increments })
}

/// Quasi-static displacement at step `n` of a converged state, `u = 0` on
/// ∂Ω. The curvature term can be switched off with `surface_stress`.
pub fn micro_elasticity_post(
    state: &MicroState,
    eps: &EpsMesh,
    geom: &CellGeometry,
    params: &PhysicalParams,
    n: usize,
    surface_stress: bool,
) -> Result<Vec<f64>> {
    let mesh = &eps.mesh;
    let h = state.h.get(n).ok_or_else(|| Error::Invalid(format!("step {n} out of range")))?;
    let coeffs = cell_coefficients(geom, params, h, None)?;
    let dofs = DofMap::dirichlet(mesh, 2);
    let stiffness: Vec<Matrix4<f64>> = flatten(&coeffs, |c| &c.stiffness);
    let matrix = assemble_gradient_operator(mesh, &dofs, &stiffness)?;

    let qp = quadrature_points(mesh);
    let xs = deformed_points(eps, geom, &qp, h);
    let det = flatten(&coeffs, |c| &c.det);
    let expansion = flatten(&coeffs, |c| &c.expansion);
    let tq = field_at_quadrature(mesh, &state.theta[n]);
    let body: Vec<Vector2<f64>> = xs.iter().zip(&det).map(|(x, j)| params.body_force(x) * *j).collect();
    let thermal: Vec<Matrix2<f64>> = expansion.iter().zip(&tq).map(|(a, t)| a * *t).collect();
    let mut rhs = load_vector(mesh, &dofs, &body)?;
    for (r, s) in rhs.iter_mut().zip(load_vector_stress(mesh, &dofs, &thermal)?) {
        *r += s;
    }
    if surface_stress && !mesh.interface_edges().is_empty() {
        // ε² H_r n with κ_ε = κ/ε.
        let traction: Vec<Vector2<f64>> =
            coeffs.iter().flat_map(|c| c.interface.iter().map(|ic| ic.stress_normal * eps.eps)).collect();
        for (r, s) in rhs.iter_mut().zip(load_vector_interface(mesh, &dofs, &traction)?) {
            *r += s;
        }
    }
    let (x, _) = solve(&SparseSystem::new(matrix, rhs, dofs.mode()), &SolverOptions::default())?;
    Ok(dofs.expand(&x))
}
