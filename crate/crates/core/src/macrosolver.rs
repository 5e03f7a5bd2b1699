//! Homogenized heat / height / elasticity system on the macroscopic square.
//!
//! Per time step the height and temperature are coupled by a Picard loop:
//! `h⁽ᵐ⁾ = hⁿ + Δt θ⁽ᵐ⁻¹⁾`, then `θ⁽ᵐ⁾` solves the implicit Euler step
//!
//! ```text
//! (ρc φ(h⁽ᵐ⁾) θ⁽ᵐ⁾ - ρc φ(hⁿ) θⁿ)/Δt - div(K*(h⁽ᵐ⁾)∇θ⁽ᵐ⁾) + L φ_Γ(h⁽ᵐ⁾) θ⁽ᵐ⁾ = φ(h⁽ᵐ⁾) g
//! ```
//!
//! with no-flux boundaries. The elastic displacement is a post-processing
//! step at output times.

use std::path::{Path, PathBuf};

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::cellhomog::EffectiveCoefficients;
use crate::error::{Error, Result};
use crate::fem::{
    assemble_elastic, assemble_scalar, field_at_quadrature, generate_macro_mesh, integrate, load_scalar,
    load_vector, load_vector_stress, quadrature_points, solve, write_mesh, CsrMatrix, DofMap, Mesh, ScalarFields,
    SolverOptions, SparseSystem, TripletBuilder,
};
use crate::output::{numbered, write_json, CsvWriter};
use crate::params::PhysicalParams;
use crate::tables::CoefficientTable;

fn default_tol() -> f64 {
    1e-10
}

fn default_max_iter() -> usize {
    50
}

fn default_every() -> usize {
    1
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PicardConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { tol: default_tol(), max_iter: default_max_iter() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write fields every this many steps (step 0 and the last step always).
    #[serde(default = "default_every")]
    pub every: usize,
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { every: default_every(), dir: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroConfig {
    pub mesh: MeshSpec,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub picard: PicardConfig,
    /// Path of the coefficient table (resolved by the caller).
    #[serde(default)]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub params: PhysicalParams,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub lumped_mass: bool,
    /// When false the height stays at its initial value (frozen geometry).
    #[serde(default = "yes")]
    pub evolve_height: bool,
    /// Solve the elastic problem at output times.
    #[serde(default = "yes")]
    pub elasticity: bool,
}

impl MacroConfig {
    pub fn new(nx: usize, dt: f64, t_end: f64, params: PhysicalParams) -> Self {
        Self {
            mesh: MeshSpec { nx, ny: nx },
            dt,
            t_end,
            picard: PicardConfig::default(),
            table: None,
            params,
            outputs: OutputConfig::default(),
            lumped_mass: false,
            evolve_height: true,
            elasticity: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh.nx == 0 || self.mesh.ny == 0 {
            return Err(Error::Invalid("mesh.nx and mesh.ny must be positive".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Invalid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Invalid(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if !(self.picard.tol > 0.0) || self.picard.max_iter == 0 {
            return Err(Error::Invalid("picard tolerance and max_iter must be positive".into()));
        }
        if self.outputs.every == 0 {
            return Err(Error::Invalid("outputs.every must be at least 1".into()));
        }
        self.steps()?;
        self.params.validate()
    }

    /// Number of steps; `t_end` must be a whole multiple of `dt`.
    pub fn steps(&self) -> Result<usize> {
        step_count(self.t_end, self.dt)
    }
}

pub(crate) fn step_count(t_end: f64, dt: f64) -> Result<usize> {
    let n = (t_end / dt).round();
    if (n * dt - t_end).abs() > 1e-9 * t_end.max(dt) {
        return Err(Error::Invalid(format!("t_end = {t_end} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

/// Nodal fields at one time. `u` is interleaved `(ux, uy)` per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub h: Vec<f64>,
    pub u: Option<Vec<f64>>,
}

/// Nodal `h_new = h_old + Δt θ_new`.
pub fn update_height(h_old: &[f64], theta_new: &[f64], dt: f64) -> Vec<f64> {
    h_old.iter().zip(theta_new).map(|(h, t)| h + dt * t).collect()
}

/// First node whose height leaves the table range.
pub fn check_height_band(table: &CoefficientTable, h: &[f64], time: f64) -> Result<()> {
    let (lo, hi) = table.range();
    match h.iter().position(|v| !(lo <= *v && *v <= hi)) {
        Some(node) => Err(Error::HeightBand { node, time, h: h[node], lo, hi }),
        None => Ok(()),
    }
}

/// Coefficients at every quadrature point for a nodal height field.
fn coefficients_at(mesh: &Mesh, table: &CoefficientTable, h: &[f64]) -> Result<Vec<EffectiveCoefficients>> {
    let hq = field_at_quadrature(mesh, h);
    let mut out = Vec::with_capacity(hq.len());
    let mut last: Option<(f64, EffectiveCoefficients)> = None;
    for v in hq {
        if let Some((lh, c)) = &last {
            if *lh == v {
                out.push(c.clone());
                continue;
            }
        }
        let c = table.interpolate(v)?;
        last = Some((v, c.clone()));
        out.push(c);
    }
    Ok(out)
}

fn diagonal(values: Vec<f64>) -> CsrMatrix {
    let mut b = TripletBuilder::new(values.len());
    for (i, v) in values.into_iter().enumerate() {
        b.push(i, i, v);
    }
    b.build()
}

/// Implicit heat step shared by [`step_heat`] and [`run_macro`].
pub struct HeatStepper<'a> {
    mesh: &'a Mesh,
    table: &'a CoefficientTable,
    params: &'a PhysicalParams,
    dofs: DofMap,
    g: Vec<f64>,
    lumped: bool,
    opts: SolverOptions,
}

impl<'a> HeatStepper<'a> {
    pub fn new(mesh: &'a Mesh, table: &'a CoefficientTable, params: &'a PhysicalParams, lumped: bool) -> Self {
        let g = quadrature_points(mesh).iter().map(|p| params.g.eval(p)).collect();
        let opts = SolverOptions { tol: 1e-13, ..SolverOptions::default() };
        Self { mesh, table, params, dofs: DofMap::free(mesh, 1), g, lumped, opts }
    }

    /// `M_{ρcφ(h)}`-weighted mass vector `M θ` (consistent or lumped).
    pub fn capacity_times(&self, h: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        let coeffs = coefficients_at(self.mesh, self.table, h)?;
        let m: Vec<f64> = coeffs.iter().map(|c| self.params.volumetric_heat() * c.phi).collect();
        if self.lumped {
            let d = load_scalar(self.mesh, &self.dofs, &m)?;
            Ok(d.iter().zip(theta).map(|(a, b)| a * b).collect())
        } else {
            let mm = assemble_scalar(self.mesh, &self.dofs, ScalarFields { mass: Some(&m), ..Default::default() })?;
            Ok(mm.apply(theta))
        }
    }

    /// `∫ ρc φ(h) θ`, the conserved heat content.
    pub fn heat_content(&self, h: &[f64], theta: &[f64]) -> Result<f64> {
        Ok(self.capacity_times(h, theta)?.iter().sum())
    }

    pub fn step(&self, theta_old: &[f64], h_old: &[f64], h_new: &[f64], dt: f64, time: f64) -> Result<Vec<f64>> {
        check_height_band(self.table, h_new, time)?;
        let rc = self.params.volumetric_heat();
        let coeffs = coefficients_at(self.mesh, self.table, h_new)?;
        let kstar: Vec<Matrix2<f64>> = coeffs.iter().map(EffectiveCoefficients::k_matrix).collect();
        let reaction: Vec<f64> =
            coeffs.iter().map(|c| rc * c.phi / dt + self.params.latent_heat * c.phi_gamma).collect();
        let matrix = if self.lumped {
            let k = assemble_scalar(self.mesh, &self.dofs, ScalarFields { coeff: Some(&kstar), ..Default::default() })?;
            k.add_scaled(1.0, &diagonal(load_scalar(self.mesh, &self.dofs, &reaction)?))
        } else {
            assemble_scalar(
                self.mesh,
                &self.dofs,
                ScalarFields { coeff: Some(&kstar), mass: Some(&reaction), ..Default::default() },
            )?
        };
        let mut rhs = self.capacity_times(h_old, theta_old)?;
        rhs.iter_mut().for_each(|v| *v /= dt);
        let src: Vec<f64> = coeffs.iter().zip(&self.g).map(|(c, g)| c.phi * g).collect();
        for (r, s) in rhs.iter_mut().zip(load_scalar(self.mesh, &self.dofs, &src)?) {
            *r += s;
        }
        let (x, _) = solve(&SparseSystem::new(matrix, rhs, self.dofs.mode()), &self.opts)?;
        Ok(x)
    }
}

/// One implicit Euler heat step with coefficients at `h_new` (and the old
/// capacity at `h_old`).
#[allow(clippy::too_many_arguments)]
pub fn step_heat(
    mesh: &Mesh,
    table: &CoefficientTable,
    params: &PhysicalParams,
    dt: f64,
    theta_old: &[f64],
    h_old: &[f64],
    h_new: &[f64],
    time: f64,
) -> Result<Vec<f64>> {
    HeatStepper::new(mesh, table, params, false).step(theta_old, h_old, h_new, dt, time)
}

/// Load vector `∫ φ f·v + ∫ H*·v + ∫ θ α φ div v` on the Dirichlet space.
pub fn elasticity_load(
    mesh: &Mesh,
    table: &CoefficientTable,
    params: &PhysicalParams,
    theta: &[f64],
    h: &[f64],
) -> Result<Vec<f64>> {
    let dofs = DofMap::dirichlet(mesh, 2);
    let coeffs = coefficients_at(mesh, table, h)?;
    let qp = quadrature_points(mesh);
    let tq = field_at_quadrature(mesh, theta);
    let body: Vec<Vector2<f64>> = coeffs
        .iter()
        .zip(&qp)
        .map(|(c, p)| params.body_force(p) * c.phi + c.h_vector())
        .collect();
    let thermal: Vec<Matrix2<f64>> =
        coeffs.iter().zip(&tq).map(|(c, t)| Matrix2::identity() * (t * params.alpha * c.phi)).collect();
    let mut rhs = load_vector(mesh, &dofs, &body)?;
    for (r, s) in rhs.iter_mut().zip(load_vector_stress(mesh, &dofs, &thermal)?) {
        *r += s;
    }
    Ok(rhs)
}

/// Stiffness `∫ C*(h) e(u):e(v)` with `u = 0` on ∂Ω.
pub fn elasticity_matrix(mesh: &Mesh, table: &CoefficientTable, h: &[f64]) -> Result<CsrMatrix> {
    let dofs = DofMap::dirichlet(mesh, 2);
    let coeffs = coefficients_at(mesh, table, h)?;
    let c: Vec<_> = coeffs.iter().map(EffectiveCoefficients::c_tensor).collect();
    assemble_elastic(mesh, &dofs, &c)
}

/// Quasi-static displacement for the current `θ`, `h`; nodal, interleaved.
pub fn solve_elasticity(
    mesh: &Mesh,
    table: &CoefficientTable,
    params: &PhysicalParams,
    theta: &[f64],
    h: &[f64],
) -> Result<Vec<f64>> {
    let dofs = DofMap::dirichlet(mesh, 2);
    let matrix = elasticity_matrix(mesh, table, h)?;
    let rhs = elasticity_load(mesh, table, params, theta, h)?;
    let (x, _) = solve(&SparseSystem::new(matrix, rhs, dofs.mode()), &SolverOptions::default())?;
    Ok(dofs.expand(&x))
}

/// Summary row of one output time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub theta_mean: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_mean: f64,
    pub u_max: f64,
    pub picard_iters: usize,
}

pub const SERIES_HEADER: [&str; 9] =
    ["t", "theta_min", "theta_max", "theta_mean", "h_min", "h_max", "h_mean", "u_max", "picard_iters"];
pub const FIELDS_HEADER: [&str; 7] = ["node", "x", "y", "theta", "h", "ux", "uy"];

impl SeriesRow {
    fn values(&self) -> Vec<f64> {
        vec![
            self.t,
            self.theta_min,
            self.theta_max,
            self.theta_mean,
            self.h_min,
            self.h_max,
            self.h_mean,
            self.u_max,
            self.picard_iters as f64,
        ]
    }
}

#[derive(Debug, Clone)]
pub struct MacroRun {
    pub mesh: Mesh,
    /// States at output times.
    pub states: Vec<MacroState>,
    pub series: Vec<SeriesRow>,
    /// Picard increments `‖θ⁽ᵐ⁾ - θ⁽ᵐ⁻¹⁾‖_∞` of every step.
    pub picard: Vec<Vec<f64>>,
    /// Heuristic step size below which the Picard map is a contraction.
    pub picard_dt_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
struct Summary {
    steps_completed: usize,
    steps: usize,
    dt: f64,
    t_end: f64,
    picard_dt_threshold: f64,
    max_picard_iters: usize,
    completed: bool,
    error: Option<String>,
}

fn stats(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)))
}

struct Sink {
    dir: PathBuf,
    series: CsvWriter,
    frame: usize,
}

impl Sink {
    fn open(dir: &Path, mesh: &Mesh) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        write_mesh(mesh, &dir.join("mesh.txt"))?;
        let series = CsvWriter::create(&dir.join("series.csv"), &SERIES_HEADER)?;
        Ok(Self { dir: dir.to_path_buf(), series, frame: 0 })
    }

    fn write(&mut self, mesh: &Mesh, state: &MacroState, row: &SeriesRow) -> Result<()> {
        self.series.row(&row.values())?;
        let mut w = CsvWriter::create(&numbered(&self.dir, "fields", self.frame), &FIELDS_HEADER)?;
        for (i, p) in mesh.nodes.iter().enumerate() {
            let (ux, uy) = state.u.as_ref().map_or((0.0, 0.0), |u| (u[2 * i], u[2 * i + 1]));
            w.row(&[i as f64, p[0], p[1], state.theta[i], state.h[i], ux, uy])?;
        }
        self.frame += 1;
        Ok(())
    }
}

/// Time integration from `θ0`, `h = 0`. Outputs go to `config.outputs.dir`
/// when set; they are flushed as they are produced, so a run aborted by a
/// height-band violation leaves every completed output on disk.
pub fn run_macro(config: &MacroConfig, table: &CoefficientTable) -> Result<MacroRun> {
    config.validate()?;
    let params = &config.params;
    let mesh = generate_macro_mesh(config.mesh.nx, config.mesh.ny)?;
    let steps = config.steps()?;
    let mut sink = match &config.outputs.dir {
        Some(d) => Some(Sink::open(d, &mesh)?),
        None => None,
    };
    let stepper = HeatStepper::new(&mesh, table, params, config.lumped_mass);
    let mut theta: Vec<f64> = mesh.nodes.iter().map(|p| params.theta0.eval(p)).collect();
    let mut h = vec![0.0; mesh.num_nodes()];
    check_height_band(table, &h, 0.0)?;

    let phi_min = table.nodes.iter().map(|n| n.phi).fold(f64::INFINITY, f64::min);
    let gamma_max = table.nodes.iter().map(|n| n.phi_gamma).fold(0.0, f64::max);
    let theta_scale = theta.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(params.g.max_abs_on_unit_square());
    let picard_dt_threshold =
        if gamma_max * theta_scale > 0.0 { 0.5 * phi_min / (gamma_max * theta_scale) } else { f64::INFINITY };

    let mut run = MacroRun { mesh: mesh.clone(), states: Vec::new(), series: Vec::new(), picard: Vec::new(), picard_dt_threshold };
    let mut summary = Summary {
        steps_completed: 0,
        steps,
        dt: config.dt,
        t_end: config.t_end,
        picard_dt_threshold,
        max_picard_iters: 0,
        completed: false,
        error: None,
    };

    let emit = |run: &mut MacroRun, sink: &mut Option<Sink>, t: f64, theta: &[f64], h: &[f64], iters: usize| -> Result<()> {
        let u = if config.elasticity { Some(solve_elasticity(&mesh, table, params, theta, h)?) } else { None };
        let (tmin, tmax) = stats(theta);
        let (hmin, hmax) = stats(h);
        let u_max = u.as_ref().map_or(0.0, |u| {
            u.chunks(2).map(|c| (c[0] * c[0] + c[1] * c[1]).sqrt()).fold(0.0, f64::max)
        });
        let row = SeriesRow {
            t,
            theta_min: tmin,
            theta_max: tmax,
            theta_mean: integrate(&mesh, theta, None),
            h_min: hmin,
            h_max: hmax,
            h_mean: integrate(&mesh, h, None),
            u_max,
            picard_iters: iters,
        };
        let state = MacroState { t, theta: theta.to_vec(), h: h.to_vec(), u };
        if let Some(s) = sink.as_mut() {
            s.write(&mesh, &state, &row)?;
        }
        run.states.push(state);
        run.series.push(row);
        Ok(())
    };

    let result = (|| -> Result<()> {
        emit(&mut run, &mut sink, 0.0, &theta, &h, 0)?;
        for n in 1..=steps {
            let t = n as f64 * config.dt;
            let mut prev = theta.clone();
            let mut increments = Vec::new();
            let mut converged = false;
            let mut h_new = h.clone();
            for _ in 0..config.picard.max_iter {
                if config.evolve_height {
                    h_new = update_height(&h, &prev, config.dt);
                }
                let next = stepper.step(&theta, &h, &h_new, config.dt, t)?;
                let inc = next.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                increments.push(inc);
                prev = next;
                if inc <= config.picard.tol || !config.evolve_height {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::PicardFailure { time: t, increment: *increments.last().unwrap() });
            }
            if increments.windows(2).any(|w| w[1] > w[0]) {
                log::warn!("non-monotone Picard increments at t = {t}: {increments:?}");
            }
            theta = prev;
            if config.evolve_height {
                h = update_height(&h, &theta, config.dt);
                check_height_band(table, &h, t)?;
            }
            let iters = increments.len();
            summary.max_picard_iters = summary.max_picard_iters.max(iters);
            run.picard.push(increments);
            summary.steps_completed = n;
            if n % config.outputs.every == 0 || n == steps {
                emit(&mut run, &mut sink, t, &theta, &h, iters)?;
            }
        }
        Ok(())
    })();

    summary.completed = result.is_ok();
    summary.error = result.as_ref().err().map(|e| e.to_string());
    if let Some(s) = &sink {
        write_json(&s.dir.join("summary.json"), &summary)?;
        write_json(&s.dir.join("picard.json"), &run.picard)?;
    }
    result.map(|_| run)
}
