//! Configured micro runs with file outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::compare::{micro_snapshots, CellSnapshot};
use super::epsmesh::{build_eps_mesh, EpsMesh};
use super::simulate::{fixed_point_solve, micro_elasticity_post, MicroOptions, MicroState};
use crate::cellhomog::CellGeometry;
use crate::error::{Error, Result};
use crate::fem::write_mesh;
use crate::geometry::{Shape2, ShapeDescriptor};
use crate::macrosolver::OutputConfig;
use crate::output::{numbered, write_json, CsvWriter};
use crate::params::PhysicalParams;

fn default_cell_mesh_h() -> f64 {
    0.05
}

fn default_tol() -> f64 {
    1e-8
}

fn default_max_iter() -> usize {
    50
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MicroConfig {
    #[serde(default)]
    pub level: u32,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_cell_mesh_h")]
    pub cell_mesh_h: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub shape: Option<ShapeDescriptor>,
    #[serde(default)]
    pub params: PhysicalParams,
    #[serde(default)]
    pub outputs: OutputConfig,
    /// Solve the elastic problem at output times.
    #[serde(default)]
    pub elasticity: bool,
    #[serde(default = "yes")]
    pub surface_stress: bool,
}

impl MicroConfig {
    pub fn new(level: u32, dt: f64, t_end: f64, shape: Option<ShapeDescriptor>, params: PhysicalParams) -> Self {
        Self {
            level,
            dt,
            t_end,
            cell_mesh_h: default_cell_mesh_h(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            shape,
            params,
            outputs: OutputConfig::default(),
            elasticity: false,
            surface_stress: true,
        }
    }

    pub fn options(&self) -> MicroOptions {
        MicroOptions { tol: self.tol, max_iter: self.max_iter, ..MicroOptions::default() }
    }

    pub fn geometry(&self) -> Result<CellGeometry> {
        let shape = self.shape.as_ref().map(Shape2::from_descriptor).transpose()?;
        CellGeometry::generate(shape, self.cell_mesh_h)
    }
}

#[derive(Debug, Clone)]
pub struct MicroRun {
    pub geometry: CellGeometry,
    pub eps: EpsMesh,
    pub state: MicroState,
    pub cells: Vec<CellSnapshot>,
    /// Displacements at output steps, when requested.
    pub displacements: Vec<(usize, Vec<f64>)>,
}

#[derive(Debug, Serialize)]
struct Contraction<'a> {
    level: u32,
    converged: bool,
    increments: &'a [f64],
    ratios: Vec<f64>,
    max_velocity: Option<f64>,
    horizon: Option<f64>,
    identity_defect: Option<f64>,
    self_consistency: Option<f64>,
    error: Option<String>,
}

fn ratios(inc: &[f64]) -> Vec<f64> {
    inc.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect()
}

pub const CELLS_HEADER: [&str; 7] = ["t", "k", "kx", "ky", "v", "h", "theta_avg"];

/// Runs the fixed-point solver and writes `mesh.txt`, `micro_series.csv`,
/// `micro_cells.csv`, `micro_fields_XXXX.csv` and `contraction.json` to
/// `config.outputs.dir` when set.
pub fn run_micro(config: &MicroConfig) -> Result<MicroRun> {
    if config.outputs.every == 0 {
        return Err(Error::Invalid("outputs.every must be at least 1".into()));
    }
    let geometry = config.geometry()?;
    let eps = build_eps_mesh(geometry.mesh(), config.level)?;
    let dir = config.outputs.dir.clone();
    if let Some(d) = &dir {
        std::fs::create_dir_all(d)?;
        write_mesh(&eps.mesh, &d.join("mesh.txt"))?;
    }
    let result = fixed_point_solve(&eps, &geometry, &config.params, config.dt, config.t_end, &config.options());
    let state = match result {
        Ok(s) => s,
        Err(e) => {
            if let Some(d) = &dir {
                let history = match &e {
                    Error::FixedPointFailure { history, .. } => history.clone(),
                    _ => Vec::new(),
                };
                write_json(
                    &d.join("contraction.json"),
                    &Contraction {
                        level: config.level,
                        converged: false,
                        ratios: ratios(&history),
                        increments: &history,
                        max_velocity: None,
                        horizon: None,
                        identity_defect: None,
                        self_consistency: None,
                        error: Some(e.to_string()),
                    },
                )?;
            }
            return Err(e);
        }
    };
    let cells = micro_snapshots(&state, &eps, &geometry);
    let steps = state.steps();
    let outputs: Vec<usize> = (0..=steps).filter(|n| n % config.outputs.every == 0 || *n == steps).collect();
    let mut displacements = Vec::new();
    if config.elasticity {
        for &n in &outputs {
            displacements.push((n, micro_elasticity_post(&state, &eps, &geometry, &config.params, n, config.surface_stress)?));
        }
    }
    let run = MicroRun { geometry, eps, state, cells, displacements };
    if let Some(d) = &dir {
        write_outputs(&run, &outputs, d)?;
    }
    Ok(run)
}

fn write_outputs(run: &MicroRun, outputs: &[usize], dir: &Path) -> Result<()> {
    let state = &run.state;
    let k = run.eps.num_cells();
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((0..k).map(|i| format!("v_{i}")));
    header.extend((0..k).map(|i| format!("h_{i}")));
    header.push("max_abs_theta".into());
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut series = CsvWriter::create(&dir.join("micro_series.csv"), &refs)?;
    let mut cells = CsvWriter::create(&dir.join("micro_cells.csv"), &CELLS_HEADER)?;
    for (n, snap) in run.cells.iter().enumerate() {
        let mut row = vec![snap.t];
        row.extend(&snap.v);
        row.extend(&snap.h);
        row.push(state.theta[n].iter().fold(0.0f64, |m, v| m.max(v.abs())));
        series.row(&row)?;
        for c in 0..k {
            let (kx, ky) = run.eps.cell_index(c);
            cells.row(&[snap.t, c as f64, kx as f64, ky as f64, snap.v[c], snap.h[c], snap.theta[c]])?;
        }
    }
    for (frame, &n) in outputs.iter().enumerate() {
        let u = run.displacements.iter().find(|(m, _)| *m == n).map(|(_, u)| u);
        let mut w = CsvWriter::create(&numbered(dir, "micro_fields", frame), &["node", "x", "y", "theta", "ux", "uy"])?;
        for (i, p) in run.eps.mesh.nodes.iter().enumerate() {
            let (ux, uy) = u.map_or((0.0, 0.0), |u| (u[2 * i], u[2 * i + 1]));
            w.row(&[i as f64, p[0], p[1], state.theta[n][i], ux, uy])?;
        }
    }
    write_json(
        &dir.join("contraction.json"),
        &Contraction {
            level: state.level,
            converged: true,
            increments: &state.increments,
            ratios: ratios(&state.increments),
            max_velocity: Some(state.max_velocity),
            horizon: Some(state.horizon).filter(|h| h.is_finite()),
            identity_defect: Some(state.identity_defect),
            self_consistency: Some(state.self_consistency),
            error: None,
        },
    )?;
    write_json(&dir.join("micro_state.json"), state)
}

/// Output directory helper for tests and scripts.
pub fn level_dir(root: &Path, level: u32) -> PathBuf {
    root.join(format!("level_{level}"))
}
