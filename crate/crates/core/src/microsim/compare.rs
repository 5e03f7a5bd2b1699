//! Micro–macro comparison at shared output times.

use std::path::Path;

use serde::Serialize;

use super::epsmesh::EpsMesh;
use super::simulate::{cell_mean_temperature, MicroState};
use crate::cellhomog::CellGeometry;
use crate::error::{Error, Result};
use crate::fem::{read_mesh, Mesh, Point2, PointLocator};
use crate::macrosolver::{MacroState, FIELDS_HEADER};
use crate::output::{numbered, read_csv};

/// Per-cell micro data at one time: physical cell means of `θ_r`, heights
/// and velocities, cells ordered `k = ky · 2ⁿ + kx`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSnapshot {
    pub t: f64,
    pub theta: Vec<f64>,
    pub h: Vec<f64>,
    pub v: Vec<f64>,
}

pub fn micro_snapshots(state: &MicroState, eps: &EpsMesh, geom: &CellGeometry) -> Vec<CellSnapshot> {
    (0..state.times.len())
        .map(|n| CellSnapshot {
            t: state.times[n],
            theta: cell_mean_temperature(&state.theta[n], eps, geom, &state.h[n]),
            h: state.h[n].clone(),
            v: state.v[n].clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub level: u32,
    pub times: Vec<f64>,
    /// Discrete `L²(Ω)` error of cell means of `θ_r` against macro `θ` at
    /// cell centers.
    pub theta_l2: Vec<f64>,
    /// Discrete `L²(Ω)` error of cell heights against cell means of macro `h`.
    pub h_l2: Vec<f64>,
}

impl ComparisonReport {
    pub fn final_theta(&self) -> f64 {
        self.theta_l2.last().copied().unwrap_or(0.0)
    }

    pub fn final_h(&self) -> f64 {
        self.h_l2.last().copied().unwrap_or(0.0)
    }
}

const CELL_SAMPLES: usize = 8;

fn level_of(cells: usize) -> Result<u32> {
    let m = (cells as f64).sqrt().round() as usize;
    if m * m != cells || !m.is_power_of_two() {
        return Err(Error::Invalid(format!("{cells} cells do not form a 2ⁿ × 2ⁿ array")));
    }
    Ok(m.trailing_zeros())
}

/// Errors at every micro time; each must also be a macro output time.
pub fn compare_micro_macro(
    micro: &[CellSnapshot],
    macro_mesh: &Mesh,
    macro_states: &[MacroState],
) -> Result<ComparisonReport> {
    let cells = micro.first().map_or(1, |s| s.theta.len());
    let level = level_of(cells)?;
    let m = 1usize << level;
    let eps = 1.0 / m as f64;
    let locator = PointLocator::new(macro_mesh);
    let eval = |field: &[f64], p: &Point2| {
        locator.eval(field, p).ok_or_else(|| Error::Invalid(format!("point {p:?} outside the macro mesh")))
    };
    let mut report = ComparisonReport { level, times: Vec::new(), theta_l2: Vec::new(), h_l2: Vec::new() };
    for snap in micro {
        if snap.theta.len() != cells || snap.h.len() != cells {
            return Err(Error::Invalid("micro snapshots disagree in cell count".into()));
        }
        let tol = 1e-9 * snap.t.abs().max(1.0);
        let state = macro_states
            .iter()
            .find(|s| (s.t - snap.t).abs() <= tol)
            .ok_or_else(|| Error::Cadence(format!("micro time {} has no macro output", snap.t)))?;
        let (mut et, mut eh) = (0.0, 0.0);
        for k in 0..cells {
            let (kx, ky) = ((k % m) as f64, (k / m) as f64);
            let center = Point2::new((kx + 0.5) * eps, (ky + 0.5) * eps);
            et += (snap.theta[k] - eval(&state.theta, &center)?).powi(2);
            let mut hm = 0.0;
            for j in 0..CELL_SAMPLES {
                for i in 0..CELL_SAMPLES {
                    let p = Point2::new(
                        (kx + (i as f64 + 0.5) / CELL_SAMPLES as f64) * eps,
                        (ky + (j as f64 + 0.5) / CELL_SAMPLES as f64) * eps,
                    );
                    hm += eval(&state.h, &p)?;
                }
            }
            hm /= (CELL_SAMPLES * CELL_SAMPLES) as f64;
            eh += (snap.h[k] - hm).powi(2);
        }
        report.times.push(snap.t);
        report.theta_l2.push((et * eps * eps).sqrt());
        report.h_l2.push((eh * eps * eps).sqrt());
    }
    Ok(report)
}

fn column(header: &[String], name: &str, path: &Path) -> Result<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse(format!("{}: missing column '{name}'", path.display())))
}

/// Reads the mesh and every field frame written by a macro run.
pub fn load_macro_dir(dir: &Path) -> Result<(Mesh, Vec<MacroState>)> {
    let mesh = read_mesh(&dir.join("mesh.txt"))?;
    let series = dir.join("series.csv");
    let (header, rows) = read_csv(&series)?;
    let tcol = column(&header, "t", &series)?;
    let mut states = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let path = numbered(dir, "fields", i);
        let (fh, frows) = read_csv(&path)?;
        if fh != FIELDS_HEADER {
            return Err(Error::Parse(format!("{}: unexpected header", path.display())));
        }
        if frows.len() != mesh.num_nodes() {
            return Err(Error::Parse(format!("{}: {} rows for {} nodes", path.display(), frows.len(), mesh.num_nodes())));
        }
        states.push(MacroState {
            t: row[tcol],
            theta: frows.iter().map(|r| r[3]).collect(),
            h: frows.iter().map(|r| r[4]).collect(),
            u: Some(frows.iter().flat_map(|r| [r[5], r[6]]).collect()),
        });
    }
    Ok((mesh, states))
}

/// Reads `micro_cells.csv` of a micro run.
pub fn load_micro_dir(dir: &Path) -> Result<Vec<CellSnapshot>> {
    let path = dir.join("micro_cells.csv");
    let (header, rows) = read_csv(&path)?;
    let [t, k, v, h, th] = ["t", "k", "v", "h", "theta_avg"].map(|n| column(&header, n, &path));
    let (t, k, v, h, th) = (t?, k?, v?, h?, th?);
    let mut out: Vec<CellSnapshot> = Vec::new();
    for row in rows {
        if out.last().is_none_or(|s| s.t != row[t]) {
            out.push(CellSnapshot { t: row[t], theta: Vec::new(), h: Vec::new(), v: Vec::new() });
        }
        let snap = out.last_mut().unwrap();
        if row[k] as usize != snap.theta.len() {
            return Err(Error::Parse(format!("{}: cells out of order at t = {}", path.display(), row[t])));
        }
        snap.theta.push(row[th]);
        snap.h.push(row[h]);
        snap.v.push(row[v]);
    }
    Ok(out)
}
