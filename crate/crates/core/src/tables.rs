//! Precomputed effective coefficients over a grid of heights.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellhomog::{effective_coeffs_report, CellGeometry, EffectiveCoefficients, NO_HOLE_BAND};
use crate::error::{Error, Result};
use crate::fem::SolverOptions;
use crate::geometry::{symmetric_eigenvalues, Shape2, ShapeDescriptor};
use crate::params::PhysicalParams;

pub const FORMAT_VERSION: u32 = 1;

/// Default number of grid nodes over the admissible band.
pub const DEFAULT_NODES: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    #[default]
    MonotoneCubic,
}

enum Position {
    Node(usize),
    Segment(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientTable {
    pub format_version: u32,
    /// `None` for the cell without inclusion.
    pub shape: Option<ShapeDescriptor>,
    pub params_fingerprint: String,
    pub params: PhysicalParams,
    pub mesh_resolution: f64,
    pub interpolation: Interpolation,
    pub grid: Vec<f64>,
    pub nodes: Vec<EffectiveCoefficients>,
}

/// `n` uniform nodes over `[lo, hi]` with exact end points.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Uniform grid over the admissible band of `shape`.
pub fn default_grid(shape: Option<&Shape2>, n: usize) -> Vec<f64> {
    let (lo, hi) = shape.map_or((-NO_HOLE_BAND, NO_HOLE_BAND), |s| s.height_band());
    uniform_grid(lo, hi, n)
}

/// One cell solve per grid node, run in parallel, then validated.
pub fn build_table(
    geom: &CellGeometry,
    params: &PhysicalParams,
    grid: &[f64],
    interpolation: Interpolation,
) -> Result<CoefficientTable> {
    params.validate()?;
    check_grid(grid)?;
    for &h in grid {
        geom.check_height(h)?;
    }
    let opts = SolverOptions::default();
    let nodes = grid
        .par_iter()
        .map(|&h| {
            effective_coeffs_report(geom, params, h, &opts).map(|r| r.coeffs).map_err(|e| {
                log::error!("table node h = {h} failed: {e}");
                e
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let table = CoefficientTable {
        format_version: FORMAT_VERSION,
        shape: geom.shape().map(|s| s.descriptor()),
        params_fingerprint: params.fingerprint(),
        params: params.clone(),
        mesh_resolution: geom.mesh().mesh_size,
        interpolation,
        grid: grid.to_vec(),
        nodes,
    };
    table.validate()?;
    Ok(table)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::TableInvariant("grid needs at least two nodes".into()));
    }
    if grid.iter().any(|h| !h.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::TableInvariant("grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Fritsch–Carlson end-point slope (three-point, shape preserving).
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() || d0 == 0.0 {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

/// Monotone cubic slope at interior node `i`.
fn interior_slope(x: &[f64], y: &[f64], i: usize) -> f64 {
    let (ha, hb) = (x[i] - x[i - 1], x[i + 1] - x[i]);
    let (da, db) = ((y[i] - y[i - 1]) / ha, (y[i + 1] - y[i]) / hb);
    if da * db <= 0.0 {
        return 0.0;
    }
    let w1 = 2.0 * hb + ha;
    let w2 = hb + 2.0 * ha;
    (w1 + w2) / (w1 / da + w2 / db)
}

fn slope(x: &[f64], y: &[f64], i: usize) -> f64 {
    let n = x.len();
    if n == 2 {
        return (y[1] - y[0]) / (x[1] - x[0]);
    }
    let d = |k: usize| (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    if i == 0 {
        end_slope(x[1] - x[0], x[2] - x[1], d(0), d(1))
    } else if i == n - 1 {
        end_slope(x[n - 1] - x[n - 2], x[n - 2] - x[n - 3], d(n - 2), d(n - 3))
    } else {
        interior_slope(x, y, i)
    }
}

/// Value and derivative of the interpolant of `(x, y)` at `t` in interval `i`.
fn eval_segment(x: &[f64], y: &[f64], i: usize, t: f64, mode: Interpolation) -> (f64, f64) {
    let dx = x[i + 1] - x[i];
    let s = (t - x[i]) / dx;
    match mode {
        Interpolation::Linear => (y[i] + (y[i + 1] - y[i]) * s, (y[i + 1] - y[i]) / dx),
        Interpolation::MonotoneCubic => {
            let (m0, m1) = (slope(x, y, i), slope(x, y, i + 1));
            let (s2, s3) = (s * s, s * s * s);
            let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
            let h10 = s3 - 2.0 * s2 + s;
            let h01 = -2.0 * s3 + 3.0 * s2;
            let h11 = s3 - s2;
            let v = h00 * y[i] + h10 * dx * m0 + h01 * y[i + 1] + h11 * dx * m1;
            let dv = ((6.0 * s2 - 6.0 * s) * y[i]
                + (3.0 * s2 - 4.0 * s + 1.0) * dx * m0
                + (-6.0 * s2 + 6.0 * s) * y[i + 1]
                + (3.0 * s2 - 2.0 * s) * dx * m1)
                / dx;
            (v, dv)
        }
    }
}

impl CoefficientTable {
    pub fn range(&self) -> (f64, f64) {
        (self.grid[0], *self.grid.last().unwrap())
    }

    fn locate(&self, h: f64) -> Result<Position> {
        let (lo, hi) = self.range();
        if !(lo <= h && h <= hi) {
            return Err(Error::Admissibility { h, lo, hi });
        }
        if let Some(i) = self.grid.iter().position(|&g| g == h) {
            return Ok(Position::Node(i));
        }
        let i = self.grid.partition_point(|&g| g <= h) - 1;
        Ok(Position::Segment(i.min(self.grid.len() - 2)))
    }

    fn component_columns(&self) -> Vec<[f64; 13]> {
        self.nodes.iter().map(EffectiveCoefficients::components).collect()
    }

    fn column(cols: &[[f64; 13]], c: usize) -> Vec<f64> {
        cols.iter().map(|v| v[c]).collect()
    }

    /// Componentwise interpolation; exact at nodes, no extrapolation.
    pub fn interpolate(&self, h: f64) -> Result<EffectiveCoefficients> {
        self.interpolate_with_derivative(h).map(|(c, _)| c)
    }

    /// Interpolated coefficients and the derivative of every component in
    /// the order of [`EffectiveCoefficients::components`].
    pub fn interpolate_with_derivative(&self, h: f64) -> Result<(EffectiveCoefficients, [f64; 13])> {
        let cols = self.component_columns();
        match self.locate(h)? {
            Position::Node(node) => {
                // Derivative from the segment to the right (left at the end).
                let seg = node.min(self.grid.len() - 2);
                let d = std::array::from_fn(|c| {
                    eval_segment(&self.grid, &Self::column(&cols, c), seg, h, self.interpolation).1
                });
                Ok((self.nodes[node].clone(), d))
            }
            Position::Segment(i) => {
                let mut v = [0.0; 13];
                let mut d = [0.0; 13];
                for c in 0..13 {
                    let (a, b) = eval_segment(&self.grid, &Self::column(&cols, c), i, h, self.interpolation);
                    v[c] = a;
                    d[c] = b;
                }
                Ok((EffectiveCoefficients::from_components(h, &v), d))
            }
        }
    }

    /// Checks grid/node consistency, per-node invariants, the admissible
    /// band and SPD of interpolated `K*` between every node pair.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Version { found: self.format_version, expected: FORMAT_VERSION });
        }
        check_grid(&self.grid)?;
        if self.nodes.len() != self.grid.len() {
            return Err(Error::TableInvariant(format!(
                "{} nodes for {} grid points",
                self.nodes.len(),
                self.grid.len()
            )));
        }
        for (g, n) in self.grid.iter().zip(&self.nodes) {
            if n.h != *g {
                return Err(Error::TableInvariant(format!("node height {} does not match grid {}", n.h, g)));
            }
            n.validate()?;
        }
        if self.params_fingerprint != self.params.fingerprint() {
            return Err(Error::TableInvariant("parameter fingerprint does not match stored parameters".into()));
        }
        let (lo, hi) = match &self.shape {
            Some(d) => Shape2::from_descriptor(d)?.height_band(),
            None => (-NO_HOLE_BAND, NO_HOLE_BAND),
        };
        let (glo, ghi) = self.range();
        let slack = 1e-12 * (hi - lo);
        if glo < lo - slack || ghi > hi + slack {
            return Err(Error::TableInvariant(format!("grid [{glo}, {ghi}] leaves admissible band [{lo}, {hi}]")));
        }
        for w in self.grid.windows(2) {
            for k in 1..100 {
                let h = w[0] + (w[1] - w[0]) * k as f64 / 100.0;
                let c = self.interpolate(h)?;
                if symmetric_eigenvalues(&c.k_matrix()).iter().any(|&e| e <= 0.0) {
                    return Err(Error::TableInvariant(format!("interpolated K* not SPD at h = {h}")));
                }
            }
        }
        Ok(())
    }

    /// Refuses reuse with a different shape or different parameters.
    pub fn check_compatible(&self, shape: Option<&ShapeDescriptor>, params: &PhysicalParams) -> Result<()> {
        if self.params_fingerprint != params.fingerprint() {
            return Err(Error::TableMismatch("parameter fingerprint differs".into()));
        }
        if self.shape.as_ref() != shape {
            return Err(Error::TableMismatch("shape differs".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let found = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Parse("table lacks format_version".into()))?;
        if found != u64::from(FORMAT_VERSION) {
            return Err(Error::Version { found: found as u32, expected: FORMAT_VERSION });
        }
        let table: CoefficientTable = serde_json::from_str(text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Table of the cell without inclusion: every node equals the base material.
pub fn homogeneous_table(params: &PhysicalParams, grid: &[f64]) -> Result<CoefficientTable> {
    check_grid(grid)?;
    let table = CoefficientTable {
        format_version: FORMAT_VERSION,
        shape: None,
        params_fingerprint: params.fingerprint(),
        params: params.clone(),
        mesh_resolution: 0.0,
        interpolation: Interpolation::MonotoneCubic,
        grid: grid.to_vec(),
        nodes: grid.iter().map(|&h| EffectiveCoefficients::homogeneous(params, h)).collect(),
    };
    table.validate()?;
    Ok(table)
}
