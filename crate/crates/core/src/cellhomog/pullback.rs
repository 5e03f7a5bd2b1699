//! Cached cell geometry and coefficients pulled back to the reference cell.

use nalgebra::{Matrix2, Matrix4, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{generate_cell_mesh, interface_points, quadrature_points, Mesh, Point2, Tensor4};
use crate::geometry::{band_frame, offset_curvature, BandFrame, Cutoff, Shape2, ShapeKind};
use crate::params::PhysicalParams;

/// Height band used when the cell has no inclusion (the transform is then
/// the identity for every `h`).
pub const NO_HOLE_BAND: f64 = 0.1;

const INTERFACE_SAMPLES: usize = 4096;

/// Geometry of one interface quadrature point, taken at its projection onto Γ.
#[derive(Debug, Clone, Copy)]
pub struct InterfacePoint {
    /// Quadrature point on the mesh edge.
    pub point: Point2,
    /// Edge length times rule weight.
    pub weight: f64,
    /// Closest point on Γ.
    pub gamma: Point2,
    pub normal: Vector2<f64>,
    pub shape_tensor: Matrix2<f64>,
    pub frame: BandFrame<2>,
}

/// Dense quadrature of the exact interface.
#[derive(Debug, Clone, Default)]
struct InterfaceSamples {
    weights: Vec<f64>,
    normals: Vec<Vector2<f64>>,
    tensors: Vec<Matrix2<f64>>,
}

/// Reference cell mesh with all height-independent geometric data cached at
/// quadrature points.
#[derive(Debug, Clone)]
pub struct CellGeometry {
    shape: Option<Shape2>,
    mesh: Mesh,
    frames: Vec<BandFrame<2>>,
    interface: Vec<InterfacePoint>,
    samples: InterfaceSamples,
}

impl CellGeometry {
    pub fn new(shape: Option<Shape2>, mesh: Mesh) -> Result<Self> {
        let qp = quadrature_points(&mesh);
        let (frames, interface, samples) = match &shape {
            None => (vec![BandFrame::inactive(); qp.len()], Vec::new(), InterfaceSamples::default()),
            Some(s) => {
                let cutoff = Cutoff::new(s.a1(), s.a2());
                let frames = qp.par_iter().map(|x| band_frame(s, &cutoff, x)).collect::<Result<Vec<_>>>()?;
                let interface = interface_points(&mesh)
                    .par_iter()
                    .map(|ep| {
                        let p = s.project(&ep.point)?;
                        let frame = band_frame(s, &cutoff, &p.point)?;
                        Ok(InterfacePoint {
                            point: ep.point,
                            weight: ep.weight,
                            gamma: p.point,
                            normal: unit_normal(s, &p.point),
                            shape_tensor: s.shape_tensor_unchecked(&p.point),
                            frame,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                (frames, interface, sample_interface(s))
            }
        };
        Ok(Self { shape, mesh, frames, interface, samples })
    }

    /// Generates the reference mesh and the cache in one go.
    pub fn generate(shape: Option<Shape2>, target_h: f64) -> Result<Self> {
        let mesh = generate_cell_mesh(shape.as_ref(), target_h)?;
        Self::new(shape, mesh)
    }

    pub fn shape(&self) -> Option<&Shape2> {
        self.shape.as_ref()
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn frames(&self) -> &[BandFrame<2>] {
        &self.frames
    }

    pub fn interface(&self) -> &[InterfacePoint] {
        &self.interface
    }

    /// Admissible heights `[-a*/10, a*/10]`.
    pub fn height_band(&self) -> (f64, f64) {
        match &self.shape {
            Some(s) => s.height_band(),
            None => (-NO_HOLE_BAND, NO_HOLE_BAND),
        }
    }

    pub fn check_height(&self, h: f64) -> Result<()> {
        let (lo, hi) = self.height_band();
        if !(lo <= h && h <= hi) {
            return Err(Error::Admissibility { h, lo, hi });
        }
        Ok(())
    }

    /// Measure of the reference interface.
    pub fn interface_measure(&self) -> f64 {
        self.interface_measure_at(0.0)
    }

    /// `|Γ(h)|`: closed form for the circle, dense quadrature of the offset
    /// surface Jacobian otherwise.
    pub fn interface_measure_at(&self, h: f64) -> f64 {
        match self.shape.as_ref().map(|s| s.kind()) {
            None => 0.0,
            Some(ShapeKind::Ball { radius, .. }) => 2.0 * std::f64::consts::PI * (radius + h),
            Some(_) => self
                .samples
                .weights
                .iter()
                .zip(&self.samples.tensors)
                .map(|(w, l)| w * (Matrix2::identity() - l * h).determinant())
                .sum(),
        }
    }

    /// `∫_{Γ(h)} κ(h) n dσ` over the exact offset interface.
    pub fn curvature_normal_integral(&self, h: f64) -> Vector2<f64> {
        let s = &self.samples;
        let mut acc = Vector2::zeros();
        for i in 0..s.weights.len() {
            let l = s.tensors[i];
            let jac = (Matrix2::identity() - l * h).determinant();
            acc += s.normals[i] * (s.weights[i] * jac * offset_curvature(&l, h));
        }
        acc
    }
}

fn unit_normal(s: &Shape2, gamma: &Point2) -> Vector2<f64> {
    s.normal(gamma).unwrap_or_else(|_| (gamma - s.center()).normalize())
}

fn sample_interface(s: &Shape2) -> InterfaceSamples {
    let pts = s.boundary_samples(INTERFACE_SAMPLES);
    let n = pts.len();
    let mut out = InterfaceSamples::default();
    for i in 0..n {
        let prev = pts[(i + n - 1) % n];
        let next = pts[(i + 1) % n];
        out.weights.push(0.5 * ((pts[i] - prev).norm() + (next - pts[i]).norm()));
        out.normals.push(unit_normal(s, &pts[i]));
        out.tensors.push(s.shape_tensor_unchecked(&pts[i]));
    }
    out
}

/// Pulled-back coefficients on the interface quadrature points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceCoefficients {
    pub normal: Vector2<f64>,
    /// `J_surf = det(Id - h L_Γ)`.
    pub surface_jacobian: f64,
    /// Volume Jacobian `det F` at the interface point.
    pub volume_jacobian: f64,
    /// `κ(h, γ)`.
    pub curvature: f64,
    /// `v_r = J_surf v`.
    pub velocity: f64,
    /// `J w_r·n` with `w_r` the transform velocity per unit cell length.
    pub transport_flux: f64,
    /// `H_r n = J σ0 κ F⁻¹ n`.
    pub stress_normal: Vector2<f64>,
}

/// Per-quadrature pullback data at one height.
#[derive(Debug, Clone)]
pub struct TransformedCoefficients {
    pub h: f64,
    pub jacobian: Vec<Matrix2<f64>>,
    pub det: Vec<f64>,
    pub inverse: Vec<Matrix2<f64>>,
    /// `K_r = J F⁻¹ K F⁻ᵀ`.
    pub conductivity: Vec<Matrix2<f64>>,
    /// `c_r = J ρ c`.
    pub heat_capacity: Vec<f64>,
    /// `C_r` as a 4×4 operator on `vec(∇u)`.
    pub stiffness: Vec<Matrix4<f64>>,
    /// `α_r = J α F⁻ᵀ`.
    pub expansion: Vec<Matrix2<f64>>,
    /// `w_r = F⁻¹ ∂ₜs` in cell units (zero unless a velocity was given).
    pub transport: Vec<Vector2<f64>>,
    pub interface: Vec<InterfaceCoefficients>,
}

/// `T` with `vec(G F⁻¹) = T vec(G)` for `vec(G) = (G00, G01, G10, G11)`.
pub fn right_multiplier(finv: &Matrix2<f64>) -> Matrix4<f64> {
    let mut t = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                t[(2 * a + b, 2 * a + c)] = finv[(c, b)];
            }
        }
    }
    t
}

/// Evaluates every transformed coefficient of the cell at height `h`.
/// `velocity` is the cell's normal speed, used for `w_r` and `v_r`.
pub fn pullback_coefficients(
    geom: &CellGeometry,
    params: &PhysicalParams,
    h: f64,
    velocity: Option<f64>,
) -> Result<TransformedCoefficients> {
    geom.check_height(h)?;
    let k = params.conductivity_matrix();
    let d = Tensor4::isotropic(params.lambda, params.mu).gradient_operator();
    let rc = params.volumetric_heat();
    let v = velocity.unwrap_or(0.0);
    let nq = geom.frames.len();
    let mut out = TransformedCoefficients {
        h,
        jacobian: Vec::with_capacity(nq),
        det: Vec::with_capacity(nq),
        inverse: Vec::with_capacity(nq),
        conductivity: Vec::with_capacity(nq),
        heat_capacity: Vec::with_capacity(nq),
        stiffness: Vec::with_capacity(nq),
        expansion: Vec::with_capacity(nq),
        transport: Vec::with_capacity(nq),
        interface: Vec::with_capacity(geom.interface.len()),
    };
    for frame in &geom.frames {
        let f = frame.jacobian(h);
        let j = f.determinant();
        let finv = f.try_inverse().ok_or(Error::Singular)?;
        let kr = finv * k * finv.transpose() * j;
        let t = right_multiplier(&finv);
        out.jacobian.push(f);
        out.det.push(j);
        out.inverse.push(finv);
        out.conductivity.push((kr + kr.transpose()) * 0.5);
        out.heat_capacity.push(rc * j);
        let dr = t.transpose() * d * t * j;
        out.stiffness.push((dr + dr.transpose()) * 0.5);
        out.expansion.push(finv.transpose() * (params.alpha * j));
        out.transport.push(finv * frame.direction() * v);
    }
    for ip in &geom.interface {
        let f = ip.frame.jacobian(h);
        let j = f.determinant();
        let finv = f.try_inverse().ok_or(Error::Singular)?;
        let js = (Matrix2::identity() - ip.shape_tensor * h).determinant();
        let kappa = offset_curvature(&ip.shape_tensor, h);
        out.interface.push(InterfaceCoefficients {
            normal: ip.normal,
            surface_jacobian: js,
            volume_jacobian: j,
            curvature: kappa,
            velocity: js * v,
            transport_flux: j * (finv * ip.frame.direction() * v).dot(&ip.normal),
            stress_normal: finv * ip.normal * (j * params.sigma0 * kappa),
        });
    }
    Ok(out)
}
