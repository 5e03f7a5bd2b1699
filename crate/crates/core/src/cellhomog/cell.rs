//! Periodic cell problems and the effective coefficients.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use super::pullback::{pullback_coefficients, CellGeometry, TransformedCoefficients};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_gradient_operator, assemble_scalar, hat_gradients, load_scalar, load_scalar_flux, load_vector_stress,
    solve, DofMap, MeanConstraint, Mesh, ScalarFields, SolveReport, SolverOptions, SparseSystem, Tensor4,
};
use crate::fem::quadrature::TRI3;
use crate::geometry::symmetric_eigenvalues;
use crate::params::PhysicalParams;

/// Effective coefficients at one height. `C*` is stored in Voigt form
/// (11, 22, 12) with engineering shear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCoefficients {
    pub h: f64,
    pub phi: f64,
    pub phi_gamma: f64,
    #[serde(rename = "Kstar")]
    pub k_star: [[f64; 2]; 2],
    #[serde(rename = "Cstar_voigt")]
    pub c_star_voigt: [[f64; 3]; 3],
    #[serde(rename = "Hstar")]
    pub h_star: [f64; 2],
}

impl EffectiveCoefficients {
    /// Coefficients of the full cell: `K* = K`, `C* = C`.
    pub fn homogeneous(params: &PhysicalParams, h: f64) -> Self {
        let k = params.conductivity_matrix();
        let c = Tensor4::isotropic(params.lambda, params.mu).voigt();
        Self {
            h,
            phi: 1.0,
            phi_gamma: 0.0,
            k_star: mat2_to_array(&k),
            c_star_voigt: mat3_to_array(&c),
            h_star: [0.0, 0.0],
        }
    }

    pub fn k_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.k_star[0][0], self.k_star[0][1], self.k_star[1][0], self.k_star[1][1])
    }

    pub fn c_voigt(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.c_star_voigt[i][j])
    }

    pub fn c_tensor(&self) -> Tensor4 {
        Tensor4::from_voigt(&self.c_voigt())
    }

    pub fn h_vector(&self) -> Vector2<f64> {
        Vector2::new(self.h_star[0], self.h_star[1])
    }

    /// All scalar components in a fixed order:
    /// `φ, φ_Γ, K11, K12, K22, C11, C12, C13, C22, C23, C33, H1, H2`.
    pub fn components(&self) -> [f64; 13] {
        let k = self.k_star;
        let c = self.c_star_voigt;
        [
            self.phi,
            self.phi_gamma,
            k[0][0],
            k[0][1],
            k[1][1],
            c[0][0],
            c[0][1],
            c[0][2],
            c[1][1],
            c[1][2],
            c[2][2],
            self.h_star[0],
            self.h_star[1],
        ]
    }

    /// Inverse of [`EffectiveCoefficients::components`].
    pub fn from_components(h: f64, v: &[f64; 13]) -> Self {
        Self {
            h,
            phi: v[0],
            phi_gamma: v[1],
            k_star: [[v[2], v[3]], [v[3], v[4]]],
            c_star_voigt: [[v[5], v[6], v[7]], [v[6], v[8], v[9]], [v[7], v[9], v[10]]],
            h_star: [v[11], v[12]],
        }
    }

    /// Structural invariants: `0 < φ ≤ 1`, `φ_Γ ≥ 0`, `K*` symmetric positive
    /// definite, `C*` symmetric and positive on symmetric matrices.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::TableInvariant(format!("h = {}: {m}", self.h)));
        if self.components().iter().any(|v| !v.is_finite()) {
            return bad("non-finite coefficient".into());
        }
        if !(self.phi > 0.0 && self.phi <= 1.0) {
            return bad(format!("porosity {} outside (0, 1]", self.phi));
        }
        if self.phi_gamma < 0.0 {
            return bad(format!("negative interface measure {}", self.phi_gamma));
        }
        let k = self.k_matrix();
        if (k[(0, 1)] - k[(1, 0)]).abs() > 1e-12 * k.norm() {
            return bad("K* not symmetric".into());
        }
        let ke = symmetric_eigenvalues(&k);
        if ke.iter().any(|&e| e <= 0.0) {
            return bad(format!("K* not positive definite (eigenvalues {ke:?})"));
        }
        let c = self.c_voigt();
        if (c - c.transpose()).norm() > 1e-10 * c.norm() {
            return bad("C* lacks major symmetry".into());
        }
        let ce = c.symmetric_eigen().eigenvalues;
        if ce.iter().any(|&e| e <= 0.0) {
            return bad(format!("C* not positive on symmetric matrices (eigenvalues {:?})", ce.as_slice()));
        }
        Ok(())
    }
}

fn mat2_to_array(m: &Matrix2<f64>) -> [[f64; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn mat3_to_array(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]))
}

/// Solutions `η_1, η_2` as nodal fields.
#[derive(Debug, Clone)]
pub struct ThermalCellSolution {
    pub eta: [Vec<f64>; 2],
    pub reports: [SolveReport; 2],
}

/// Solutions `μ_11, μ_22, μ_12 (= μ_21)` as nodal fields with interleaved
/// components.
#[derive(Debug, Clone)]
pub struct ElasticCellSolution {
    pub mu: [Vec<f64>; 3],
    pub reports: [SolveReport; 3],
}

/// Symmetric unit loadings `e(d_jk)` in Voigt order.
pub fn unit_strains() -> [Matrix2<f64>; 3] {
    [Matrix2::new(1.0, 0.0, 0.0, 0.0), Matrix2::new(0.0, 0.0, 0.0, 1.0), Matrix2::new(0.0, 0.5, 0.5, 0.0)]
}

fn mean_weights(mesh: &Mesh, dofs: &DofMap) -> Result<Vec<f64>> {
    let scalar = DofMap::periodic(mesh, 1, true);
    let ones = vec![1.0; mesh.num_triangles() * TRI3.weights.len()];
    let w = load_scalar(mesh, &scalar, &ones)?;
    let c = dofs.components();
    let mut out = vec![0.0; dofs.num_dofs()];
    for (i, wi) in w.iter().enumerate() {
        for k in 0..c {
            out[i * c + k] = *wi;
        }
    }
    Ok(out)
}

fn zero_mean_constraints(mesh: &Mesh, dofs: &DofMap) -> Result<Vec<MeanConstraint>> {
    let w = mean_weights(mesh, dofs)?;
    Ok((0..dofs.components())
        .map(|c| {
            let kernel = dofs.component_indicator(c);
            let weights = w.iter().zip(&kernel).map(|(a, b)| a * b).collect();
            MeanConstraint { weights, kernel }
        })
        .collect())
}

pub fn solve_thermal_with(
    geom: &CellGeometry,
    params: &PhysicalParams,
    coeffs: &TransformedCoefficients,
    opts: &SolverOptions,
) -> Result<ThermalCellSolution> {
    let mesh = geom.mesh();
    let dofs = DofMap::periodic(mesh, 1, true);
    let matrix = assemble_scalar(mesh, &dofs, ScalarFields { coeff: Some(&coeffs.conductivity), ..Default::default() })?;
    let constraints = zero_mean_constraints(mesh, &dofs)?;
    let k = params.conductivity_matrix();
    let mut eta: [Vec<f64>; 2] = Default::default();
    let mut reports = [SolveReport { iterations: 0, residual: 0.0, dense: false }; 2];
    for j in 0..2 {
        let e = Vector2::ith(j, 1.0);
        let flux: Vec<Vector2<f64>> =
            coeffs.inverse.iter().zip(&coeffs.det).map(|(finv, det)| -(finv * k * e) * *det).collect();
        let rhs = load_scalar_flux(mesh, &dofs, &flux)?;
        let sys = SparseSystem::new(matrix.clone(), rhs, dofs.mode()).with_zero_mean(constraints.clone());
        let (x, rep) = solve(&sys, opts)?;
        eta[j] = dofs.expand(&x);
        reports[j] = rep;
    }
    Ok(ThermalCellSolution { eta, reports })
}

pub fn solve_elastic_with(
    geom: &CellGeometry,
    params: &PhysicalParams,
    coeffs: &TransformedCoefficients,
    opts: &SolverOptions,
) -> Result<ElasticCellSolution> {
    let mesh = geom.mesh();
    let dofs = DofMap::periodic(mesh, 2, true);
    let matrix = assemble_gradient_operator(mesh, &dofs, &coeffs.stiffness)?;
    let constraints = zero_mean_constraints(mesh, &dofs)?;
    let c = Tensor4::isotropic(params.lambda, params.mu);
    let mut mu: [Vec<f64>; 3] = Default::default();
    let mut reports = [SolveReport { iterations: 0, residual: 0.0, dense: false }; 3];
    for (p, e) in unit_strains().iter().enumerate() {
        let ce = c.contract(e);
        let stress: Vec<Matrix2<f64>> =
            coeffs.inverse.iter().zip(&coeffs.det).map(|(finv, det)| -(ce * finv.transpose()) * *det).collect();
        let rhs = load_vector_stress(mesh, &dofs, &stress)?;
        let sys = SparseSystem::new(matrix.clone(), rhs, dofs.mode()).with_zero_mean(constraints.clone());
        let (x, rep) = solve(&sys, opts)?;
        mu[p] = dofs.expand(&x);
        reports[p] = rep;
    }
    Ok(ElasticCellSolution { mu, reports })
}

pub fn solve_thermal_cell(geom: &CellGeometry, params: &PhysicalParams, h: f64) -> Result<ThermalCellSolution> {
    let coeffs = pullback_coefficients(geom, params, h, None)?;
    solve_thermal_with(geom, params, &coeffs, &SolverOptions::default())
}

pub fn solve_elastic_cell(geom: &CellGeometry, params: &PhysicalParams, h: f64) -> Result<ElasticCellSolution> {
    let coeffs = pullback_coefficients(geom, params, h, None)?;
    solve_elastic_with(geom, params, &coeffs, &SolverOptions::default())
}

/// `K*_ij = ∫ J (K F⁻ᵀ∇η_j + K e_j)·e_i`, symmetrized.
fn effective_conductivity(
    mesh: &Mesh,
    params: &PhysicalParams,
    coeffs: &TransformedCoefficients,
    sol: &ThermalCellSolution,
) -> Matrix2<f64> {
    let k = params.conductivity_matrix();
    let mut ks = Matrix2::zeros();
    for t in 0..mesh.num_triangles() {
        let (g, area) = hat_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let grads: [Vector2<f64>; 2] =
            std::array::from_fn(|j| (0..3).map(|a| g[a] * sol.eta[j][tri[a]]).sum::<Vector2<f64>>());
        for (q, w) in TRI3.weights.iter().enumerate() {
            let i = 3 * t + q;
            let finv = coeffs.inverse[i];
            for j in 0..2 {
                let flux = k * (finv.transpose() * grads[j] + Vector2::ith(j, 1.0)) * (coeffs.det[i] * w * area);
                ks[(0, j)] += flux[0];
                ks[(1, j)] += flux[1];
            }
        }
    }
    (ks + ks.transpose()) * 0.5
}

/// `C*_PQ = ∫ J C e(χ_P):e(χ_Q)` with `∇χ_P = ∇μ_P F⁻¹ + E_P` in Voigt order.
fn effective_stiffness(
    mesh: &Mesh,
    params: &PhysicalParams,
    coeffs: &TransformedCoefficients,
    sol: &ElasticCellSolution,
) -> Matrix3<f64> {
    let c = Tensor4::isotropic(params.lambda, params.mu);
    let strains = unit_strains();
    let mut cs = Matrix3::zeros();
    for t in 0..mesh.num_triangles() {
        let (g, area) = hat_gradients(mesh, t);
        let tri = mesh.triangles[t];
        let grads: [Matrix2<f64>; 3] = std::array::from_fn(|p| {
            let mut gm = Matrix2::zeros();
            for a in 0..3 {
                for comp in 0..2 {
                    let u = sol.mu[p][2 * tri[a] + comp];
                    gm[(comp, 0)] += u * g[a][0];
                    gm[(comp, 1)] += u * g[a][1];
                }
            }
            gm
        });
        for (q, w) in TRI3.weights.iter().enumerate() {
            let i = 3 * t + q;
            let finv = coeffs.inverse[i];
            let eps: [Matrix2<f64>; 3] = std::array::from_fn(|p| {
                let gm = grads[p] * finv + strains[p];
                (gm + gm.transpose()) * 0.5
            });
            let wq = coeffs.det[i] * w * area;
            for p in 0..3 {
                let sp = c.contract(&eps[p]);
                for r in 0..3 {
                    cs[(p, r)] += wq * sp.component_mul(&eps[r]).sum();
                }
            }
        }
    }
    (cs + cs.transpose()) * 0.5
}

/// Effective coefficients together with solver diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    #[serde(flatten)]
    pub coeffs: EffectiveCoefficients,
    pub mesh_h: f64,
    pub residuals: CellResiduals,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResiduals {
    pub thermal: [f64; 2],
    pub elastic: [f64; 3],
    pub iterations: usize,
}

pub fn effective_coeffs_report(
    geom: &CellGeometry,
    params: &PhysicalParams,
    h: f64,
    opts: &SolverOptions,
) -> Result<CellResult> {
    let coeffs = pullback_coefficients(geom, params, h, None)?;
    let mesh = geom.mesh();
    let thermal = solve_thermal_with(geom, params, &coeffs, opts)?;
    let elastic = solve_elastic_with(geom, params, &coeffs, opts)?;
    let k = effective_conductivity(mesh, params, &coeffs, &thermal);
    let c = effective_stiffness(mesh, params, &coeffs, &elastic);
    let phi: f64 = (0..mesh.num_triangles())
        .map(|t| {
            let area = mesh.area(t);
            TRI3.weights.iter().enumerate().map(|(q, w)| w * area * coeffs.det[3 * t + q]).sum::<f64>()
        })
        .sum();
    let hs = geom.curvature_normal_integral(h) * params.sigma0;
    let coeffs = EffectiveCoefficients {
        h,
        phi,
        phi_gamma: geom.interface_measure_at(h),
        k_star: mat2_to_array(&k),
        c_star_voigt: mat3_to_array(&c),
        h_star: [hs[0], hs[1]],
    };
    let iterations = thermal.reports.iter().chain(&elastic.reports).map(|r| r.iterations).sum();
    Ok(CellResult {
        coeffs,
        mesh_h: mesh.mesh_size,
        residuals: CellResiduals {
            thermal: [thermal.reports[0].residual, thermal.reports[1].residual],
            elastic: std::array::from_fn(|p| elastic.reports[p].residual),
            iterations,
        },
    })
}

pub fn effective_coeffs(geom: &CellGeometry, params: &PhysicalParams, h: f64) -> Result<EffectiveCoefficients> {
    effective_coeffs_report(geom, params, h, &SolverOptions::default()).map(|r| r.coeffs)
}
