//! Periodic cell problems solved on the fixed reference mesh with
//! coefficients pulled back through the height transform.
//!
//! For a height `h` the cell problems live on `Y*(h) = s(Y*)`. Writing
//! `y = s(x)`, `F = Ds`, `J = det F`, the thermal problem becomes: find a
//! periodic zero-mean `η_j` with
//!
//! ```text
//! ∫ J F⁻¹KF⁻ᵀ ∇η_j·∇ψ dx = -∫ J F⁻¹K e_j·∇ψ dx      for all periodic ψ,
//! ```
//!
//! and the elastic one: find `μ_P` with
//!
//! ```text
//! ∫ J C sym(∇μ_P F⁻¹) : ∇ψ F⁻¹ dx = -∫ J (C E_P) F⁻ᵀ : ∇ψ dx.
//! ```
//!
//! The loadings `e_j` and `E_P = e(d_P)` are constant on `Y*(h)`, so composing
//! them with `s` before the pullback makes the reference problem exactly
//! equivalent to the deformed one. The effective coefficients are then
//!
//! ```text
//! K*_ij = ∫ J (K F⁻ᵀ∇η_j + K e_j)·e_i dx
//! C*_PQ = ∫ J C e(χ_P) : e(χ_Q) dx,   ∇χ_P = ∇μ_P F⁻¹ + E_P
//! φ     = ∫ J dx,   φ_Γ = |Γ(h)|,   H* = σ0 ∫_{Γ(h)} κ n dσ
//! ```
//!
//! `C*` is stored in Voigt form with rows/columns (11, 22, 12) and the
//! engineering shear convention `ε_V = (ε11, ε22, 2ε12)`.

mod cell;
mod pullback;

pub use cell::{
    effective_coeffs, effective_coeffs_report, solve_elastic_cell, solve_elastic_with, solve_thermal_cell,
    solve_thermal_with, unit_strains, CellResiduals, CellResult, EffectiveCoefficients, ElasticCellSolution,
    ThermalCellSolution,
};
pub use pullback::{
    pullback_coefficients, right_multiplier, CellGeometry, InterfaceCoefficients, InterfacePoint,
    TransformedCoefficients, NO_HOLE_BAND,
};
