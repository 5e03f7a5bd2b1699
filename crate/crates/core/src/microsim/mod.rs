//! ε-resolved reference simulation of the moving-boundary problem.
//!
//! Ω_ε is tiled by `2ⁿ × 2ⁿ` scaled copies of the cell mesh. In cell `k`
//! the interface moves by `ε h(t,k)` along the reference normal, so the
//! deformation gradient at a point equals the cell transform's at the local
//! coordinate, `w_r = ε v F⁻¹ χ n`, and `v_r = J_Γ v`. The heat problem
//!
//! ```text
//! ∫ ∂ₜ(c_r θ) φ + ∫ (K_r ∇θ + c_r w_r θ)·∇φ + ε L ∫_Γε v_r φ = ∫ g_r φ
//! ```
//!
//! is solved with implicit Euler (convection lagged), and the cell
//! velocities are the interface means `v(t,k) = ⨍_Γε,k θ_r` found by
//! successive substitution over the whole time interval.

mod compare;
mod epsmesh;
mod run;
mod simulate;

pub use compare::{
    compare_micro_macro, load_macro_dir, load_micro_dir, micro_snapshots, CellSnapshot, ComparisonReport,
};
pub use epsmesh::{build_eps_mesh, EpsMesh};
pub use run::{level_dir, run_micro, MicroConfig, MicroRun, CELLS_HEADER};
pub use simulate::{
    cell_average_velocity, cell_heights, cell_mean_temperature, cell_velocities, fixed_point_solve,
    micro_elasticity_post, micro_heat_solve, HeatTrajectory, MicroOptions, MicroState,
};
