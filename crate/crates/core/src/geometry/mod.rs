//! Differential geometry of the inclusion interface and the height transform.
//!
//! Sign conventions: the signed distance `d` is positive in the pore space
//! `Y*`, the normal `n` points from the inclusion into `Y*`, and the
//! Weingarten map is taken as `L_Γ = -D²d` on Γ. With these choices a circle
//! of radius `r` has `L_Γ` eigenvalue `-1/r`, `D²d = -L(Id - dL)⁻¹` holds
//! verbatim, and `κ(h) = tr[(Id - hL)⁻¹L] = -1/(r + h)`. The conventional mean
//! curvature is half of `tr L_Γ`; only the factorless trace is used here.

mod cutoff;
mod hanzawa;
mod indexing;
mod shape;

pub use cutoff::{Cutoff, CutoffValue};
pub use hanzawa::{band_frame, BandFrame, HanzawaTransform};
pub use indexing::CellIndexing;
pub use shape::{
    offset_curvature, spectral_radius, symmetric_eigenvalues, Point, Projection, Shape, ShapeDescriptor,
    ShapeKind, Tensor, SURFACE_TOL,
};

/// Two-dimensional shapes are what the finite-element solvers consume.
pub type Shape2 = Shape<2>;
