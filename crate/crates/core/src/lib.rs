//! Two-scale simulation of thermo-elasticity in perforated media whose
//! inclusions grow or shrink with the local interface temperature.
//!
//! The crate is organized bottom-up:
//!
//! - [`geometry`]: signed distance, projection, Weingarten map and the
//!   height-parametrized (Hanzawa) transform of the periodicity cell;
//! - [`fem`]: meshes of the perforated cell and the macroscopic square, P1
//!   assembly with periodic folding and a preconditioned CG solver;
//! - [`cellhomog`]: pulled-back coefficients and the periodic cell problems
//!   producing the effective coefficients at one height;
//! - [`tables`]: precomputed coefficient tables over a height grid;
//! - [`macrosolver`]: the homogenized heat/height/elasticity system;
//! - [`microsim`]: the ε-resolved reference simulation and the micro–macro
//!   comparison.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cellhomog;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod macrosolver;
pub mod microsim;
pub mod output;
pub mod params;
pub mod tables;

pub use error::{Error, Result};
