//! P1 finite elements on triangle meshes.

pub mod assembly;
pub mod dofs;
pub mod io;
pub mod mesh;
pub mod meshgen;
pub mod mms;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod tensor;

pub use assembly::{
    assemble_elastic, assemble_gradient_operator, assemble_lumped_mass, assemble_scalar, field_at_interface,
    field_at_quadrature, field_gradients, hat_gradients, integrate, interface_points, load_scalar, load_scalar_flux,
    load_scalar_interface, load_vector, load_vector_interface, load_vector_stress, quadrature_points, EdgePoint,
    ScalarFields,
};
pub use dofs::{ConstraintMode, DofMap};
pub use io::{parse_mesh, read_mesh, write_mesh, write_mesh_string};
pub use mesh::{barycentric, BoundaryEdge, EdgeTag, Mesh, MeshReport, Point2, PointLocator};
pub use meshgen::{generate_cell_mesh, generate_macro_mesh};
pub use mms::{mms_error, mms_study, MmsLevel};
pub use solver::{pcg, solve, MeanConstraint, SolveReport, SolverOptions, SparseSystem};
pub use sparse::{CsrMatrix, TripletBuilder};
pub use quadrature::{EDGE2, QP_PER_EDGE, QP_PER_TRIANGLE, TRI3, TRI7};
pub use tensor::Tensor4;

/// Longest edge over all triangles.
pub fn mesh_size_estimate(mesh: &Mesh) -> f64 {
    let mut h: f64 = 0.0;
    for t in 0..mesh.num_triangles() {
        let p = mesh.corners(t);
        for k in 0..3 {
            h = h.max((p[(k + 1) % 3] - p[k]).norm());
        }
    }
    h
}
