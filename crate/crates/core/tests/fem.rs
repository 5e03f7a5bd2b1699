use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2};
use proptest::prelude::*;
use twoscale::fem::*;
use twoscale::geometry::Shape2;

fn circle_mesh(h: f64) -> Mesh {
    generate_cell_mesh(Some(&Shape2::ball(Vector2::new(0.5, 0.5), 0.25).unwrap()), h).unwrap()
}

#[test]
fn manufactured_solution_converges_at_second_order() {
    let study = mms_study(&[8, 16, 32, 64]).unwrap();
    for level in &study[1..] {
        assert!(level.order.unwrap() >= 1.9, "{study:?}");
    }
}

fn rigid_modes(mesh: &Mesh) -> [Vec<f64>; 3] {
    let n = mesh.num_nodes();
    let mut modes = [vec![0.0; 2 * n], vec![0.0; 2 * n], vec![0.0; 2 * n]];
    for (i, p) in mesh.nodes.iter().enumerate() {
        modes[0][2 * i] = 1.0;
        modes[1][2 * i + 1] = 1.0;
        modes[2][2 * i] = -p[1];
        modes[2][2 * i + 1] = p[0];
    }
    modes
}

#[test]
fn elastic_kernel_is_rigid_motions() {
    let mesh = circle_mesh(0.1);
    let dofs = DofMap::free(&mesh, 2);
    let c = vec![Tensor4::isotropic(1.0, 1.0); mesh.num_triangles() * QP_PER_TRIANGLE];
    let k = assemble_elastic(&mesh, &dofs, &c).unwrap();
    for m in rigid_modes(&mesh) {
        assert!(k.apply(&m).iter().fold(0.0f64, |a, v| a.max(v.abs())) <= 1e-10);
    }
    let dense = DMatrix::from_fn(k.dim(), k.dim(), |i, j| k.get(i, j));
    let eig = dense.symmetric_eigen().eigenvalues;
    let zero = eig.iter().filter(|v| v.abs() < 1e-9).count();
    assert_eq!(zero, 3);
}

#[test]
fn single_triangle_elastic_matrix_matches_b_matrix_form() {
    let mesh = Mesh {
        nodes: vec![Vector2::new(0.1, 0.0), Vector2::new(1.0, 0.2), Vector2::new(0.3, 0.9)],
        triangles: vec![[0, 1, 2]],
        regions: vec![0],
        ..Default::default()
    };
    let (lambda, mu) = (1.0, 1.0);
    let dofs = DofMap::free(&mesh, 2);
    let k = assemble_elastic(&mesh, &dofs, &vec![Tensor4::isotropic(lambda, mu); 3]).unwrap();

    // Engineering-strain B matrix (rows εxx, εyy, γxy) and plane-strain D.
    let p = mesh.corners(0);
    let area = 0.5 * ((p[1] - p[0]).perp(&(p[2] - p[0])));
    let b_coef = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
    let c_coef = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
    let mut b = DMatrix::zeros(3, 6);
    for i in 0..3 {
        let (dx, dy) = (b_coef[i] / (2.0 * area), c_coef[i] / (2.0 * area));
        b[(0, 2 * i)] = dx;
        b[(1, 2 * i + 1)] = dy;
        b[(2, 2 * i)] = dy;
        b[(2, 2 * i + 1)] = dx;
    }
    let d = DMatrix::from_row_slice(3, 3, &[lambda + 2.0 * mu, lambda, 0.0, lambda, lambda + 2.0 * mu, 0.0, 0.0, 0.0, mu]);
    let expected = b.transpose() * d * b * area;
    for i in 0..6 {
        for j in 0..6 {
            assert!((k.get(i, j) - expected[(i, j)]).abs() <= 1e-13, "({i},{j})");
        }
    }
    let zero = assemble_elastic(&mesh, &dofs, &vec![Tensor4::zero(); 3]).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn periodic_fold_keeps_symmetry_and_constants() {
    let mesh = circle_mesh(0.1);
    let dofs = DofMap::periodic(&mesh, 1, false);
    let nq = mesh.num_triangles() * QP_PER_TRIANGLE;
    let coeff = vec![Matrix2::new(2.0, 0.3, 0.3, 1.0); nq];
    let a = assemble_scalar(&mesh, &dofs, ScalarFields { coeff: Some(&coeff), ..Default::default() }).unwrap();
    assert!(a.asymmetry() <= 1e-14);
    let ones = vec![1.0; a.dim()];
    assert!(a.apply(&ones).iter().all(|v| v.abs() <= 1e-12));
    assert!(a.dim() < mesh.num_nodes());
}

#[test]
fn cell_mesh_is_valid_and_fits_the_interface() {
    for h in [0.1, 0.05] {
        let mesh = circle_mesh(h);
        let shape = Shape2::ball(Vector2::new(0.5, 0.5), 0.25).unwrap();
        let r = mesh.check(Some(&shape));
        assert!(r.is_valid(), "{r:?}");
        assert!(r.chord_error <= h * h);
        assert!(r.interface_residual <= h * h);
        assert!((r.area - (1.0 - PI / 16.0)).abs() <= 1e-3);
    }
}

#[test]
fn solver_contract_examples() {
    let (x, rep) = solve(
        &SparseSystem::new(CsrMatrix::identity(4), vec![1.0, 0.0, 0.0, 0.0], ConstraintMode::None),
        &SolverOptions::default().iterative_only(),
    )
    .unwrap();
    assert_eq!(x, vec![1.0, 0.0, 0.0, 0.0]);
    assert!(!rep.dense);
}

fn triangle_strategy() -> impl Strategy<Value = [Vector2<f64>; 3]> {
    (prop::array::uniform6(-1.0f64..1.0)).prop_filter_map("degenerate", |v| {
        let p = [Vector2::new(v[0], v[1]), Vector2::new(v[2], v[3]), Vector2::new(v[4], v[5])];
        let a = 0.5 * (p[1] - p[0]).perp(&(p[2] - p[0]));
        if a.abs() < 1e-2 {
            return None;
        }
        Some(if a > 0.0 { p } else { [p[0], p[2], p[1]] })
    })
}

proptest! {
    #[test]
    fn stiffness_rows_annihilate_constants(p in triangle_strategy(), a in 0.1f64..3.0, b in -0.5f64..0.5, c in 0.1f64..3.0) {
        prop_assume!(a * c > b * b);
        let mesh = Mesh { nodes: p.to_vec(), triangles: vec![[0, 1, 2]], regions: vec![0], ..Default::default() };
        let dofs = DofMap::free(&mesh, 1);
        let coeff = vec![Matrix2::new(a, b, b, c); 3];
        let k = assemble_scalar(&mesh, &dofs, ScalarFields { coeff: Some(&coeff), ..Default::default() }).unwrap();
        prop_assert!(k.asymmetry() <= 1e-14);
        for v in k.apply(&[1.0; 3]) {
            prop_assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn mass_matrix_integrates_to_the_area(p in triangle_strategy(), m in 0.1f64..5.0) {
        let mesh = Mesh { nodes: p.to_vec(), triangles: vec![[0, 1, 2]], regions: vec![0], ..Default::default() };
        let dofs = DofMap::free(&mesh, 1);
        let mass = vec![m; 3];
        let k = assemble_scalar(&mesh, &dofs, ScalarFields { mass: Some(&mass), ..Default::default() }).unwrap();
        let total: f64 = k.apply(&[1.0; 3]).iter().sum();
        prop_assert!((total - m * mesh.total_area()).abs() <= 1e-12);
    }
}
