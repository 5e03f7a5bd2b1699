use nalgebra::Vector2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twoscale::cellhomog::{effective_coeffs, CellGeometry};
use twoscale::error::Error;
use twoscale::geometry::{symmetric_eigenvalues, Shape2};
use twoscale::params::{Conductivity, PhysicalParams, Poly2};
use twoscale::tables::*;

fn geom() -> CellGeometry {
    CellGeometry::generate(Some(Shape2::ball(Vector2::new(0.5, 0.5), 0.25).unwrap()), 0.05).unwrap()
}

fn table(interp: Interpolation) -> CoefficientTable {
    build_table(&geom(), &PhysicalParams::default(), &uniform_grid(-0.025, 0.025, 11), interp).unwrap()
}

#[test]
fn nodes_equal_direct_solves() {
    let g = geom();
    let p = PhysicalParams::default();
    let t = build_table(&g, &p, &[-0.02, 0.0, 0.02], Interpolation::MonotoneCubic).unwrap();
    assert_eq!(t.nodes.len(), 3);
    assert_eq!(t.nodes[1], effective_coeffs(&g, &p, 0.0).unwrap());
    assert!(t.nodes.windows(2).all(|w| w[1].phi < w[0].phi));
    for (h, n) in t.grid.iter().zip(&t.nodes) {
        assert_eq!(&t.interpolate(*h).unwrap(), n);
    }
}

#[test]
fn linear_mode_midpoint() {
    let t = build_table(&geom(), &PhysicalParams::default(), &[0.0, 0.02], Interpolation::Linear).unwrap();
    let mid = t.interpolate(0.01).unwrap().components();
    let (a, b) = (t.nodes[0].components(), t.nodes[1].components());
    for i in 0..13 {
        assert!((mid[i] - 0.5 * (a[i] + b[i])).abs() <= 1e-15 * (1.0 + a[i].abs()));
    }
}

#[test]
fn no_extrapolation() {
    let t = table(Interpolation::MonotoneCubic);
    for h in [-0.0251, 0.0251, f64::NAN] {
        assert!(matches!(t.interpolate(h), Err(Error::Admissibility { .. })));
    }
}

#[test]
fn fingerprint_guards_reuse() {
    let t = build_table(&geom(), &PhysicalParams::default(), &[0.0, 0.01], Interpolation::Linear).unwrap();
    let shape = t.shape.clone();
    t.check_compatible(shape.as_ref(), &PhysicalParams::default()).unwrap();
    let mut p = PhysicalParams::default();
    p.theta0 = Poly2::constant(0.3);
    p.latent_heat = 2.0;
    t.check_compatible(shape.as_ref(), &p).unwrap();
    p.conductivity = Conductivity::Scalar(2.0);
    assert!(matches!(t.check_compatible(shape.as_ref(), &p), Err(Error::TableMismatch(_))));
}

#[test]
fn json_round_trip_and_rejections() {
    let t = table(Interpolation::MonotoneCubic);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    t.save(&path).unwrap();
    let back = CoefficientTable::load(&path).unwrap();
    assert_eq!(back, t);
    for (a, b) in back.nodes.iter().zip(&t.nodes) {
        for (x, y) in a.components().iter().zip(b.components()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    let mut v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
    v["nodes"][3]["Kstar"][0][0] = serde_json::json!(-1.0);
    assert!(CoefficientTable::from_json(&v.to_string()).is_err());

    let mut v: serde_json::Value = serde_json::from_str(&t.to_json().unwrap()).unwrap();
    v["format_version"] = serde_json::json!(99);
    assert!(matches!(CoefficientTable::from_json(&v.to_string()), Err(Error::Version { .. })));
}

#[test]
fn interpolants_are_consistent_and_spd() {
    let t = table(Interpolation::MonotoneCubic);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let h = rng.gen_range(-0.025..0.025);
        let (c, d) = t.interpolate_with_derivative(h).unwrap();
        assert!(c.phi > 0.0 && c.phi_gamma > 0.0);
        assert!((d[0] + c.phi_gamma).abs() <= 0.02 * c.phi_gamma, "h = {h}");
    }
    for _ in 0..1000 {
        let c = t.interpolate(rng.gen_range(-0.025..0.025)).unwrap();
        let e = symmetric_eigenvalues(&c.k_matrix());
        assert!(e.iter().all(|v| *v > 0.0));
    }
}

#[test]
fn homogeneous_table_is_constant() {
    let p = PhysicalParams::default();
    let t = homogeneous_table(&p, &uniform_grid(-0.1, 0.1, 5)).unwrap();
    let c = t.interpolate(0.033).unwrap();
    assert_eq!(c.phi, 1.0);
    assert_eq!(c.k_star, [[1.0, 0.0], [0.0, 1.0]]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn interpolation_stays_between_neighbouring_nodes(h in -0.025f64..0.025) {
        let t = homogeneous_table(&PhysicalParams::default(), &uniform_grid(-0.025, 0.025, 5)).unwrap();
        let c = t.interpolate(h).unwrap();
        prop_assert_eq!(c.phi, 1.0);
        prop_assert_eq!(c.h, h);
    }
}
