use nalgebra::{Matrix2, Vector2, Vector3};
use proptest::prelude::*;
use twoscale::geometry::{CellIndexing, HanzawaTransform, Shape, Shape2};

fn circle() -> Shape2 {
    Shape2::ball(Vector2::new(0.5, 0.5), 0.25).unwrap()
}

fn superellipse() -> Shape2 {
    Shape2::superellipse(Vector2::new(0.5, 0.5), Vector2::new(0.25, 0.25), 4.0).unwrap()
}

fn halton(i: usize, base: usize) -> f64 {
    let (mut f, mut r, mut n) = (1.0, 0.0, i);
    while n > 0 {
        f /= base as f64;
        r += f * (n % base) as f64;
        n /= base;
    }
    r
}

fn halton_points(n: usize) -> Vec<Vector2<f64>> {
    (1..=n).map(|i| Vector2::new(halton(i, 2), halton(i, 3))).collect()
}

fn inf_norm(m: &Matrix2<f64>) -> f64 {
    (0..2).map(|i| m[(i, 0)].abs() + m[(i, 1)].abs()).fold(0.0, f64::max)
}

/// Central differences of the map itself.
fn fd_jacobian(t: &HanzawaTransform<2>, x: &Vector2<f64>, delta: f64) -> Matrix2<f64> {
    let mut f = Matrix2::zeros();
    for j in 0..2 {
        let mut e = Vector2::zeros();
        e[j] = delta;
        let d = (t.map(&(x + e)).unwrap() - t.map(&(x - e)).unwrap()) / (2.0 * delta);
        f.set_column(j, &d);
    }
    f
}

#[test]
fn jacobian_bounds_at_the_band_edge() {
    for shape in [circle(), superellipse()] {
        let (lo, hi) = shape.height_band();
        for h in [lo, hi] {
            let t = HanzawaTransform::new(&shape, h).unwrap();
            for x in halton_points(10_000) {
                if shape.level_set(&x) < 0.0 {
                    continue;
                }
                let (f, j) = t.jacobian(&x).unwrap();
                assert!(inf_norm(&f) <= 2.0, "‖F‖ at {x:?}");
                assert!(inf_norm(&f.try_inverse().unwrap()) <= 2.0, "‖F⁻¹‖ at {x:?}");
                assert!(j >= 0.5, "J = {j} at {x:?}");
            }
        }
    }
}

#[test]
fn analytic_jacobian_matches_finite_differences() {
    for shape in [circle(), superellipse()] {
        let b = shape.height_band().1;
        for h in [-b, 0.0, b] {
            let t = HanzawaTransform::new(&shape, h).unwrap();
            let mut worst: f64 = 0.0;
            for x in halton_points(1000) {
                if shape.level_set(&x) < 1e-4 || x.iter().any(|v| *v < 1e-4 || *v > 1.0 - 1e-4) {
                    continue;
                }
                let (f, _) = t.jacobian(&x).unwrap();
                worst = worst.max((f - fd_jacobian(&t, &x, 1e-5)).amax());
            }
            assert!(worst <= 1e-6, "h = {h}: {worst:e}");
        }
    }
}

#[test]
fn interface_maps_onto_the_offset_curve() {
    for shape in [circle(), superellipse()] {
        let b = shape.height_band().1;
        for h in [-b, b / 2.0, b] {
            let t = HanzawaTransform::new(&shape, h).unwrap();
            for g in shape.boundary_samples(200) {
                let s = t.map(&g).unwrap();
                let p = shape.project(&s).unwrap();
                assert!((p.distance - h).abs() <= 1e-10, "{:e}", p.distance - h);
            }
        }
    }
}

#[test]
fn curvature_consistency() {
    let c = circle();
    for g in c.boundary_samples(64) {
        let l = c.shape_tensor(&g).unwrap();
        assert_eq!(c.curvature(0.0, &g).unwrap(), l.trace());
        for h in [-0.02, 0.0, 0.02] {
            assert!((c.curvature(h, &g).unwrap() + 1.0 / (0.25 + h)).abs() <= 1e-12);
        }
    }
    let s = superellipse();
    for g in s.boundary_samples(64) {
        assert!((s.curvature(0.0, &g).unwrap() - s.shape_tensor(&g).unwrap().trace()).abs() == 0.0);
        assert!((s.shape_tensor(&g).unwrap() * s.normal(&g).unwrap()).norm() <= 1e-10);
    }
}

#[test]
fn sphere_curvature() {
    let s = Shape::<3>::ball(Vector3::new(0.5, 0.5, 0.5), 0.25).unwrap();
    let g = Vector3::new(0.5, 0.75, 0.5);
    assert!((s.curvature(0.05, &g).unwrap() + 2.0 / 0.30).abs() < 1e-12);
    let l = s.shape_tensor(&g).unwrap();
    let mut e: Vec<f64> = l.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    assert!((e[0] + 4.0).abs() < 1e-12 && (e[1] + 4.0).abs() < 1e-12 && e[2].abs() < 1e-12);
}

#[test]
fn distance_and_projection_derivatives() {
    let delta = 1e-6;
    for shape in [circle(), superellipse()] {
        let mut checked = 0;
        for x in halton_points(1000) {
            let p = shape.project(&x).unwrap();
            if !p.in_band || p.distance.abs() > 0.1 || p.distance.abs() < 1e-3 {
                continue;
            }
            checked += 1;
            let n = shape.normal(&p.point).unwrap();
            let m = shape.offset_inverse(&p.point, p.distance).unwrap() * (Matrix2::identity() - n * n.transpose());
            for j in 0..2 {
                let mut e = Vector2::zeros();
                e[j] = delta;
                let (pp, pm) = (shape.project(&(x + e)).unwrap(), shape.project(&(x - e)).unwrap());
                let dd = (pp.distance - pm.distance) / (2.0 * delta);
                assert!((dd - n[j]).abs() <= 1e-6, "Dd at {x:?}");
                let dp = (pp.point - pm.point) / (2.0 * delta);
                assert!((dp - m.column(j)).amax() <= 1e-6, "DP at {x:?}: {:e}", (dp - m.column(j)).amax());
            }
        }
        assert!(checked > 100);
    }
}

#[test]
fn inverse_round_trip() {
    for shape in [circle(), superellipse()] {
        let t = HanzawaTransform::new(&shape, shape.height_band().1).unwrap();
        for x in halton_points(1000) {
            if shape.level_set(&x) < 0.0 {
                continue;
            }
            let back = t.inverse_map(&t.map(&x).unwrap()).unwrap();
            assert!((back - x).norm() <= 1e-10);
        }
    }
}

proptest! {
    #[test]
    fn identity_outside_the_band(x in 0.0f64..1.0, y in 0.0f64..1.0, h in -0.025f64..0.025) {
        let shape = circle();
        let p = Vector2::new(x, y);
        let d = shape.project(&p).unwrap().distance;
        prop_assume!(d > 2.0 * shape.a2() / 3.0 + 1e-12 || d < -2.0 * shape.a1() / 3.0 - 1e-12);
        let t = HanzawaTransform::new(&shape, h).unwrap();
        prop_assert_eq!(t.map(&p).unwrap(), p);
        prop_assert_eq!(t.jacobian(&p).unwrap().0, Matrix2::identity());
    }

    #[test]
    fn decomposition_recomposes(level in 0u32..6, x in 0.0f64..1.0, y in 0.0f64..1.0) {
        let idx = CellIndexing::new(level);
        let p = Vector2::new(x, y);
        let (k, local) = idx.decompose(&p);
        prop_assert!(local.iter().all(|v| (0.0..1.0).contains(v)));
        prop_assert!((idx.compose(&k, &local) - p).norm() <= 1e-14);
    }

    #[test]
    fn out_of_band_heights_are_errors(h in 0.0251f64..1.0) {
        let shape = circle();
        prop_assert!(HanzawaTransform::new(&shape, h).is_err());
        prop_assert!(HanzawaTransform::new(&shape, -h).is_err());
    }
}
