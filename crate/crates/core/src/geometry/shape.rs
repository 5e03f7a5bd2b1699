//! Analytic inclusion shapes: signed distance, closest-point projection,
//! unit normal and the Weingarten map, in two or three dimensions.

use nalgebra::{Const, DMatrix, DVector, DimMin, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point<const D: usize> = SVector<f64, D>;
pub type Tensor<const D: usize> = SMatrix<f64, D, D>;

/// Level-set residual accepted as "on the interface".
pub const SURFACE_TOL: f64 = 1e-10;

const NEWTON_MAX_ITER: usize = 60;
const SAMPLES_2D: usize = 2048;
const SAMPLES_3D: usize = 4096;
/// Safety factor applied to numerically estimated tubular radii.
const RADIUS_SAFETY: f64 = 0.9;

/// Serializable shape description, independent of dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ShapeDescriptor {
    /// Circle in 2D, sphere in 3D.
    Circle { center: Vec<f64>, radius: f64 },
    Superellipse {
        center: Vec<f64>,
        semi_axes: Vec<f64>,
        exponent: f64,
    },
}

impl ShapeDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            ShapeDescriptor::Circle { center, .. } => center.len(),
            ShapeDescriptor::Superellipse { center, .. } => center.len(),
        }
    }

    /// Parses the short CLI form: `circle:R`, `circle:R@X,Y`,
    /// `superellipse:A,B,P` (centered in the cell).
    pub fn parse_short(text: &str) -> Result<Self> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("shape '{text}': expected kind:args")))?;
        let nums = |s: &str| -> Result<Vec<f64>> {
            s.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("shape '{text}': {e}"))))
                .collect()
        };
        match kind {
            "circle" | "sphere" => {
                let (r, c) = match rest.split_once('@') {
                    Some((r, c)) => (r, Some(nums(c)?)),
                    None => (rest, None),
                };
                let radius = nums(r)?;
                if radius.len() != 1 {
                    return Err(Error::Parse(format!("shape '{text}': one radius expected")));
                }
                let dim = if kind == "sphere" { 3 } else { 2 };
                Ok(ShapeDescriptor::Circle {
                    center: c.unwrap_or_else(|| vec![0.5; dim]),
                    radius: radius[0],
                })
            }
            "superellipse" => {
                let v = nums(rest)?;
                if v.len() < 3 {
                    return Err(Error::Parse(format!("shape '{text}': expected A,B[,C],P")));
                }
                let (axes, p) = v.split_at(v.len() - 1);
                Ok(ShapeDescriptor::Superellipse {
                    center: vec![0.5; axes.len()],
                    semi_axes: axes.to_vec(),
                    exponent: p[0],
                })
            }
            other => Err(Error::Parse(format!("unknown shape kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ShapeKind<const D: usize> {
    Ball { center: Point<D>, radius: f64 },
    Superellipse { center: Point<D>, semi_axes: Point<D>, exponent: f64 },
}

/// A C³ inclusion `Z` strictly inside the unit cell, with interior (`a1`) and
/// exterior (`a2`) tubular radii.
#[derive(Debug, Clone)]
pub struct Shape<const D: usize> {
    kind: ShapeKind<D>,
    a1: f64,
    a2: f64,
    /// Dense boundary sampling used to seed projections (superellipse only).
    samples: Vec<Point<D>>,
}

/// Result of the closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<const D: usize> {
    /// Closest point on Γ (or best available estimate when out of band).
    pub point: Point<D>,
    /// Signed distance, positive in `Y*`.
    pub distance: f64,
    /// Whether the query lies in the open band `-a1 < d < a2`.
    pub in_band: bool,
}

impl<const D: usize> Shape<D>
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    /// Ball of radius `radius`; `a1 = radius`, `a2` = gap to the cell boundary.
    pub fn ball(center: Point<D>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidShape(format!("radius must be positive, got {radius}")));
        }
        let gap = center.iter().map(|&c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min) - radius;
        if !(gap > 0.0) {
            return Err(Error::InvalidShape("ball does not fit strictly inside the unit cell".into()));
        }
        let shape = Shape {
            kind: ShapeKind::Ball { center, radius },
            a1: radius,
            a2: gap,
            samples: Vec::new(),
        };
        shape.check_spectral_radius()?;
        Ok(shape)
    }

    /// Superellipse `Σ |(y_i - c_i)/a_i|^p = 1` with `p ≥ 4`.
    pub fn superellipse(center: Point<D>, semi_axes: Point<D>, exponent: f64) -> Result<Self> {
        if !(exponent >= 4.0) {
            return Err(Error::InvalidShape(format!("exponent must be >= 4, got {exponent}")));
        }
        if semi_axes.iter().any(|&a| !(a > 0.0)) {
            return Err(Error::InvalidShape("semi-axes must be positive".into()));
        }
        for i in 0..D {
            if center[i] - semi_axes[i] <= 0.0 || center[i] + semi_axes[i] >= 1.0 {
                return Err(Error::InvalidShape("superellipse does not fit strictly inside the unit cell".into()));
            }
        }
        let mut shape = Shape {
            kind: ShapeKind::Superellipse { center, semi_axes, exponent },
            a1: 0.0,
            a2: 0.0,
            samples: Vec::new(),
        };
        shape.samples = shape.sample_boundary();
        let (a1, a2) = shape.estimate_tubular_radii();
        shape.a1 = RADIUS_SAFETY * a1;
        shape.a2 = RADIUS_SAFETY * a2;
        shape.check_spectral_radius()?;
        Ok(shape)
    }

    pub fn from_descriptor(desc: &ShapeDescriptor) -> Result<Self> {
        if desc.dim() != D {
            return Err(Error::InvalidShape(format!("expected a {D}-dimensional shape, got {}", desc.dim())));
        }
        match desc {
            ShapeDescriptor::Circle { center, radius } => Self::ball(Point::<D>::from_column_slice(center), *radius),
            ShapeDescriptor::Superellipse { center, semi_axes, exponent } => {
                if semi_axes.len() != D {
                    return Err(Error::InvalidShape("semi-axes dimension mismatch".into()));
                }
                Self::superellipse(
                    Point::<D>::from_column_slice(center),
                    Point::<D>::from_column_slice(semi_axes),
                    *exponent,
                )
            }
        }
    }

    pub fn descriptor(&self) -> ShapeDescriptor {
        match &self.kind {
            ShapeKind::Ball { center, radius } => ShapeDescriptor::Circle {
                center: center.iter().copied().collect(),
                radius: *radius,
            },
            ShapeKind::Superellipse { center, semi_axes, exponent } => ShapeDescriptor::Superellipse {
                center: center.iter().copied().collect(),
                semi_axes: semi_axes.iter().copied().collect(),
                exponent: *exponent,
            },
        }
    }

    pub fn kind(&self) -> &ShapeKind<D> {
        &self.kind
    }

    pub fn center(&self) -> Point<D> {
        match &self.kind {
            ShapeKind::Ball { center, .. } | ShapeKind::Superellipse { center, .. } => *center,
        }
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    /// `a* = min(a1, a2)`.
    pub fn a_star(&self) -> f64 {
        self.a1.min(self.a2)
    }

    /// Admissible height interval `[-a*/10, a*/10]` (endpoints included).
    pub fn height_band(&self) -> (f64, f64) {
        let b = self.a_star() / 10.0;
        (-b, b)
    }

    /// Level-set function, negative inside the inclusion.
    pub fn level_set(&self, y: &Point<D>) -> f64 {
        match &self.kind {
            ShapeKind::Ball { center, radius } => (y - center).norm() - radius,
            ShapeKind::Superellipse { center, semi_axes, exponent } => {
                (0..D)
                    .map(|i| ((y[i] - center[i]) / semi_axes[i]).abs().powf(*exponent))
                    .sum::<f64>()
                    - 1.0
            }
        }
    }

    fn level_set_gradient(&self, y: &Point<D>) -> Point<D> {
        match &self.kind {
            ShapeKind::Ball { center, .. } => {
                let v = y - center;
                let n = v.norm();
                if n > 0.0 {
                    v / n
                } else {
                    Point::<D>::zeros()
                }
            }
            ShapeKind::Superellipse { center, semi_axes, exponent } => Point::<D>::from_fn(|i, _| {
                let t = (y[i] - center[i]) / semi_axes[i];
                exponent * t.abs().powf(exponent - 1.0) * t.signum() / semi_axes[i]
            }),
        }
    }

    fn level_set_hessian(&self, y: &Point<D>) -> Tensor<D> {
        match &self.kind {
            ShapeKind::Ball { center, .. } => {
                let v = y - center;
                let r = v.norm();
                let n = v / r;
                (Tensor::<D>::identity() - n * n.transpose()) / r
            }
            ShapeKind::Superellipse { center, semi_axes, exponent } => {
                let p = *exponent;
                Tensor::<D>::from_fn(|i, j| {
                    if i != j {
                        return 0.0;
                    }
                    let t = (y[i] - center[i]) / semi_axes[i];
                    p * (p - 1.0) * t.abs().powf(p - 2.0) / (semi_axes[i] * semi_axes[i])
                })
            }
        }
    }

    fn surface_residual(&self, gamma: &Point<D>) -> f64 {
        self.level_set(gamma).abs()
    }

    fn ensure_on_surface(&self, gamma: &Point<D>) -> Result<()> {
        let residual = self.surface_residual(gamma);
        if residual > SURFACE_TOL {
            return Err(Error::OffSurface { residual });
        }
        Ok(())
    }

    pub fn in_band(&self, distance: f64) -> bool {
        -self.a1 < distance && distance < self.a2
    }

    /// Closest point on Γ together with the signed distance.
    pub fn project(&self, y: &Point<D>) -> Result<Projection<D>> {
        match &self.kind {
            ShapeKind::Ball { center, radius } => {
                let v = y - center;
                let rho = v.norm();
                let distance = rho - radius;
                let point = if rho > 0.0 {
                    center + v * (radius / rho)
                } else {
                    // Every boundary point is closest; pick a fixed one.
                    let mut e = Point::<D>::zeros();
                    e[0] = *radius;
                    center + e
                };
                Ok(Projection { point, distance, in_band: self.in_band(distance) })
            }
            ShapeKind::Superellipse { .. } => self.project_superellipse(y),
        }
    }

    /// Signed distance to Γ (positive in `Y*`). The flag reports whether the
    /// value is exact (inside the band) or a conservative estimate.
    pub fn signed_distance(&self, y: &Point<D>) -> Result<(f64, bool)> {
        let p = self.project(y)?;
        Ok((p.distance, p.in_band))
    }

    /// Unit normal at `gamma ∈ Γ`, pointing from `Z` into `Y*`.
    pub fn normal(&self, gamma: &Point<D>) -> Result<Point<D>> {
        self.ensure_on_surface(gamma)?;
        Ok(self.unit_gradient(gamma))
    }

    fn unit_gradient(&self, y: &Point<D>) -> Point<D> {
        let g = self.level_set_gradient(y);
        g / g.norm()
    }

    /// Weingarten map `L_Γ = -D²d` restricted to the tangent space, so that a
    /// circle of radius `r` has tangential eigenvalue `-1/r`. The normal is in
    /// the kernel.
    pub fn shape_tensor(&self, gamma: &Point<D>) -> Result<Tensor<D>> {
        self.ensure_on_surface(gamma)?;
        Ok(self.shape_tensor_unchecked(gamma))
    }

    pub(crate) fn shape_tensor_unchecked(&self, gamma: &Point<D>) -> Tensor<D> {
        let g = self.level_set_gradient(gamma);
        let gn = g.norm();
        let n = g / gn;
        let proj = Tensor::<D>::identity() - n * n.transpose();
        let l = -(proj * self.level_set_hessian(gamma) * proj) / gn;
        (l + l.transpose()) * 0.5
    }

    /// `κ(h, γ) = tr[(Id - h L_Γ)⁻¹ L_Γ]`, defined for `|h| < a*/2`.
    pub fn curvature(&self, h: f64, gamma: &Point<D>) -> Result<f64> {
        let limit = self.a_star() / 2.0;
        if !(h.abs() < limit) {
            return Err(Error::Admissibility { h, lo: -limit, hi: limit });
        }
        let l = self.shape_tensor(gamma)?;
        Ok(offset_curvature(&l, h))
    }

    /// `M(γ, s) = (Id - s L_Γ(γ))⁻¹`.
    pub fn offset_inverse(&self, gamma: &Point<D>, s: f64) -> Result<Tensor<D>> {
        let l = self.shape_tensor(gamma)?;
        (Tensor::<D>::identity() - l * s).try_inverse().ok_or(Error::Singular)
    }

    /// Surface Jacobian of the offset map `γ ↦ γ + h n(γ)`: `det(Id - h L_Γ)`
    /// (the normal direction contributes a unit factor since `L_Γ n = 0`).
    pub fn offset_area_factor(&self, gamma: &Point<D>, h: f64) -> Result<f64> {
        let l = self.shape_tensor(gamma)?;
        Ok((Tensor::<D>::identity() - l * h).determinant())
    }

    /// Dense sampling of Γ as ordered points (closed polygon in 2D).
    pub fn boundary_samples(&self, count: usize) -> Vec<Point<D>> {
        directions::<D>(count).into_iter().map(|w| self.radial_point(&w)).collect()
    }

    /// Point of Γ on the ray from the center in direction `w`.
    pub fn radial_point(&self, w: &Point<D>) -> Point<D> {
        let w = w.normalize();
        match &self.kind {
            ShapeKind::Ball { center, radius } => center + w * *radius,
            ShapeKind::Superellipse { center, semi_axes, exponent } => {
                let s: f64 = (0..D).map(|i| (w[i] / semi_axes[i]).abs().powf(*exponent)).sum();
                let t = s.powf(-1.0 / exponent);
                let mut p = center + w * t;
                // One Newton polish along the ray for a tight level-set residual.
                for _ in 0..3 {
                    let f = self.level_set(&p);
                    let df = self.level_set_gradient(&p).dot(&w);
                    if df.abs() > 0.0 {
                        p -= w * (f / df);
                    }
                }
                p
            }
        }
    }

    fn sample_boundary(&self) -> Vec<Point<D>> {
        let count = if D == 2 { SAMPLES_2D } else { SAMPLES_3D };
        self.boundary_samples(count)
    }

    /// Largest interior/exterior ball radii over the boundary sampling; the
    /// exterior radius is also capped by the distance to the cell boundary.
    fn estimate_tubular_radii(&self) -> (f64, f64) {
        let normals: Vec<Point<D>> = self.samples.iter().map(|p| self.unit_gradient(p)).collect();
        let mut inner = f64::INFINITY;
        let mut outer = f64::INFINITY;
        for (i, (p, n)) in self.samples.iter().zip(&normals).enumerate() {
            // Local curvature radius from the Weingarten map.
            let l = self.shape_tensor_unchecked(p);
            let k = spectral_radius(&l);
            if k > 0.0 {
                inner = inner.min(1.0 / k);
                outer = outer.min(1.0 / k);
            }
            for (j, q) in self.samples.iter().enumerate() {
                if i == j {
                    continue;
                }
                let delta = q - p;
                let along = delta.dot(n);
                let r = delta.norm_squared() / (2.0 * along.abs());
                if along < 0.0 {
                    inner = inner.min(r);
                } else if along > 0.0 {
                    outer = outer.min(r);
                }
            }
            let wall = p.iter().map(|&c| c.min(1.0 - c)).fold(f64::INFINITY, f64::min);
            outer = outer.min(wall);
        }
        (inner, outer)
    }

    fn check_spectral_radius(&self) -> Result<()> {
        let s = self.a1.max(self.a2) / 2.0;
        let probe: Vec<Point<D>> = match self.kind {
            ShapeKind::Ball { .. } => self.boundary_samples(if D == 2 { 16 } else { 32 }),
            ShapeKind::Superellipse { .. } => self.samples.clone(),
        };
        for p in &probe {
            let rho = spectral_radius(&self.shape_tensor_unchecked(p));
            if s * rho >= 1.0 {
                return Err(Error::InvalidShape(format!(
                    "offset band too wide for curvature: |s|·‖L‖ = {} at {:?}",
                    s * rho,
                    p.as_slice()
                )));
            }
        }
        Ok(())
    }

    fn project_superellipse(&self, y: &Point<D>) -> Result<Projection<D>> {
        let (seed, seed_dist) = self
            .samples
            .iter()
            .map(|p| (*p, (p - y).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("superellipse samples are populated");
        let sign = if self.level_set(y) >= 0.0 { 1.0 } else { -1.0 };

        match self.newton_projection(y, seed) {
            Some(point) => {
                let distance = sign * (y - point).norm();
                Ok(Projection { point, distance, in_band: self.in_band(distance) })
            }
            None => {
                // Far from Γ the closest point may be ill-defined; report the
                // sampled estimate as out of band when it is clearly so.
                let spacing = self.sample_spacing();
                let lower = (seed_dist - spacing).max(0.0);
                if lower >= self.a1.max(self.a2) {
                    Ok(Projection { point: seed, distance: sign * lower, in_band: false })
                } else {
                    Err(Error::ProjectionFailure { iterations: NEWTON_MAX_ITER })
                }
            }
        }
    }

    fn sample_spacing(&self) -> f64 {
        let n = self.samples.len();
        (0..n)
            .map(|i| (self.samples[i] - self.samples[(i + 1) % n]).norm())
            .fold(0.0, f64::max)
    }

    /// Newton on the Lagrange system `γ + λ∇ρ(γ) = y`, `ρ(γ) = 0`.
    fn newton_projection(&self, y: &Point<D>, seed: Point<D>) -> Option<Point<D>> {
        let mut gamma = seed;
        let g0 = self.level_set_gradient(&gamma);
        let mut lambda = (y - gamma).dot(&g0) / g0.norm_squared();
        let scale = 1.0 + y.norm();
        let residual = |gamma: &Point<D>, lambda: f64| -> (DVector<f64>, f64) {
            let g = self.level_set_gradient(gamma);
            let mut r = DVector::<f64>::zeros(D + 1);
            for i in 0..D {
                r[i] = gamma[i] + lambda * g[i] - y[i];
            }
            r[D] = self.level_set(gamma);
            let norm = r.norm();
            (r, norm)
        };
        let (mut r, mut rnorm) = residual(&gamma, lambda);
        for _ in 0..NEWTON_MAX_ITER {
            if rnorm <= 1e-15 * scale {
                return Some(gamma);
            }
            let g = self.level_set_gradient(&gamma);
            let hess = self.level_set_hessian(&gamma);
            let mut jac = DMatrix::<f64>::zeros(D + 1, D + 1);
            for i in 0..D {
                for j in 0..D {
                    jac[(i, j)] = if i == j { 1.0 } else { 0.0 } + lambda * hess[(i, j)];
                }
                jac[(i, D)] = g[i];
                jac[(D, i)] = g[i];
            }
            let step = jac.lu().solve(&(-&r))?;
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = gamma + Point::<D>::from_fn(|i, _| alpha * step[i]);
                let cand_lambda = lambda + alpha * step[D];
                let (cr, cn) = residual(&cand, cand_lambda);
                if cn < rnorm || cn <= 1e-15 * scale {
                    gamma = cand;
                    lambda = cand_lambda;
                    r = cr;
                    rnorm = cn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // Stagnation at round-off level still counts as converged.
                return (rnorm <= 1e-12 * scale).then_some(gamma);
            }
        }
        (rnorm <= 1e-12 * scale).then_some(gamma)
    }
}

/// Trace of `(Id - h L)⁻¹ L`.
pub fn offset_curvature<const D: usize>(l: &Tensor<D>, h: f64) -> f64
where
    Const<D>: DimMin<Const<D>, Output = Const<D>>,
{
    let m = (Tensor::<D>::identity() - l * h).try_inverse().expect("offset map is regular in the band");
    (m * l).trace()
}

/// Largest absolute eigenvalue of a symmetric tensor.
pub fn spectral_radius<const D: usize>(m: &Tensor<D>) -> f64 {
    symmetric_eigenvalues(m).iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// Eigenvalues of a small symmetric tensor, ascending.
pub fn symmetric_eigenvalues<const D: usize>(m: &Tensor<D>) -> Vec<f64> {
    let dm = DMatrix::<f64>::from_fn(D, D, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Roughly uniform unit directions: equally spaced angles in 2D, a Fibonacci
/// lattice on the sphere in 3D.
fn directions<const D: usize>(count: usize) -> Vec<Point<D>> {
    match D {
        2 => (0..count)
            .map(|i| {
                let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
                Point::<D>::from_fn(|k, _| if k == 0 { a.cos() } else { a.sin() })
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    let v = [r * a.cos(), r * a.sin(), z];
                    Point::<D>::from_fn(|k, _| v[k])
                })
                .collect()
        }
        _ => panic!("shapes are supported in 2 and 3 dimensions"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{Vector2, Vector3};

    fn circle() -> Shape<2> {
        Shape::ball(Vector2::new(0.5, 0.5), 0.25).unwrap()
    }

    fn superellipse() -> Shape<2> {
        Shape::superellipse(Vector2::new(0.5, 0.5), Vector2::new(0.25, 0.25), 4.0).unwrap()
    }

    #[test]
    fn circle_radii_match_the_ball_example() {
        let s = circle();
        assert_eq!(s.a1(), 0.25);
        assert_abs_diff_eq!(s.a2(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn circle_signed_distance_examples() {
        let s = circle();
        assert_abs_diff_eq!(s.signed_distance(&Vector2::new(0.5, 0.9)).unwrap().0, 0.15, epsilon = 1e-14);
        assert_abs_diff_eq!(s.signed_distance(&Vector2::new(0.75, 0.5)).unwrap().0, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.signed_distance(&Vector2::new(0.5, 0.6)).unwrap().0, -0.15, epsilon = 1e-14);
    }

    #[test]
    fn circle_projection_examples() {
        let s = circle();
        let p = s.project(&Vector2::new(0.5, 0.9)).unwrap();
        assert_abs_diff_eq!(p.point, Vector2::new(0.5, 0.75), epsilon = 1e-15);
        let q = s.project(&Vector2::new(0.75, 0.5)).unwrap();
        assert_abs_diff_eq!(q.point, Vector2::new(0.75, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn circle_normals() {
        let s = circle();
        assert_abs_diff_eq!(s.normal(&Vector2::new(0.75, 0.5)).unwrap(), Vector2::new(1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(s.normal(&Vector2::new(0.5, 0.75)).unwrap(), Vector2::new(0.0, 1.0), epsilon = 1e-15);
        assert!(matches!(s.normal(&Vector2::new(0.5, 0.8)), Err(Error::OffSurface { .. })));
    }

    #[test]
    fn superellipse_projection_matches_brute_force() {
        let s = superellipse();
        let y = Vector2::new(0.5, 0.9);
        let p = s.project(&y).unwrap();
        let n = s.normal(&p.point).unwrap();
        assert!((y - p.point - n * p.distance).norm() <= 1e-10);
        // Brute force over a much denser sampling.
        let dense = s.boundary_samples(200_000);
        let best = dense.iter().map(|g| (g - y).norm()).fold(f64::INFINITY, f64::min);
        assert!((best - p.distance.abs()).abs() < 1e-6);
    }

    #[test]
    fn superellipse_normal_is_normalized_gradient() {
        let s = superellipse();
        for g in s.boundary_samples(37) {
            let n = s.normal(&g).unwrap();
            let grad = s.level_set_gradient(&g);
            assert_abs_diff_eq!(n, grad / grad.norm(), epsilon = 1e-12);
            assert_abs_diff_eq!(n.norm(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn circle_and_sphere_shape_tensor() {
        let s = circle();
        for g in s.boundary_samples(12) {
            let l = s.shape_tensor(&g).unwrap();
            let n = s.normal(&g).unwrap();
            assert!((l * n).norm() < 1e-12);
            let ev = symmetric_eigenvalues(&l);
            assert_abs_diff_eq!(ev[0], -4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ev[1], 0.0, epsilon = 1e-12);
        }
        let sphere = Shape::<3>::ball(Vector3::new(0.5, 0.5, 0.5), 0.25).unwrap();
        for g in sphere.boundary_samples(20) {
            let ev = symmetric_eigenvalues(&sphere.shape_tensor(&g).unwrap());
            assert_abs_diff_eq!(ev[0], -4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ev[1], -4.0, epsilon = 1e-12);
            assert_abs_diff_eq!(ev[2], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn shape_tensor_matches_normal_finite_differences() {
        // L_Γ = -(tangential derivative of n); check along the tangent.
        for s in [circle(), superellipse()] {
            for g in s.boundary_samples(23) {
                let n = s.normal(&g).unwrap();
                let t = Vector2::new(-n[1], n[0]);
                let delta = 1e-6;
                let gp = s.project(&(g + t * delta)).unwrap().point;
                let gm = s.project(&(g - t * delta)).unwrap().point;
                let dn = (s.normal(&gp).unwrap() - s.normal(&gm).unwrap()) / (gp - gm).norm();
                let l = s.shape_tensor(&g).unwrap();
                assert!((l * t + dn).norm() < 1e-5, "{:?}", g);
            }
        }
    }

    #[test]
    fn curvature_examples() {
        let s = circle();
        let g = Vector2::new(0.75, 0.5);
        assert_abs_diff_eq!(s.curvature(0.0, &g).unwrap(), -4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.curvature(0.05, &g).unwrap(), -1.0 / 0.30, epsilon = 1e-12);
        let sphere = Shape::<3>::ball(Vector3::new(0.5, 0.5, 0.5), 0.25).unwrap();
        let g3 = Vector3::new(0.5, 0.75, 0.5);
        assert_abs_diff_eq!(sphere.curvature(0.05, &g3).unwrap(), -2.0 / 0.30, epsilon = 1e-12);
        assert!(matches!(s.curvature(0.2, &g), Err(Error::Admissibility { .. })));
    }

    #[test]
    fn superellipse_radii_are_sane() {
        let s = superellipse();
        assert!(s.a1() > 0.0 && s.a1() < 0.25);
        assert!(s.a2() > 0.0 && s.a2() <= 0.9 * 0.25 + 1e-12);
    }

    #[test]
    fn rejects_shapes_outside_the_cell() {
        assert!(Shape::<2>::ball(Vector2::new(0.5, 0.5), 0.5).is_err());
        assert!(Shape::<2>::superellipse(Vector2::new(0.5, 0.5), Vector2::new(0.6, 0.2), 4.0).is_err());
        assert!(Shape::<2>::superellipse(Vector2::new(0.5, 0.5), Vector2::new(0.2, 0.2), 2.0).is_err());
    }

    #[test]
    fn short_descriptor_parsing() {
        let d = ShapeDescriptor::parse_short("circle:0.25").unwrap();
        assert_eq!(d, ShapeDescriptor::Circle { center: vec![0.5, 0.5], radius: 0.25 });
        let e = ShapeDescriptor::parse_short("superellipse:0.25,0.2,4").unwrap();
        assert_eq!(e.dim(), 2);
        assert!(ShapeDescriptor::parse_short("blob:1").is_err());
    }
}
